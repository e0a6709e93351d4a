#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mwlab/arrivals.hpp"
#include "mwlab/errors.hpp"
#include "mwlab/mg1.hpp"
#include "mwlab/rng.hpp"

using namespace mwlab;

namespace {

// E[S] - 1 for pure zeta(2.5) service, which equals E[(S - 1)^+] since S >= 1.
constexpr double kZeta25ExcessMean = 0.94737246631695670006974341964;

// Exact law of W(t) by convolution, for service with bounded support.
std::vector<double> exact_means(double p, const std::vector<double>& service_pmf, std::int64_t horizon,
                                const std::vector<std::int64_t>& at) {
    const std::size_t cap = 4000;
    std::vector<double> work(service_pmf.size(), 0.0);
    for (std::size_t k = 0; k < service_pmf.size(); ++k) work[k] = p * service_pmf[k];
    work[0] += 1.0 - p;
    std::vector<double> w(cap, 0.0), next(cap, 0.0);
    w[0] = 1.0;
    std::vector<double> out;
    std::size_t j = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t x = 0; x < cap; ++x) {
            if (w[x] == 0.0) continue;
            for (std::size_t k = 0; k < work.size() && x + k < cap + 1; ++k) {
                const std::size_t y = x + k == 0 ? 0 : x + k - 1;
                next[std::min(y, cap - 1)] += w[x] * work[k];
            }
        }
        std::swap(w, next);
        if (j < at.size() && at[j] == t) {
            double m = 0;
            for (std::size_t x = 0; x < cap; ++x) m += static_cast<double>(x) * w[x];
            out.push_back(m);
            ++j;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("ladder layout") {
    CHECK(workload_ladder(10000) == std::vector<std::int64_t>{1000, 3162, 10000});
    CHECK(workload_ladder(20000) == std::vector<std::int64_t>{1000, 3162, 10000, 20000});
    CHECK(workload_ladder(1) == std::vector<std::int64_t>{1});
}

TEST_CASE("one slot of zeta service") {
    const double p = 0.102702489359037578682722197492;
    const auto tr = simulate_workload(p, ArrivalSpec(BernoulliZeta{1.0, 2.5}), 1, 200, 3);
    REQUIRE(tr.ladder == std::vector<std::int64_t>{1});
    CHECK(tr.mean_W[0] == doctest::Approx(p * kZeta25ExcessMean).epsilon(1e-9));
    CHECK(tr.service_tail == TailClass::heavy);
}

TEST_CASE("light-tailed service matches the exact distribution recursion") {
    // Geometric service with mean 1 on {0, 1, ...}, truncated where the mass is below 1e-18.
    std::vector<double> pmf;
    for (int k = 0; k < 64; ++k) pmf.push_back(std::ldexp(1.0, -(k + 1)));
    const std::vector<std::int64_t> at{10, 30, 100, 300, 1000};
    const auto exact = exact_means(0.6, pmf, 1000, at);
    WorkloadOptions o;
    o.ladder = at;
    const auto tr = simulate_workload(0.6, ArrivalSpec(Geometric{1.0}), 1000, 400, 11, o);
    for (std::size_t j = 0; j < at.size(); ++j) {
        CHECK(std::abs(tr.mean_W[j] - exact[j]) <= 3.5 * tr.stderr_W[j]);
        CHECK(std::abs(tr.direct_mean[j] - exact[j]) <= 3.5 * tr.direct_stderr[j]);
    }
}

TEST_CASE("Lindley coupling is monotone in the initial workload") {
    Philox g = substream(13, 0, StreamPurpose::test);
    const ArrivalSpec s(BernoulliZeta{0.1027, 2.5});
    for (int path = 0; path < 1000; ++path) {
        std::vector<std::int64_t> work(500);
        for (auto& w : work) w = sample(s, g);
        const auto lo = lindley_path(0, work);
        const auto hi = lindley_path(1 + static_cast<std::int64_t>(g.below(20)), work);
        REQUIRE(lo.size() == work.size() + 1);
        for (std::size_t t = 0; t < lo.size(); ++t) REQUIRE(hi[t] >= lo[t]);
    }
    CHECK(lindley_path(0, std::vector<std::int64_t>{3, 0, 0, 0, 0}) == std::vector<std::int64_t>{0, 2, 1, 0, 0, 0});
}

TEST_CASE("mean workload from empty is nondecreasing and keeps rising under heavy service") {
    const auto tr = simulate_workload(0.102702489359037578682722197492, ArrivalSpec(BernoulliZeta{1.0, 2.5}), 100000,
                                      200, 17);
    REQUIRE(tr.estimator == "conditional");
    for (std::size_t j = 1; j < tr.ladder.size(); ++j) {
        const double se = std::hypot(tr.stderr_W[j], tr.stderr_W[j - 1]);
        CHECK(tr.mean_W[j] >= tr.mean_W[j - 1] - 2 * se);
    }
    CHECK(tr.mean_W.back() > tr.mean_W.front());
}

TEST_CASE("deterministic unit service never builds workload") {
    const auto tr = simulate_workload(0.5, ArrivalSpec(Deterministic{{1}}), 1000000, 4, 19);
    CHECK(tr.mean_W.back() <= 2 * tr.mean_W.front());
    const auto fit = fit_scaling(tr, 0.45);
    CHECK(fit.saturated);
    CHECK_FALSE(fit.beta.has_value());
    CHECK_FALSE(fit.pass.has_value());
}

TEST_CASE("preconditions") {
    const ArrivalSpec z(BernoulliZeta{1.0, 2.5});
    CHECK_THROWS_AS(simulate_workload(0.6, z, 1000, 2, 1), ConfigError);
    CHECK_THROWS_AS(simulate_workload(0.5, ArrivalSpec(Deterministic{{1, 2}}), 1000, 2, 1), ConfigError);
    WorkloadOptions o;
    o.ladder = {10, 100, 1000};
    const auto tr = simulate_workload(0.1, z, 1000, 2, 1, o);
    CHECK_THROWS_AS(fit_scaling(tr, 0.45), ConfigError);
}

TEST_CASE("initial workload switches to the direct estimator") {
    WorkloadOptions o;
    o.initial_workload = 50;
    const auto tr = simulate_workload(0.5, ArrivalSpec(Deterministic{{1}}), 1000, 3, 1, o);
    CHECK(tr.estimator == "direct");
    // With unit work per customer the backlog drains at rate 1 - p.
    CHECK(tr.mean_W.front() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("csv layout") {
    WorkloadOptions o;
    o.ladder = {1, 2};
    const auto tr = simulate_workload(0.5, ArrivalSpec(Deterministic{{1}}), 2, 2, 1, o);
    std::ostringstream out;
    write_workload_csv(out, tr);
    CHECK(out.str() == "t,mean_W,stderr,replications\n1,0,0,2\n2,0,0,2\n");
}

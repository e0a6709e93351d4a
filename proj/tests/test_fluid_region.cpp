#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <sstream>

#include "mwlab/errors.hpp"
#include "mwlab/fluid.hpp"
#include "mwlab/region.hpp"
#include "mwlab/rng.hpp"

using namespace mwlab;

namespace {

using Rates = std::array<double, 3>;

// Uniform draws on (0, 1)^3 kept only inside the stability region.
std::vector<Rates> random_stable_rates(std::size_t n, std::uint64_t seed) {
    Philox g = substream(seed, 0, StreamPurpose::test);
    std::vector<Rates> out;
    while (out.size() < n) {
        Rates l{};
        for (auto& x : l) x = g.uniform_pos();
        if (std::max(l[0], l[1]) + l[2] < 1.0) out.push_back(l);
    }
    return out;
}

}  // namespace

TEST_CASE("fluid trajectory above the threshold") {
    const Rates l{0.2, 0.6, 0.3};
    const auto f = fluid_burst(l, 1e4);
    CHECK(f.T1 == doctest::Approx(1e4 / 1.1).epsilon(1e-14));
    CHECK(f.q3_T1 == doctest::Approx(0.3e4 / 1.1).epsilon(1e-14));
    CHECK(f.q1_T1 == doctest::Approx(1e4 - 0.8e4 / 1.1).epsilon(1e-14));
    CHECK(f.mu[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.mu[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.mu[2] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(f.q2_growth_rate == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(f.T2 - f.T1 == doctest::Approx(1e4 / 1.1).epsilon(1e-12));
    CHECK(f.q2_peak == doctest::Approx(1e3 / 1.1).epsilon(1e-12));
    CHECK(f.phase2_emptier == Emptier::queue1);
    CHECK(f.queue2_grows);
    // At T2 queue 3 equals queue 1 plus queue 2.
    const double q3_T2 = f.q3_T1 - (f.mu[2] - l[2]) * (f.T2 - f.T1);
    CHECK(q3_T2 == doctest::Approx(f.q2_peak).epsilon(1e-12));
}

TEST_CASE("fluid trajectory below the threshold keeps queue 2 empty") {
    const Rates l{0.2, 0.4, 0.3};
    const auto f = fluid_burst(l, 1e4);
    CHECK(f.q2_growth_rate == 0.0);
    CHECK(f.q2_peak == 0.0);
    CHECK_FALSE(f.queue2_grows);
    CHECK(f.q2_departure_rate == doctest::Approx(0.4));
    CHECK(f.mu[0] + f.mu[2] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.mu[0] == f.mu[1]);
    CHECK(f.mu[0] >= 0.4);
}

TEST_CASE("zero burst") {
    const auto f = fluid_burst(Rates{0.2, 0.6, 0.3}, 0.0);
    CHECK(f.T1 == 0.0);
    CHECK(f.T2 == 0.0);
    CHECK(f.q1_T1 == 0.0);
    CHECK(f.q3_T1 == 0.0);
    CHECK(f.q2_peak == 0.0);
}

TEST_CASE("fluid rejects rates outside the region") {
    CHECK_THROWS_AS(fluid_burst(Rates{0.6, 0.1, 0.5}, 1e4), DomainError);
    CHECK_THROWS_AS(fluid_burst(Rates{0.0, 0.1, 0.5}, 1e4), DomainError);
    CHECK_THROWS_AS(fluid_burst(Rates{0.2, 0.6, 0.3}, -1.0), DomainError);
}

TEST_CASE("q2 peak is linear in b") {
    const Rates l{0.2, 0.6, 0.3};
    for (double b : {1.0, 37.0, 1e4, 3.3e6}) {
        CHECK(fluid_burst(l, 2 * b).q2_peak == 2 * fluid_burst(l, b).q2_peak);
    }
}

TEST_CASE("threshold identity over random stable rates") {
    std::size_t grows = 0;
    for (const auto& l : random_stable_rates(10000, 7)) {
        const auto f = fluid_burst(l, 1e4);
        const auto v = classify(l);
        const bool above = l[1] > (1 + l[0] - l[2]) / 2;
        REQUIRE((f.q2_growth_rate > 0) == above);
        REQUIRE((v.queue_verdicts[1] == QueueVerdict::delay_unstable) == above);
        REQUIRE(f.mu[0] == f.mu[1]);
        REQUIRE(std::abs(f.mu[0] + f.mu[2] - 1.0) < 1e-12);
        if (f.queue2_grows) {
            ++grows;
            REQUIRE(std::abs((l[0] + l[1] - f.mu[0] - f.mu[1]) - (l[2] - f.mu[2])) < 1e-12);
        }
        if (l[1] < 1) REQUIRE(std::abs(f.q3_T1 - f.q1_T1) <= 1e-9 * (1 + f.q3_T1));
    }
    CHECK(grows > 1000);
}

TEST_CASE("stability region examples") {
    CHECK(in_stability_region(Rates{0.4, 0.5, 0.4}).stable);
    CHECK_FALSE(in_stability_region(Rates{0.6, 0.1, 0.5}).stable);
    CHECK_FALSE(in_stability_region(Rates{0.5, 0.5, 0.5}).stable);
    CHECK_FALSE(in_stability_region(Rates{0.5, 0.5, 0.5}).witness);
    CHECK_THROWS_AS(in_stability_region(Rates{0.0, 0.5, 0.1}), DomainError);
    CHECK_THROWS_AS(in_stability_region(std::array<double, 2>{0.1, 0.1}), DomainError);
}

TEST_CASE("witnesses satisfy the defining inequalities") {
    for (const auto& l : random_stable_rates(10000, 8)) {
        const auto r = in_stability_region(l);
        REQUIRE(r.stable);
        REQUIRE(r.witness);
        const auto& w = *r.witness;
        REQUIRE(std::max(l[0], l[1]) <= w.mu12);
        REQUIRE(l[2] <= w.mu3);
        REQUIRE(w.mu12 + w.mu3 < 1.0);
        REQUIRE(w.mu12 >= 0.0);
        REQUIRE(w.mu3 >= 0.0);
    }
}

TEST_CASE("delay-stability verdicts") {
    const auto up = classify(Rates{0.2, 0.6, 0.3});
    CHECK(up.threshold == doctest::Approx(0.45));
    CHECK(up.queue_verdicts[0] == QueueVerdict::delay_unstable);
    CHECK(up.queue_verdicts[1] == QueueVerdict::delay_unstable);
    CHECK(up.queue_verdicts[2] == QueueVerdict::delay_unstable);
    CHECK(classify(Rates{0.2, 0.4, 0.3}).queue_verdicts[1] == QueueVerdict::delay_stable);
    CHECK(classify(Rates{0.2, 0.45, 0.3}).queue_verdicts[1] == QueueVerdict::boundary);
    const auto out = classify(Rates{0.6, 0.1, 0.5});
    CHECK_FALSE(out.stable);
    for (auto v : out.queue_verdicts) CHECK(v == QueueVerdict::not_applicable);
}

TEST_CASE("small bursts are flagged rather than judged") {
    BurstOptions o;
    o.seeds = 3;
    const auto c = compare_to_simulation(Rates{0.2, 0.6, 0.3}, 100, 5, o);
    CHECK(c.high_variance);
    CHECK_FALSE(c.pass.has_value());
    CHECK(c.runs.size() == 3);
    std::ostringstream csv;
    write_burst_csv(csv, c);
    CHECK(csv.str().rfind("seed,T1_hat,err_T1,mu2_hat,err_mu2,q2_peak_over_b\n", 0) == 0);
}

TEST_CASE("burst below the threshold shows no linear queue-2 growth") {
    BurstOptions o;
    o.seeds = 5;
    const auto c = compare_to_simulation(Rates{0.2, 0.4, 0.3}, 100000, 9, o);
    CHECK(c.complete_runs == 5);
    CHECK(c.median_q2_over_b < 0.01);
}

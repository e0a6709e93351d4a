#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mwlab/arrivals.hpp"
#include "mwlab/core.hpp"
#include "mwlab/errors.hpp"
#include "mwlab/estimators.hpp"

using namespace mwlab;

namespace {

TruncatedMeanCurve make_curve(std::vector<double> est, std::vector<double> se) {
    TruncatedMeanCurve c;
    c.ladder = geometric_ladder(64, 2, est.size());
    c.estimates = std::move(est);
    c.stderrs = std::move(se);
    c.cycles = 1000;
    return c;
}

// Single-queue toy trace with all-zero renewals wherever the value is 0.
TruncatedMeanCurve toy_curve(const std::vector<std::int64_t>& values, std::vector<std::int64_t> ladder) {
    TruncatedMeanAccumulator acc(std::move(ladder));
    for (auto v : values) {
        if (v == 0) acc.renewal();
        acc.observe(v);
    }
    return acc.curve();
}

}  // namespace

TEST_CASE("lyapunov function examples") {
    CHECK(lyapunov_V(QueueState({0, 0, 0}, 0)) == 0.0);
    CHECK(lyapunov_V(QueueState({1, 2, 10}, 0)) == 13.0);
    CHECK(lyapunov_V(QueueState({5, 2, 3}, 0)) == 6.0);
    CHECK_THROWS_AS(lyapunov_V(QueueState({1, 2}, 0)), ConfigError);
}

TEST_CASE("V vanishes exactly when Q2 = 0 and Q3 <= Q1") {
    for (std::int64_t a = 0; a < 6; ++a)
        for (std::int64_t b = 0; b < 6; ++b)
            for (std::int64_t c = 0; c < 12; ++c) {
                const std::int64_t q[3] = {a, b, c};
                const auto v = lyapunov_v(q);
                REQUIRE(v >= 0);
                REQUIRE((v == 0) == (b == 0 && c <= a));
            }
}

TEST_CASE("geometric ladder") {
    CHECK(geometric_ladder(64, 2, 4) == std::vector<std::int64_t>{64, 128, 256, 512});
    CHECK_THROWS_AS(geometric_ladder(0, 2, 3), ConfigError);
}

TEST_CASE("toy periodic trace") {
    std::vector<std::int64_t> trace;
    for (int i = 0; i < 300; ++i) trace.push_back(i % 3);
    const auto c = toy_curve(trace, {1, 10});
    CHECK(c.estimates[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(c.estimates[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(c.cycles == 99);
    CHECK_FALSE(c.inconclusive);
    CHECK(c.stderrs[1] == doctest::Approx(0.0));
}

TEST_CASE("no renewals is inconclusive and never fabricates a number") {
    const auto c = toy_curve(std::vector<std::int64_t>(100, 4), {1, 10});
    CHECK(c.inconclusive);
    CHECK(c.cycles == 0);
    for (double e : c.estimates) CHECK(std::isnan(e));
    CHECK(classify_divergence(c).verdict == Divergence::inconclusive);
}

TEST_CASE("simulated traces: monotone in M, ratio agrees with time average") {
    NetworkModel m;
    m.arrivals = {calibrate_rate(0.2, LawFamily::bernoulli_zeta, 2.5), ArrivalSpec(Bernoulli{0.4}),
                  ArrivalSpec(Bernoulli{0.3})};
    const auto ladder = geometric_ladder(1, 2, 12);
    TruncatedMeanAccumulator acc(ladder);
    std::vector<StepRecord> trace;
    run(m, 300000, 3, 0, [&](const StepRecord& r) {
        if (r.pre_lengths[0] == 0 && r.pre_lengths[1] == 0 && r.pre_lengths[2] == 0) acc.renewal();
        acc.observe(r.pre_lengths[1]);
        if (trace.size() < 50000) trace.push_back(r);
    });
    const auto c = acc.curve();
    REQUIRE(c.cycles >= 100);
    for (std::size_t j = 1; j < c.estimates.size(); ++j) REQUIRE(c.estimates[j] >= c.estimates[j - 1]);
    for (std::size_t j = 0; j < c.estimates.size(); ++j) {
        CHECK(std::abs(c.estimates[j] - c.time_average[j]) <= 3 * c.stderrs[j] + 1e-12);
    }
    const auto from_trace = truncated_mean(trace, 1, ladder);
    for (std::size_t j = 1; j < from_trace.estimates.size(); ++j) {
        REQUIRE(from_trace.estimates[j] >= from_trace.estimates[j - 1]);
    }
}

TEST_CASE("merging is order-independent in totals") {
    std::vector<std::int64_t> a, b;
    for (int i = 0; i < 500; ++i) a.push_back(i % 4);
    for (int i = 0; i < 700; ++i) b.push_back(i % 5);
    auto feed = [](TruncatedMeanAccumulator& acc, const std::vector<std::int64_t>& xs) {
        for (auto v : xs) {
            if (v == 0) acc.renewal();
            acc.observe(v);
        }
    };
    TruncatedMeanAccumulator x({2, 8}), y({2, 8}), xa({2, 8}), yb({2, 8});
    feed(xa, a);
    feed(yb, b);
    x.merge(xa);
    x.merge(yb);
    y.merge(yb);
    y.merge(xa);
    CHECK(x.cycles() == y.cycles());
    CHECK(x.curve().estimates == y.curve().estimates);
    CHECK_THROWS_AS(x.merge(TruncatedMeanAccumulator({2, 16})), ConfigError);
}

TEST_CASE("divergence classifier examples") {
    CHECK(classify_divergence(make_curve({1.00, 1.01, 1.01, 1.01}, {0.001, 0.001, 0.001, 0.001})).verdict ==
          Divergence::finite);
    const auto doubling = classify_divergence(make_curve({1, 2, 4, 8, 16, 32}, {0.05, 0.1, 0.2, 0.4, 0.8, 1.6}));
    CHECK(doubling.verdict == Divergence::diverging);
    CHECK(doubling.slope == doctest::Approx(1.0));
    CHECK(classify_divergence(make_curve({1.0, 1.3, 0.9, 1.2}, {0.5, 0.5, 0.5, 0.5})).verdict ==
          Divergence::inconclusive);
    CHECK(classify_divergence(make_curve({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0})).verdict == Divergence::inconclusive);
}

TEST_CASE("drift probe on a constant empty trace is inconclusive") {
    DriftProbe p(5);
    const std::vector<std::int64_t> zero{0, 0, 0};
    for (int i = 0; i < 1000; ++i) p.observe(zero);
    const auto r = p.report();
    CHECK(r.inconclusive);
    CHECK(r.all.samples == 0);
    CHECK(r.alpha == 30);
    CHECK_THROWS_AS(DriftProbe(0), ConfigError);
}

TEST_CASE("drift probe on a deterministic ramp") {
    // Q2 grows by one per slot, so V(t + T) - V(t) = 3T exactly.
    DriftProbe p(4);
    for (std::int64_t t = 0; t < 400; ++t) {
        const std::int64_t q[3] = {0, t, 0};
        p.observe(q);
    }
    const auto r = p.report();
    CHECK_FALSE(r.inconclusive);
    CHECK(r.all.mean == doctest::Approx(12.0));
    CHECK(r.case_queue2.mean == doctest::Approx(12.0));
    CHECK(r.case_queue3.samples == 0);
    // First qualifying slot has V = 3t > 24; last sample needs t + T < 400.
    CHECK(r.all.samples == 396 - 9);
}

TEST_CASE("merged probe is read-only") {
    DriftProbe a(2), b(2);
    const std::int64_t q[3] = {0, 0, 0};
    a.merge(b);
    CHECK_THROWS_AS(a.observe(q), SequenceError);
}

TEST_CASE("case-2 drift is nonnegative above the threshold") {
    // Start with a large third queue so the window sits in the case-2 region.
    NetworkModel m;
    m.arrivals = {calibrate_rate(0.2, LawFamily::bernoulli_zeta, 2.3), ArrivalSpec(Bernoulli{0.6}),
                  ArrivalSpec(Bernoulli{0.3})};
    m.initial_lengths = {0, 0, 2000};
    DriftProbe pooled(200);
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
        DriftProbe p(200);
        run(m, 2000, 17, rep, [&](const StepRecord& r) { p.observe(r.pre_lengths); });
        pooled.merge(p);
    }
    const auto r = pooled.report();
    REQUIRE(r.case_queue3.samples > 1000);
    CHECK(r.case_queue3.mean >= 0.0);
}

TEST_CASE("tail classifier: geometric sample") {
    Philox g = substream(41, 0, StreamPurpose::test);
    const ArrivalSpec law(Geometric{5.0});
    std::vector<std::int64_t> xs(100000);
    for (auto& x : xs) x = sample(law, g);
    const auto r = tail_classify(xs);
    CHECK(r.classification == TailShape::geometric_like);
    CHECK(r.exceedances >= 1000);
    // Decay rate per unit is -log(5/6).
    CHECK(r.fitted_exponent == doctest::Approx(std::log(6.0 / 5.0)).epsilon(0.1));
}

TEST_CASE("tail classifier: zeta sample") {
    Philox g = substream(42, 0, StreamPurpose::test);
    const ArrivalSpec law(BernoulliZeta{1.0, 2.5});
    std::vector<std::int64_t> xs(100000);
    for (auto& x : xs) x = sample(law, g);
    const auto r = tail_classify(xs);
    CHECK(r.classification == TailShape::power_like);
    CHECK(r.hill_index == doctest::Approx(1.5).epsilon(0.1));
}

TEST_CASE("tail classifier gates on sample size") {
    std::vector<std::int64_t> xs;
    for (int i = 0; i < 50; ++i) xs.push_back(i);
    CHECK(tail_classify(xs).classification == TailShape::inconclusive);
    CHECK(tail_classify(Histogram{}).classification == TailShape::inconclusive);
}

TEST_CASE("histogram accumulator matches a direct count") {
    HistogramAccumulator a, b;
    std::vector<std::int64_t> xs{0, 3, 3, 70000, 5, 70000, 1};
    for (std::size_t i = 0; i < xs.size(); ++i) (i % 2 ? a : b).add(xs[i]);
    a.merge(b);
    CHECK(a.histogram() == histogram_of(xs));
}

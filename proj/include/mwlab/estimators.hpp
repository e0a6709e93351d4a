#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mwlab/core.hpp"

namespace mwlab {

// V(t) = 3 Q2 + [Q3 - Q1 - Q2]^+ for the three-queue network.
std::int64_t lyapunov_v(std::span<const std::int64_t> lengths);
double lyapunov_V(const QueueState& state);

// Geometric ladder {first, first*ratio, ...} with `count` points.
std::vector<std::int64_t> geometric_ladder(std::int64_t first, std::int64_t ratio, std::size_t count);

struct TruncatedMeanCurve {
    std::vector<std::int64_t> ladder;
    std::vector<double> estimates;      // renewal-reward ratio per truncation level
    std::vector<double> stderrs;        // cycle bootstrap
    std::vector<double> time_average;   // plain time average over every observation
    std::int64_t cycles = 0;            // complete renewal cycles used
    std::int64_t observations = 0;
    bool inconclusive = false;
    std::string note;
};

// Renewal-reward accumulator for E[min{X, M}] over a ladder of M values.
//
// Observations arrive in time order; renewal() marks the start of a new
// cycle at the next observation. Only complete cycles (renewal to renewal)
// enter the ratio estimator; the time average uses everything. Cycles are
// grouped into at most 2 * kMaxUnits batches of consecutive cycles, which
// keeps memory bounded while preserving independence between batches.
class TruncatedMeanAccumulator {
public:
    static constexpr std::size_t kMaxUnits = 4096;
    static constexpr std::int64_t kMinCycles = 30;

    explicit TruncatedMeanAccumulator(std::vector<std::int64_t> ladder);

    void renewal();
    void observe(std::int64_t value);

    // Appends other's complete cycles and totals. Merging in a fixed order
    // gives identical results run to run.
    void merge(const TruncatedMeanAccumulator& other);

    TruncatedMeanCurve curve(std::uint64_t bootstrap_seed = 0x5eed, std::size_t resamples = 400) const;

    const std::vector<std::int64_t>& ladder() const { return ladder_; }
    std::int64_t cycles() const { return cycles_; }

private:
    void close_cycle();
    void push_unit();
    void compact();

    std::vector<std::int64_t> ladder_;
    std::size_t levels_;
    // Completed batches: per batch one length slot followed by one sum per level.
    std::vector<std::int64_t> units_;
    std::int64_t cycles_per_unit_ = 1;
    std::int64_t cycles_ = 0;
    // Batch being filled with complete cycles.
    std::vector<std::int64_t> pending_;
    std::int64_t pending_cycles_ = 0;
    // Cycle in progress.
    std::vector<std::int64_t> open_;
    bool in_cycle_ = false;
    // Time-average totals.
    std::vector<std::int64_t> total_sums_;
    std::int64_t total_count_ = 0;
};

// Time series of one queue from a stored trace; a renewal epoch is a slot
// whose pre-step lengths are all zero.
TruncatedMeanCurve truncated_mean(std::span<const StepRecord> trace, std::size_t queue,
                                  std::span<const std::int64_t> ladder);

enum class Divergence { finite, diverging, inconclusive };
std::string_view to_string(Divergence d);

struct DivergenceReport {
    Divergence verdict = Divergence::inconclusive;
    double last_step_increase = 0.0;  // e_L / e_{L-1} - 1
    double slope = 0.0;               // log-log slope over the top half of the ladder
    double slope_ci_lo = 0.0;
    double slope_ci_hi = 0.0;
    double first_to_last_ratio = 0.0;
};

// Heuristic finite-sample surrogate for "E[X] is infinite":
//   finite     last-step relative increase < 5% and slope CI reaches down to
//              saturation (lower bound < 0.05);
//   diverging  top-half log-log slope > 0.2 with CI excluding 0;
//   otherwise inconclusive. Fewer than 4 ladder points is inconclusive.
DivergenceReport classify_divergence(const TruncatedMeanCurve& curve);

struct DriftStats {
    std::int64_t samples = 0;
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct DriftProbeReport {
    std::int64_t T = 0;
    std::int64_t alpha = 0;
    DriftStats all;
    DriftStats case_queue2;  // Q2(t) > T
    DriftStats case_queue3;  // Q3(t) > Q1(t) + Q2(t) + 3T
    bool inconclusive = true;
};

// Estimates E[V(t+T) - V(t) | V(t) > 6T] from overlapping windows. Feed the
// pre-step lengths of every slot in order. Confidence intervals come from a
// block bootstrap with blocks of 10T slots.
class DriftProbe {
public:
    explicit DriftProbe(std::int64_t T);

    void observe(std::span<const std::int64_t> lengths);
    // Appends other's blocks. A merged probe is read-only.
    void merge(const DriftProbe& other);
    DriftProbeReport report(std::uint64_t bootstrap_seed = 0xd81f7, std::size_t resamples = 1000) const;

    std::int64_t T() const { return T_; }
    std::int64_t alpha() const { return alpha_; }

private:
    struct Block {
        double sum[3] = {0, 0, 0};
        std::int64_t count[3] = {0, 0, 0};
    };
    struct Pending {
        std::int64_t v = 0;
        std::uint8_t cases = 0;  // bit0 qualifying, bit1 case 1, bit2 case 2
    };

    std::int64_t T_;
    std::int64_t alpha_;
    std::int64_t slot_ = 0;
    std::vector<Pending> ring_;
    std::vector<Block> blocks_;
    std::int64_t current_block_ = -1;
    bool merged_ = false;
};

DriftProbeReport drift_probe(std::span<const StepRecord> trace, std::int64_t T);

enum class TailShape { geometric_like, power_like, inconclusive };
std::string_view to_string(TailShape t);

struct TailReport {
    TailShape classification = TailShape::inconclusive;
    double fitted_exponent = 0.0;  // Hill tail index for power_like, decay rate per unit for geometric_like
    double hill_index = 0.0;
    double r2_geometric = 0.0;
    double r2_power = 0.0;
    std::int64_t threshold = 0;
    std::int64_t exceedances = 0;
    std::int64_t samples = 0;
};

using Histogram = std::map<std::int64_t, std::int64_t>;

Histogram histogram_of(std::span<const std::int64_t> values);

// Counts of nonnegative integers; dense for small values.
class HistogramAccumulator {
public:
    static constexpr std::int64_t kDense = 1 << 16;

    void add(std::int64_t v) {
        if (v >= 0 && v < kDense) {
            if (static_cast<std::size_t>(v) >= dense_.size()) dense_.resize(static_cast<std::size_t>(v) + 1, 0);
            ++dense_[static_cast<std::size_t>(v)];
        } else {
            ++sparse_[v];
        }
    }
    void merge(const HistogramAccumulator& other);
    Histogram histogram() const;

private:
    std::vector<std::int64_t> dense_;
    Histogram sparse_;
};

// Hill estimator of the tail index alpha in P(X > x) ~ x^{-alpha}, using the
// top `top_fraction` order statistics of integer data. Values are compared to
// the threshold minus one half, the continuity correction for integer data.
double hill_tail_index(const Histogram& hist, double top_fraction = 0.01);

// Compares straight-line fits of log-survival against x and against log x
// above the 90th percentile. Needs at least 1000 exceedances.
TailReport tail_classify(const Histogram& hist);
TailReport tail_classify(std::span<const std::int64_t> values);

}  // namespace mwlab

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace mwlab {

struct StabilityWitness {
    double mu12 = 0.0;  // service share of schedule (1,1,0)
    double mu3 = 0.0;   // service share of schedule (0,0,1)
};

struct StabilityResult {
    bool stable = false;
    double gap = 0.0;  // 1 - max(l1, l2) - l3; nonpositive means outside the region
    std::optional<StabilityWitness> witness;
};

// Rates are stabilisable iff max(l1, l2) <= mu12, l3 <= mu3 and mu12 + mu3 < 1
// for some nonnegative mu12, mu3, which reduces to max(l1, l2) + l3 < 1.
// Throws DomainError for a nonpositive rate or a vector that is not 3 long.
StabilityResult in_stability_region(std::span<const double> lambda);

// 2 l2 - (1 + l1 - l3): positive exactly when queue 2 is past the threshold.
// Magnitudes up to kThresholdTolerance count as equality, so that decimal
// inputs like (0.2, 0.45, 0.3) land on the boundary despite rounding.
inline constexpr double kThresholdTolerance = 1e-12;
double queue2_excess(std::span<const double> lambda);

enum class QueueVerdict { delay_stable, delay_unstable, boundary, not_applicable };
std::string_view to_string(QueueVerdict v);

struct RegionVerdict {
    bool stable = false;
    double threshold = 0.0;  // (1 + l1 - l3) / 2
    std::array<QueueVerdict, 3> queue_verdicts{QueueVerdict::not_applicable, QueueVerdict::not_applicable,
                                                QueueVerdict::not_applicable};
    std::optional<StabilityWitness> witness;
};

// Delay-stability verdicts with queue 1 heavy-tailed and queues 2, 3 light.
// Queues 1 and 3 are always delay unstable. Queue 2 is unstable above the
// threshold, stable below it, and `boundary` at equality.
RegionVerdict classify(std::span<const double> lambda, std::size_t heavy_queue = 1);

}  // namespace mwlab

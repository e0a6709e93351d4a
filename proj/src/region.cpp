#include "mwlab/region.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mwlab/errors.hpp"

namespace mwlab {

namespace {

void check_rates(std::span<const double> lambda) {
    if (lambda.size() != 3) throw DomainError("rate vector must have 3 entries, got " + std::to_string(lambda.size()));
    for (double l : lambda) {
        if (!(l > 0.0)) throw DomainError("arrival rates must be strictly positive");
    }
}

}  // namespace

std::string_view to_string(QueueVerdict v) {
    switch (v) {
        case QueueVerdict::delay_stable: return "delay_stable";
        case QueueVerdict::delay_unstable: return "delay_unstable";
        case QueueVerdict::boundary: return "boundary";
        case QueueVerdict::not_applicable: return "not_applicable";
    }
    return "not_applicable";
}

double queue2_excess(std::span<const double> lambda) {
    check_rates(lambda);
    const double e = 2.0 * lambda[1] - (1.0 + lambda[0] - lambda[2]);
    return std::abs(e) <= kThresholdTolerance ? 0.0 : e;
}

StabilityResult in_stability_region(std::span<const double> lambda) {
    check_rates(lambda);
    const double top = std::max(lambda[0], lambda[1]);
    StabilityResult r;
    r.gap = 1.0 - top - lambda[2];
    r.stable = r.gap > 0.0;
    if (r.stable) r.witness = StabilityWitness{top + r.gap / 2.0, lambda[2] + r.gap / 4.0};
    return r;
}

RegionVerdict classify(std::span<const double> lambda, std::size_t heavy_queue) {
    if (heavy_queue != 1) throw ConfigError("only queue 1 may carry the heavy-tailed stream");
    const auto s = in_stability_region(lambda);
    RegionVerdict v;
    v.stable = s.stable;
    v.witness = s.witness;
    v.threshold = (1.0 + lambda[0] - lambda[2]) / 2.0;
    if (!v.stable) return v;
    v.queue_verdicts[0] = QueueVerdict::delay_unstable;
    v.queue_verdicts[2] = QueueVerdict::delay_unstable;
    const double excess = queue2_excess(lambda);
    if (excess > 0.0) {
        v.queue_verdicts[1] = QueueVerdict::delay_unstable;
    } else if (excess < 0.0) {
        v.queue_verdicts[1] = QueueVerdict::delay_stable;
    } else {
        v.queue_verdicts[1] = QueueVerdict::boundary;
    }
    return v;
}

}  // namespace mwlab

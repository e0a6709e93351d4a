#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "mwlab/core.hpp"
#include "mwlab/estimators.hpp"

namespace mwlab {

struct NetworkRunOptions {
    std::int64_t horizon = 1'000'000;
    std::size_t replications = 1;
    std::uint64_t seed = 1;
    std::uint64_t first_replication = 0;
    unsigned threads = 1;
    std::vector<std::int64_t> ladder;  // empty: no truncated-mean curves
    bool delays = true;
    bool tail = true;
    std::int64_t drift_T = 0;           // 0: no drift probe
    std::ostream* trace_csv = nullptr;  // first replication only
    std::ostream* delays_csv = nullptr; // first replication only
};

// Everything one replication accumulates. Queue-length curves observe Q(t)
// once per slot; delay curves observe each file's delay at completion. Both
// share the renewal epochs Q(t) = 0, and every file completes inside the
// cycle it arrived in.
struct ReplicationStats {
    std::uint64_t replication = 0;
    std::vector<TruncatedMeanAccumulator> queue_curves;
    std::vector<TruncatedMeanAccumulator> delay_curves;
    std::vector<HistogramAccumulator> marginals;
    std::optional<DriftProbe> drift;
    std::vector<std::int64_t> final_lengths;
    std::vector<std::int64_t> completed_files;
};

struct NetworkRun {
    std::vector<ReplicationStats> replications;

    // Merge of all replications in index order.
    ReplicationStats pooled() const;
};

// Replication r runs Simulator(model, seed, first_replication + r).
// Results do not depend on the thread count.
NetworkRun run_network(const NetworkModel& model, const NetworkRunOptions& options);

}  // namespace mwlab

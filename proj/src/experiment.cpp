#include "mwlab/experiment.hpp"

#include <algorithm>

#include "mwlab/delay_tracker.hpp"
#include "mwlab/errors.hpp"
#include "mwlab/io.hpp"

namespace mwlab {

namespace {

void write_trace_header(std::ostream& out, std::size_t n) {
    CsvWriter csv(out);
    csv.field("slot");
    for (std::size_t i = 1; i <= n; ++i) csv.field("a" + std::to_string(i));
    csv.field("sched_idx");
    for (std::size_t i = 1; i <= n; ++i) csv.field("s" + std::to_string(i));
    for (std::size_t i = 1; i <= n; ++i) csv.field("q" + std::to_string(i));
    csv.end_row();
}

void write_trace_row(std::ostream& out, const StepRecord& r) {
    CsvWriter csv(out);
    csv.field(r.slot);
    for (auto a : r.arrivals) csv.field(a);
    csv.field(static_cast<std::uint64_t>(r.schedule_index));
    for (auto s : r.served) csv.field(static_cast<std::int64_t>(s));
    for (auto q : r.post_lengths) csv.field(q);
    csv.end_row();
}

ReplicationStats run_one(const NetworkModel& model, const NetworkRunOptions& opt, std::uint64_t rep, bool first) {
    const std::size_t n = model.num_queues();
    ReplicationStats st;
    st.replication = rep;
    const bool curves = !opt.ladder.empty();
    if (curves) {
        st.queue_curves.assign(n, TruncatedMeanAccumulator(opt.ladder));
        if (opt.delays) st.delay_curves.assign(n, TruncatedMeanAccumulator(opt.ladder));
    }
    if (opt.tail) st.marginals.resize(n);
    if (opt.drift_T > 0) st.drift.emplace(opt.drift_T);
    st.completed_files.assign(n, 0);

    std::ostream* trace = first ? opt.trace_csv : nullptr;
    std::ostream* delays = first ? opt.delays_csv : nullptr;
    const bool track = (curves && opt.delays) || delays;

    std::optional<DelayTracker> tracker;
    if (track) {
        tracker.emplace(n, model.initial_lengths, 0, false);
        tracker->set_completion_sink([&](const FileRecord& f) {
            ++st.completed_files[f.queue];
            if (curves && opt.delays) st.delay_curves[f.queue].observe(*f.delay);
            if (delays) {
                CsvWriter csv(*delays);
                csv.field(static_cast<std::uint64_t>(f.queue + 1)).field(f.k).field(f.arrival_slot).field(f.size);
                csv.field(*f.delay).end_row();
            }
        });
    }
    if (trace) write_trace_header(*trace, n);
    if (delays) CsvWriter(*delays).header({"queue", "k", "arrival_slot", "size", "delay"});

    Simulator sim(model, opt.seed, rep);
    for (std::int64_t t = 0; t < opt.horizon; ++t) {
        const StepRecord& r = sim.advance();
        const auto& q = r.pre_lengths;
        if (curves) {
            if (std::all_of(q.begin(), q.end(), [](auto v) { return v == 0; })) {
                for (auto& c : st.queue_curves) c.renewal();
                for (auto& c : st.delay_curves) c.renewal();
            }
            for (std::size_t i = 0; i < n; ++i) st.queue_curves[i].observe(q[i]);
        }
        if (opt.tail) {
            for (std::size_t i = 0; i < n; ++i) st.marginals[i].add(q[i]);
        }
        if (st.drift) st.drift->observe(q);
        if (tracker) tracker->on_step(r);
        if (trace) write_trace_row(*trace, r);
    }
    st.final_lengths = sim.state().lengths;
    return st;
}

}  // namespace

NetworkRun run_network(const NetworkModel& model, const NetworkRunOptions& options) {
    model.validate();
    if (options.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (options.replications < 1) throw ConfigError("need at least one replication");
    if (options.drift_T > 0 && model.num_queues() != 3) throw ConfigError("the drift probe needs exactly 3 queues");
    NetworkRun run;
    run.replications.resize(options.replications);
    parallel_for(options.replications, options.threads, [&](std::size_t r) {
        run.replications[r] = run_one(model, options, options.first_replication + r, r == 0);
    });
    return run;
}

ReplicationStats NetworkRun::pooled() const {
    if (replications.empty()) throw ConfigError("no replications to pool");
    ReplicationStats out = replications.front();
    for (std::size_t r = 1; r < replications.size(); ++r) {
        const auto& s = replications[r];
        for (std::size_t i = 0; i < out.queue_curves.size(); ++i) out.queue_curves[i].merge(s.queue_curves[i]);
        for (std::size_t i = 0; i < out.delay_curves.size(); ++i) out.delay_curves[i].merge(s.delay_curves[i]);
        for (std::size_t i = 0; i < out.marginals.size(); ++i) out.marginals[i].merge(s.marginals[i]);
        if (out.drift) out.drift->merge(*s.drift);
        for (std::size_t i = 0; i < out.completed_files.size(); ++i) out.completed_files[i] += s.completed_files[i];
    }
    return out;
}

}  // namespace mwlab

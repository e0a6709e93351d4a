#include "mwlab/core.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "mwlab/errors.hpp"

namespace mwlab {

ScheduleSet::ScheduleSet(std::size_t num_queues, std::vector<Schedule> schedules)
    : num_queues_(num_queues), schedules_(std::move(schedules)) {
    if (num_queues_ == 0) throw ConfigError("schedule set needs at least one queue");
    bool has_empty = false;
    for (std::size_t i = 0; i < schedules_.size(); ++i) {
        const auto& s = schedules_[i];
        if (s.size() != num_queues_) {
            throw ConfigError("schedule " + std::to_string(i) + " has length " + std::to_string(s.size()) +
                              ", expected " + std::to_string(num_queues_));
        }
        if (std::any_of(s.service.begin(), s.service.end(), [](auto v) { return v > 1; })) {
            throw ConfigError("schedule " + std::to_string(i) + " has an entry other than 0 or 1");
        }
        if (std::all_of(s.service.begin(), s.service.end(), [](auto v) { return v == 0; })) has_empty = true;
        for (std::size_t j = 0; j < i; ++j) {
            if (schedules_[j] == s) throw ConfigError("duplicate schedule at index " + std::to_string(i));
        }
    }
    if (!has_empty) throw ConfigError("schedule set must contain the all-zero schedule");
}

ScheduleSet ScheduleSet::three_queue() {
    return ScheduleSet(3, {Schedule{{0, 0, 0}}, Schedule{{1, 1, 0}}, Schedule{{0, 0, 1}}});
}

bool QueueState::empty_system() const {
    return std::all_of(lengths.begin(), lengths.end(), [](auto q) { return q == 0; });
}

std::size_t max_weight_select(const QueueState& state, const ScheduleSet& set, Philox& rng) {
    if (state.lengths.size() != set.num_queues()) {
        throw ConfigError("state has " + std::to_string(state.lengths.size()) + " queues, schedule set has " +
                          std::to_string(set.num_queues()));
    }
    std::int64_t best = -1;
    std::size_t first = 0;
    std::size_t ties = 0;
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& service = set[k].service;
        std::int64_t weight = 0;
        for (std::size_t i = 0; i < service.size(); ++i) {
            if (service[i]) weight += state.lengths[i];
        }
        if (weight > best) {
            best = weight;
            first = k;
            ties = 1;
        } else if (weight == best) {
            ++ties;
        }
    }
    if (ties == 1) return first;
    auto pick = rng.below(ties);
    for (std::size_t k = first; k < set.size(); ++k) {
        const auto& service = set[k].service;
        std::int64_t weight = 0;
        for (std::size_t i = 0; i < service.size(); ++i) {
            if (service[i]) weight += state.lengths[i];
        }
        if (weight == best && pick-- == 0) return k;
    }
    return first;  // unreachable
}

namespace {

void apply_dynamics(const std::vector<std::int64_t>& pre, std::span<const std::int64_t> arrivals,
                    const Schedule& schedule, std::vector<std::uint8_t>& served, std::vector<std::int64_t>& post) {
    const std::size_t n = pre.size();
    served.resize(n);
    post.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        served[i] = (schedule.service[i] && pre[i] > 0) ? 1 : 0;
        post[i] = pre[i] - served[i] + arrivals[i];
    }
}

void check_arrivals(std::span<const std::int64_t> arrivals, std::size_t n) {
    if (arrivals.size() != n) {
        throw ConfigError("arrival vector has " + std::to_string(arrivals.size()) + " entries, expected " +
                          std::to_string(n));
    }
    for (auto a : arrivals) {
        if (a < 0) throw ConfigError("arrivals must be nonnegative");
    }
}

}  // namespace

std::pair<QueueState, StepRecord> step(const QueueState& state, std::span<const std::int64_t> arrivals,
                                       const Schedule& schedule) {
    const std::size_t n = state.lengths.size();
    check_arrivals(arrivals, n);
    if (schedule.size() != n) throw ConfigError("schedule length does not match the state");
    StepRecord rec;
    rec.slot = state.slot;
    rec.arrivals.assign(arrivals.begin(), arrivals.end());
    rec.pre_lengths = state.lengths;
    apply_dynamics(rec.pre_lengths, arrivals, schedule, rec.served, rec.post_lengths);
    return {QueueState(rec.post_lengths, state.slot + 1), std::move(rec)};
}

void NetworkModel::validate() const {
    const std::size_t n = num_queues();
    if (arrivals.size() != n) {
        throw ConfigError("need one arrival spec per queue: got " + std::to_string(arrivals.size()) + " for " +
                          std::to_string(n) + " queues");
    }
    if (!initial_lengths.empty()) {
        if (initial_lengths.size() != n) throw ConfigError("initial_lengths has the wrong dimension");
        for (auto q : initial_lengths) {
            if (q < 0) throw ConfigError("initial lengths must be nonnegative");
        }
    }
}

Simulator::Simulator(NetworkModel model, std::uint64_t seed, std::uint64_t replication)
    : model_(std::move(model)),
      state_(model_.num_queues()),
      scheduler_rng_(substream(seed, replication, StreamPurpose::scheduler)) {
    model_.validate();
    if (!model_.initial_lengths.empty()) state_.lengths = model_.initial_lengths;
    sources_.reserve(model_.num_queues());
    for (std::size_t i = 0; i < model_.num_queues(); ++i) {
        sources_.emplace_back(model_.arrivals[i], substream(seed, replication, StreamPurpose::arrivals, i));
    }
    const std::size_t n = model_.num_queues();
    record_.arrivals.assign(n, 0);
    record_.served.assign(n, 0);
    record_.pre_lengths.assign(n, 0);
    record_.post_lengths.assign(n, 0);
}

const StepRecord& Simulator::advance() {
    const std::size_t k = max_weight_select(state_, model_.schedules, scheduler_rng_);
    for (std::size_t i = 0; i < sources_.size(); ++i) record_.arrivals[i] = sources_[i].next();
    return apply(k);
}

const StepRecord& Simulator::advance_with(std::span<const std::int64_t> arrivals) {
    check_arrivals(arrivals, model_.num_queues());
    const std::size_t k = max_weight_select(state_, model_.schedules, scheduler_rng_);
    std::copy(arrivals.begin(), arrivals.end(), record_.arrivals.begin());
    return apply(k);
}

const StepRecord& Simulator::advance_plus(std::span<const std::int64_t> extra) {
    check_arrivals(extra, model_.num_queues());
    const std::size_t k = max_weight_select(state_, model_.schedules, scheduler_rng_);
    for (std::size_t i = 0; i < sources_.size(); ++i) record_.arrivals[i] = sources_[i].next() + extra[i];
    return apply(k);
}

const StepRecord& Simulator::apply(std::size_t schedule_index) {
    record_.slot = state_.slot;
    record_.schedule_index = schedule_index;
    record_.pre_lengths = state_.lengths;
    apply_dynamics(record_.pre_lengths, record_.arrivals, model_.schedules[schedule_index], record_.served,
                   record_.post_lengths);
    state_.lengths = record_.post_lengths;
    ++state_.slot;
    return record_;
}

void run(const NetworkModel& model, std::int64_t horizon, std::uint64_t seed, std::uint64_t replication,
         const std::function<void(const StepRecord&)>& sink) {
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    Simulator sim(model, seed, replication);
    for (std::int64_t t = 0; t < horizon; ++t) sink(sim.advance());
}

}  // namespace mwlab

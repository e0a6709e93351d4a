#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mwlab/arrivals.hpp"
#include "mwlab/rng.hpp"

namespace mwlab {

// A 0/1 service vector: entry i is 1 when the server of queue i attempts a
// removal in the slot.
struct Schedule {
    std::vector<std::uint8_t> service;

    std::size_t size() const { return service.size(); }
    friend bool operator==(const Schedule&, const Schedule&) = default;
};

class ScheduleSet {
public:
    // Throws ConfigError unless every schedule is 0/1 of length num_queues,
    // the set has no duplicates, and it contains the all-zero schedule.
    ScheduleSet(std::size_t num_queues, std::vector<Schedule> schedules);

    // {(0,0,0), (1,1,0), (0,0,1)}: queues 1 and 2 together, or queue 3 alone.
    static ScheduleSet three_queue();

    std::size_t num_queues() const { return num_queues_; }
    std::size_t size() const { return schedules_.size(); }
    const Schedule& operator[](std::size_t i) const { return schedules_[i]; }
    const std::vector<Schedule>& schedules() const { return schedules_; }

    friend bool operator==(const ScheduleSet&, const ScheduleSet&) = default;

private:
    std::size_t num_queues_;
    std::vector<Schedule> schedules_;
};

struct QueueState {
    std::vector<std::int64_t> lengths;
    std::int64_t slot = 0;

    explicit QueueState(std::size_t num_queues = 0) : lengths(num_queues, 0) {}
    QueueState(std::vector<std::int64_t> l, std::int64_t t) : lengths(std::move(l)), slot(t) {}
    bool empty_system() const;
};

struct StepRecord {
    std::int64_t slot = 0;
    std::vector<std::int64_t> arrivals;
    std::size_t schedule_index = 0;
    std::vector<std::uint8_t> served;  // actual removals S_i(t) * 1{Q_i(t) > 0}
    std::vector<std::int64_t> pre_lengths;
    std::vector<std::int64_t> post_lengths;
};

// Max-Weight: returns the index of a schedule maximising sum_i Q_i S_i. When
// k > 1 schedules share the maximum, one uniform draw from rng picks among
// them; with a unique maximiser rng is untouched.
std::size_t max_weight_select(const QueueState& state, const ScheduleSet& set, Philox& rng);

// Slot dynamics: removals are resolved against the current lengths, then the
// slot's arrivals are appended.
std::pair<QueueState, StepRecord> step(const QueueState& state, std::span<const std::int64_t> arrivals,
                                       const Schedule& schedule);

// Everything one replication of the slotted network needs.
struct NetworkModel {
    ScheduleSet schedules = ScheduleSet::three_queue();
    std::vector<ArrivalSpec> arrivals;
    std::vector<std::int64_t> initial_lengths;  // empty means all zero

    std::size_t num_queues() const { return schedules.num_queues(); }
    void validate() const;
};

// Streaming simulator for one replication. Each call to advance() selects a
// schedule, draws the slot's arrivals and applies the dynamics. The returned
// record is reused by the next call.
class Simulator {
public:
    Simulator(NetworkModel model, std::uint64_t seed, std::uint64_t replication = 0);

    const StepRecord& advance();
    // Same as advance() but with caller-supplied arrivals for this slot.
    const StepRecord& advance_with(std::span<const std::int64_t> arrivals);
    // Draws the slot's arrivals as usual and adds `extra` on top.
    const StepRecord& advance_plus(std::span<const std::int64_t> extra);

    const QueueState& state() const { return state_; }
    const NetworkModel& model() const { return model_; }

private:
    const StepRecord& apply(std::size_t schedule_index);

    NetworkModel model_;
    QueueState state_;
    Philox scheduler_rng_;
    std::vector<ArrivalSource> sources_;
    StepRecord record_;
};

// Runs `horizon` slots and hands every record to `sink` in slot order.
void run(const NetworkModel& model, std::int64_t horizon, std::uint64_t seed, std::uint64_t replication,
         const std::function<void(const StepRecord&)>& sink);

}  // namespace mwlab

#include "mwlab/delay_tracker.hpp"

#include <cassert>
#include <numeric>
#include <string>

#include "mwlab/errors.hpp"

namespace mwlab {

DelayTracker::DelayTracker(std::size_t num_queues, std::span<const std::int64_t> initial_lengths,
                           std::int64_t first_slot, bool keep_records)
    : num_queues_(num_queues),
      next_slot_(first_slot),
      keep_records_(keep_records),
      untracked_(num_queues, 0),
      arrivals_seen_(num_queues, 0),
      open_(num_queues),
      delays_(num_queues),
      completed_(num_queues) {
    if (!initial_lengths.empty()) {
        if (initial_lengths.size() != num_queues) throw ConfigError("initial lengths have the wrong dimension");
        untracked_.assign(initial_lengths.begin(), initial_lengths.end());
    }
}

void DelayTracker::on_step(const StepRecord& record) {
    if (record.slot != next_slot_) {
        throw SequenceError("delay tracker expected slot " + std::to_string(next_slot_) + ", got " +
                            std::to_string(record.slot));
    }
    if (record.arrivals.size() != num_queues_ || record.served.size() != num_queues_) {
        throw ConfigError("step record dimension does not match the tracker");
    }
    for (std::size_t i = 0; i < num_queues_; ++i) {
        if (record.served[i]) {
            if (untracked_[i] > 0) {
                --untracked_[i];
            } else {
                if (open_[i].empty()) throw SequenceError("removal from queue with no open file");
                auto& head = open_[i].front();
                if (--head.remaining == 0) {
                    FileRecord done = head.record;
                    done.completion_slot = record.slot;
                    done.delay = record.slot - done.arrival_slot;
                    // Arrivals land at the end of their slot, so a file is never
                    // finished in the slot it arrived.
                    assert(*done.delay >= 1);
                    open_[i].pop_front();
                    if (keep_records_) {
                        delays_[i].push_back(*done.delay);
                        completed_[i].push_back(done);
                    }
                    if (sink_) sink_(done);
                }
            }
        }
        if (record.arrivals[i] > 0) {
            FileRecord f;
            f.queue = i;
            f.k = ++arrivals_seen_[i];
            f.arrival_slot = record.slot;
            f.size = record.arrivals[i];
            open_[i].push_back(OpenFile{f, record.arrivals[i]});
        }
    }
    ++next_slot_;
}

std::int64_t DelayTracker::open_packets(std::size_t queue) const {
    std::int64_t total = untracked_.at(queue);
    for (const auto& f : open_.at(queue)) total += f.remaining;
    return total;
}

void DelayTracker::write_csv(std::ostream& out) const {
    out << "queue,k,arrival_slot,size,delay\n";
    for (std::size_t i = 0; i < num_queues_; ++i) {
        for (const auto& f : completed_[i]) {
            out << (i + 1) << ',' << f.k << ',' << f.arrival_slot << ',' << f.size << ',' << *f.delay << '\n';
        }
    }
}

}  // namespace mwlab

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "mwlab/core.hpp"

namespace mwlab {

// One batch of packets that arrived to a queue in a single slot.
struct FileRecord {
    std::size_t queue = 0;
    std::int64_t k = 0;  // 1-based arrival ordinal within the queue
    std::int64_t arrival_slot = 0;
    std::int64_t size = 0;
    std::optional<std::int64_t> completion_slot;
    std::optional<std::int64_t> delay;
};

// FCFS file bookkeeping over a stream of StepRecords.
//
// A positive arrivals[i] in slot t opens a file of that size; each actual
// removal from queue i retires one packet of its oldest open file, and a file
// whose last packet leaves in slot t' completes with delay t' - t. Packets
// present at slot 0 (nonzero initial lengths) are served first but belong to
// no file.
class DelayTracker {
public:
    using CompletionSink = std::function<void(const FileRecord&)>;

    explicit DelayTracker(std::size_t num_queues, std::span<const std::int64_t> initial_lengths = {},
                          std::int64_t first_slot = 0, bool keep_records = true);

    // Throws SequenceError unless record.slot is the next expected slot.
    void on_step(const StepRecord& record);

    // Called for every completed file, in completion order.
    void set_completion_sink(CompletionSink sink) { sink_ = std::move(sink); }

    // Completed delays of queue i, in completion order. Empty when records
    // are not kept.
    std::span<const std::int64_t> delays(std::size_t queue) const { return delays_.at(queue); }
    std::span<const FileRecord> completed(std::size_t queue) const { return completed_.at(queue); }

    std::int64_t open_packets(std::size_t queue) const;
    std::size_t open_files(std::size_t queue) const { return open_.at(queue).size(); }
    std::int64_t next_slot() const { return next_slot_; }

    // CSV: queue,k,arrival_slot,size,delay (queue is 1-based).
    void write_csv(std::ostream& out) const;

private:
    struct OpenFile {
        FileRecord record;
        std::int64_t remaining;
    };

    std::size_t num_queues_;
    std::int64_t next_slot_;
    bool keep_records_;
    std::vector<std::int64_t> untracked_;  // initial packets ahead of every file
    std::vector<std::int64_t> arrivals_seen_;
    std::vector<std::deque<OpenFile>> open_;
    std::vector<std::vector<std::int64_t>> delays_;
    std::vector<std::vector<FileRecord>> completed_;
    CompletionSink sink_;
};

}  // namespace mwlab

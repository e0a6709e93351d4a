#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwlab/arrivals.hpp"
#include "mwlab/core.hpp"

namespace mwlab {

inline constexpr int kSchemaVersion = 1;

struct ProbeConfig {
    std::vector<std::int64_t> ladder;  // truncation levels; empty disables the curves
    bool delays = true;                // curves of the per-file delay series
    bool tail = true;                  // tail shape of each queue-length marginal
    std::int64_t drift_T = 0;          // 0 disables the drift probe
    std::int64_t burst_b = 0;
    std::size_t burst_seeds = 20;
    double burst_shape = 2.5;
};

struct OutputConfig {
    std::string trace_csv;  // empty: not written
    std::string estimators_json = "estimators.json";
    std::string delays_csv;
};

struct SweepConfig {
    std::vector<double> lambda2;
};

struct Mg1Config {
    double p = 0.0;
    std::optional<ArrivalSpec> service;
    std::int64_t horizon = 10'000'000;
    std::size_t replications = 200;
    double gamma = 0.45;
    std::int64_t initial_workload = 0;
};

struct SimConfig {
    int schema_version = kSchemaVersion;
    std::size_t num_queues = 3;
    std::vector<Schedule> schedules;
    std::vector<ArrivalSpec> arrivals;
    std::int64_t horizon = 1'000'000;
    std::size_t replications = 1;
    std::uint64_t seed = 1;
    std::vector<std::int64_t> initial_lengths;
    ProbeConfig probes;
    OutputConfig outputs;
    SweepConfig sweep;
    Mg1Config mg1;

    // Throws ConfigError on any violated precondition.
    void validate() const;
    NetworkModel model() const;
    // Declared arrival means, one per queue.
    std::vector<double> rates() const;
};

// Arrival laws in JSON: {"law": "bernoulli", "p": ...}, {"law": "geometric",
// "mean": ...}, {"law": "poisson", "rate": ...}, {"law": "bernoulli_zeta",
// "p": ..., "s": ...}, {"law": "deterministic", "pattern": [...]}. Any
// non-deterministic law may give "mean" instead of its parameter; it is then
// calibrated to that mean.
nlohmann::json to_json(const ArrivalSpec& spec);
ArrivalSpec arrival_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SimConfig& config);
SimConfig config_from_json(const nlohmann::json& j);

SimConfig load_config(const std::string& path);

// Canonical text of a JSON value: sorted keys, no whitespace, floats with 17
// significant digits, non-finite floats as null.
std::string canonical_json(const nlohmann::json& j);
// Same rules, indented two spaces, trailing newline.
std::string pretty_json(const nlohmann::json& j);

// FNV-1a digest of the canonical config text.
std::string config_digest(const SimConfig& config);

}  // namespace mwlab

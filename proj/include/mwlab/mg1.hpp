#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mwlab/arrivals.hpp"

namespace mwlab {

// Discrete-time single-server workload: each slot a customer arrives with
// probability p bringing S units of work, and one unit is served:
//   W(t+1) = [W(t) + B(t) S(t) - 1]^+.
struct WorkloadTrace {
    std::vector<std::int64_t> ladder;    // sampled slots t, strictly increasing
    std::vector<double> mean_W;          // estimate of E[W(t)]
    std::vector<double> stderr_W;
    std::vector<double> direct_mean;     // plain average of simulated W(t)
    std::vector<double> direct_stderr;
    std::size_t replications = 0;
    std::string estimator;               // "conditional" or "direct"
    double p = 0.0;
    double service_mean = 0.0;
    TailClass service_tail = TailClass::exponential_type;
};

struct WorkloadOptions {
    unsigned threads = 1;
    std::int64_t initial_workload = 0;
    std::vector<std::int64_t> ladder;  // empty: workload_ladder(horizon)
};

// Half-decade points 10^3, 10^3.5, ... not above horizon, always ending at
// horizon itself.
std::vector<std::int64_t> workload_ladder(std::int64_t horizon);

// Per replication the Lindley path is simulated directly. Started empty, the
// reported mean uses Spitzer's identity E[W(t)] = sum_{k<=t} E[(A_k - k)^+]/k
// over the partial sums A_k of the per-slot work, with each term estimated
// by conditioning on all but the largest summand. This is unbiased with far
// smaller variance than the raw snapshot under heavy-tailed service. With a
// positive initial workload the direct average is reported instead.
//
// Throws ConfigError unless p in (0, 1] and p * E[S] < 1. Service laws must
// be IID, so a Deterministic pattern must be constant.
WorkloadTrace simulate_workload(double p, const ArrivalSpec& service, std::int64_t horizon, std::size_t replications,
                                std::uint64_t seed, const WorkloadOptions& options = {});

// W(0) = w0 followed by one Lindley update per entry of work.
std::vector<std::int64_t> lindley_path(std::int64_t w0, std::span<const std::int64_t> work);

struct ScalingReport {
    std::optional<double> beta;  // absent when the trace saturates
    double gamma = 0.0;
    double bound = 0.0;          // 1 / (1 + gamma)
    double r_squared = 0.0;
    double beta_ci_lo = 0.0;
    double beta_ci_hi = 0.0;
    std::size_t points = 0;      // ladder points in the fit
    bool saturated = false;
    bool heavy_service = false;
    std::optional<bool> pass;    // heavy-tailed service only
};

// Least squares of log mean_W on log t over the top half of the ladder.
// Needs at least 5 ladder points (ConfigError otherwise). A fitted slope
// below 0.05, or a zero mean in the fit window, is reported as saturation.
ScalingReport fit_scaling(const WorkloadTrace& trace, double gamma);

// CSV: t,mean_W,stderr,replications
void write_workload_csv(std::ostream& out, const WorkloadTrace& trace);

}  // namespace mwlab

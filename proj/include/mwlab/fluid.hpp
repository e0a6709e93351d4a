#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace mwlab {

enum class Emptier { queue1, queue3, both };
std::string_view to_string(Emptier e);

// Fluid path after a burst of b packets lands in queue 1 of an empty system.
//
// Phase 1 [0, T1): queue 1 drains at 1 - l1 while queue 3 fills at l3, until
// the weights of the two schedules meet. Phase 2 [T1, T2): the weights stay
// balanced, queues 1 and 2 are served at mu1 = mu2 and queue 3 at mu3, until
// queue 1 or queue 3 runs dry.
struct FluidTrajectory {
    double b = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    double q1_T1 = 0.0;
    double q3_T1 = 0.0;
    std::array<double, 3> mu{};  // service attempt rates in phase 2
    double q2_growth_rate = 0.0;
    double q2_departure_rate = 0.0;  // actual queue-2 output; equals l2 when queue 2 stays empty
    double q2_peak = 0.0;
    Emptier phase2_emptier = Emptier::queue1;
    bool queue2_grows = false;
};

// Throws DomainError outside the stability region, for nonpositive rates, or
// for degenerate phase-2 drain rates.
FluidTrajectory fluid_burst(std::span<const double> lambda, double b);

struct BurstTolerance {
    double t1_relative = 0.05;
    double mu2_absolute = 0.02;
    double q2_over_b_absolute = 0.03;
};

struct BurstRun {
    std::uint64_t seed = 0;
    bool complete = false;  // both breakpoints reached within the slot budget
    std::int64_t T1 = 0;
    std::int64_t T2 = 0;
    std::int64_t q3_T1 = 0;
    std::int64_t q2_T2 = 0;
    std::array<double, 3> mu{};
    double err_T1 = 0.0;   // |T1_hat - T1| / T1
    double err_mu2 = 0.0;  // mu2_hat - mu2
    double q2_peak_over_b = 0.0;
};

struct BurstComparison {
    FluidTrajectory fluid;
    std::vector<BurstRun> runs;
    double median_err_T1 = 0.0;
    double median_mu2 = 0.0;
    double median_q2_over_b = 0.0;
    std::size_t complete_runs = 0;
    bool high_variance = false;  // b too small for a verdict
    std::optional<bool> pass;
};

struct BurstOptions {
    std::size_t seeds = 20;
    double zeta_shape = 2.5;  // exponent of the heavy stream into queue 1
    BurstTolerance tolerance;
    unsigned threads = 1;
};

// Injects b packets into queue 1 at slot 0 of an empty system and measures
// the breakpoints: T1_hat is the first t > 0 with Q3 >= Q1 + Q2, T2_hat the
// first t > T1_hat with Q1 * Q3 = 0. Run i uses master seed `seed + i`.
BurstComparison compare_to_simulation(std::span<const double> lambda, std::int64_t b, std::uint64_t seed,
                                      const BurstOptions& options = {});

// CSV: seed,T1_hat,err_T1,mu2_hat,err_mu2,q2_peak_over_b
void write_burst_csv(std::ostream& out, const BurstComparison& cmp);

}  // namespace mwlab

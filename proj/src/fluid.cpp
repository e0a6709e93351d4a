#include "mwlab/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mwlab/core.hpp"
#include "mwlab/errors.hpp"
#include "mwlab/io.hpp"
#include "mwlab/region.hpp"

namespace mwlab {

std::string_view to_string(Emptier e) {
    switch (e) {
        case Emptier::queue1: return "queue1";
        case Emptier::queue3: return "queue3";
        case Emptier::both: return "both";
    }
    return "both";
}

FluidTrajectory fluid_burst(std::span<const double> lambda, double b) {
    const auto region = in_stability_region(lambda);
    if (!region.stable) throw DomainError("fluid trajectory needs rates inside the stability region");
    if (!(b >= 0.0)) throw DomainError("burst size must be nonnegative");
    const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2];
    if (l2 >= 1.0) throw DomainError("fluid trajectory needs l2 < 1");
    if (1.0 + l3 - l1 <= 0.0) throw DomainError("phase 1 is degenerate: 1 + l3 - l1 <= 0");

    FluidTrajectory f;
    f.b = b;
    f.T1 = b / (1.0 + l3 - l1);
    f.q3_T1 = l3 * f.T1;
    f.q1_T1 = b - (1.0 - l1) * f.T1;

    const double excess = queue2_excess(lambda);
    f.queue2_grows = excess > 0.0;
    if (f.queue2_grows) {
        const double m = (1.0 + l1 + l2 - l3) / 3.0;
        f.mu = {m, m, 1.0 - m};
        f.q2_growth_rate = excess / 3.0;
        f.q2_departure_rate = m;
    } else {
        // Queue 2 pinned at zero: it takes only l2 of its service, and the
        // balance between queues 1 and 3 fixes the split.
        const double m = (1.0 + l1 - l3) / 2.0;
        f.mu = {m, m, 1.0 - m};
        f.q2_growth_rate = 0.0;
        f.q2_departure_rate = l2;
    }

    const double d1 = f.mu[0] - l1;
    const double d3 = f.mu[2] - l3;
    if (d1 <= 0.0 && d3 <= 0.0) throw DomainError("phase 2 is degenerate: neither queue 1 nor queue 3 drains");
    const double inf = std::numeric_limits<double>::infinity();
    const double t1 = d1 > 0.0 ? f.q1_T1 / d1 : inf;
    const double t3 = d3 > 0.0 ? f.q3_T1 / d3 : inf;
    const double dt = std::min(t1, t3);
    const double scale = std::max(std::abs(t1 == inf ? 0.0 : t1), std::abs(t3 == inf ? 0.0 : t3));
    if (std::abs(t1 - t3) <= 1e-12 * scale) {
        f.phase2_emptier = Emptier::both;
    } else {
        f.phase2_emptier = t1 < t3 ? Emptier::queue1 : Emptier::queue3;
    }
    f.T2 = f.T1 + dt;
    f.q2_peak = f.q2_growth_rate * dt;
    return f;
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BurstRun run_burst(const NetworkModel& model, const FluidTrajectory& fluid, std::int64_t b, std::uint64_t seed) {
    BurstRun run;
    run.seed = seed;
    Simulator sim(model, seed, 0);
    const std::int64_t budget = 20 * static_cast<std::int64_t>(std::ceil(fluid.T2)) + 100'000;
    const std::int64_t extra[3] = {b, 0, 0};
    sim.advance_plus(extra);

    std::int64_t attempts[3] = {0, 0, 0};
    bool in_phase2 = false;
    for (std::int64_t t = 1; t <= budget; ++t) {
        const auto& q = sim.state().lengths;
        if (!in_phase2) {
            if (q[2] >= q[0] + q[1]) {
                run.T1 = t;
                run.q3_T1 = q[2];
                in_phase2 = true;
            }
        } else if (q[0] == 0 || q[2] == 0) {
            run.T2 = t;
            run.q2_T2 = q[1];
            run.complete = true;
            break;
        }
        const auto& rec = sim.advance();
        if (in_phase2) {
            const auto& s = model.schedules[rec.schedule_index].service;
            for (int i = 0; i < 3; ++i) attempts[i] += s[i];
        }
    }
    if (run.complete) {
        const double len = static_cast<double>(run.T2 - run.T1);
        for (int i = 0; i < 3; ++i) run.mu[i] = static_cast<double>(attempts[i]) / len;
        run.err_T1 = fluid.T1 > 0 ? std::abs(static_cast<double>(run.T1) - fluid.T1) / fluid.T1
                                  : static_cast<double>(run.T1);
        run.err_mu2 = run.mu[1] - fluid.mu[1];
        run.q2_peak_over_b = b > 0 ? static_cast<double>(run.q2_T2) / static_cast<double>(b) : 0.0;
    }
    return run;
}

}  // namespace

BurstComparison compare_to_simulation(std::span<const double> lambda, std::int64_t b, std::uint64_t seed,
                                      const BurstOptions& options) {
    if (b < 0) throw ConfigError("burst size must be nonnegative");
    BurstComparison cmp;
    cmp.fluid = fluid_burst(lambda, static_cast<double>(b));
    cmp.high_variance = b < 10'000;

    NetworkModel model;
    model.arrivals = {calibrate_rate(lambda[0], LawFamily::bernoulli_zeta, options.zeta_shape),
                      ArrivalSpec(Bernoulli{lambda[1]}), ArrivalSpec(Bernoulli{lambda[2]})};
    cmp.runs.resize(options.seeds);
    parallel_for(options.seeds, options.threads,
                 [&](std::size_t i) { cmp.runs[i] = run_burst(model, cmp.fluid, b, seed + i); });

    std::vector<double> e1, m2, q2;
    for (const auto& r : cmp.runs) {
        if (!r.complete) continue;
        e1.push_back(r.err_T1);
        m2.push_back(r.mu[1]);
        q2.push_back(r.q2_peak_over_b);
    }
    cmp.complete_runs = e1.size();
    cmp.median_err_T1 = median(e1);
    cmp.median_mu2 = median(m2);
    cmp.median_q2_over_b = median(q2);
    if (!cmp.high_variance) {
        const auto& tol = options.tolerance;
        const double q2_fluid = b > 0 ? cmp.fluid.q2_peak / static_cast<double>(b) : 0.0;
        cmp.pass = cmp.complete_runs == cmp.runs.size() && cmp.median_err_T1 < tol.t1_relative &&
                   std::abs(cmp.median_mu2 - cmp.fluid.mu[1]) <= tol.mu2_absolute &&
                   std::abs(cmp.median_q2_over_b - q2_fluid) <= tol.q2_over_b_absolute;
    }
    return cmp;
}

void write_burst_csv(std::ostream& out, const BurstComparison& cmp) {
    CsvWriter csv(out);
    csv.header({"seed", "T1_hat", "err_T1", "mu2_hat", "err_mu2", "q2_peak_over_b"});
    for (const auto& r : cmp.runs) {
        csv.field(r.seed);
        if (r.complete) {
            csv.field(r.T1).field(r.err_T1).field(r.mu[1]).field(r.err_mu2).field(r.q2_peak_over_b);
        } else {
            csv.field("").field("").field("").field("").field("");
        }
        csv.end_row();
    }
}

}  // namespace mwlab

#include "mwlab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mwlab/errors.hpp"
#include "mwlab/io.hpp"

namespace mwlab {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const TruncatedMeanCurve& c) {
    return {{"ladder", c.ladder},
            {"estimate", c.estimates},
            {"stderr", c.stderrs},
            {"time_average", c.time_average},
            {"cycles", c.cycles},
            {"observations", c.observations},
            {"inconclusive", c.inconclusive},
            {"note", c.note}};
}

json to_json(const DivergenceReport& r) {
    return {{"verdict", std::string(to_string(r.verdict))},
            {"method", "truncated-mean heuristic"},
            {"last_step_increase", r.last_step_increase},
            {"slope", r.slope},
            {"slope_ci", {r.slope_ci_lo, r.slope_ci_hi}},
            {"top_half_ratio", r.first_to_last_ratio}};
}

namespace {

json drift_stats(const DriftStats& s) {
    return {{"samples", s.samples}, {"mean", s.mean}, {"ci", {s.ci_lo, s.ci_hi}}};
}

}  // namespace

json to_json(const DriftProbeReport& r) {
    return {{"T", r.T},
            {"alpha", r.alpha},
            {"inconclusive", r.inconclusive},
            {"all", drift_stats(r.all)},
            {"case_queue2", drift_stats(r.case_queue2)},
            {"case_queue3", drift_stats(r.case_queue3)}};
}

json to_json(const TailReport& r) {
    return {{"classification", std::string(to_string(r.classification))},
            {"fitted_exponent", r.fitted_exponent},
            {"hill_index", r.hill_index},
            {"r2_geometric", r.r2_geometric},
            {"r2_power", r.r2_power},
            {"threshold", r.threshold},
            {"exceedances", r.exceedances},
            {"samples", r.samples}};
}

json to_json(const RegionVerdict& v) {
    json verdicts = json::array();
    for (auto q : v.queue_verdicts) verdicts.push_back(std::string(to_string(q)));
    json j = {{"verdict", v.stable ? "stable" : "unstable"},
              {"stable", v.stable},
              {"threshold", v.threshold},
              {"queue_verdicts", verdicts}};
    j["witness"] = v.witness ? json{{"mu12", v.witness->mu12}, {"mu3", v.witness->mu3}} : json(nullptr);
    return j;
}

json to_json(const FluidTrajectory& f) {
    return {{"b", f.b},
            {"T1", f.T1},
            {"T2", f.T2},
            {"q1_T1", f.q1_T1},
            {"q3_T1", f.q3_T1},
            {"mu", f.mu},
            {"q2_growth_rate", f.q2_growth_rate},
            {"q2_departure_rate", f.q2_departure_rate},
            {"q2_peak", f.q2_peak},
            {"phase2_emptier", std::string(to_string(f.phase2_emptier))},
            {"queue2_grows", f.queue2_grows}};
}

json to_json(const BurstComparison& c) {
    json runs = json::array();
    for (const auto& r : c.runs) {
        runs.push_back({{"seed", r.seed},
                        {"complete", r.complete},
                        {"T1_hat", r.T1},
                        {"T2_hat", r.T2},
                        {"q3_T1_hat", r.q3_T1},
                        {"q2_T2_hat", r.q2_T2},
                        {"mu_hat", r.mu},
                        {"err_T1", r.err_T1},
                        {"err_mu2", r.err_mu2},
                        {"q2_peak_over_b", r.q2_peak_over_b}});
    }
    json j = {{"fluid", to_json(c.fluid)},
              {"runs", runs},
              {"complete_runs", c.complete_runs},
              {"median_err_T1", c.median_err_T1},
              {"median_mu2", c.median_mu2},
              {"median_q2_peak_over_b", c.median_q2_over_b},
              {"high_variance", c.high_variance}};
    j["pass"] = c.pass ? json(*c.pass) : json(nullptr);
    return j;
}

json to_json(const WorkloadTrace& t) {
    return {{"t", t.ladder},
            {"mean_W", t.mean_W},
            {"stderr", t.stderr_W},
            {"direct_mean_W", t.direct_mean},
            {"direct_stderr", t.direct_stderr},
            {"replications", t.replications},
            {"estimator", t.estimator},
            {"p", t.p},
            {"service_mean", t.service_mean},
            {"load", t.p * t.service_mean},
            {"service_tail", std::string(to_string(t.service_tail))}};
}

json to_json(const ScalingReport& s) {
    json j = {{"gamma", s.gamma},
              {"bound", s.bound},
              {"r_squared", s.r_squared},
              {"beta_ci", {s.beta_ci_lo, s.beta_ci_hi}},
              {"points", s.points},
              {"saturated", s.saturated},
              {"heavy_service", s.heavy_service}};
    j["beta"] = s.beta ? json(*s.beta) : json(nullptr);
    j["pass"] = s.pass ? json(*s.pass) : json(nullptr);
    return j;
}

namespace {

std::optional<RegionVerdict> region_for(const SimConfig& config) {
    if (config.num_queues != 3 || config.schedules != ScheduleSet::three_queue().schedules()) return std::nullopt;
    const auto rates = config.rates();
    for (double r : rates) {
        if (!(r > 0.0)) return std::nullopt;
    }
    return classify(rates);
}

json provenance(const SimConfig& config) {
    return {{"config_digest", config_digest(config)}, {"seed", config.seed}, {"schema_version", kSchemaVersion}};
}

}  // namespace

json network_report(const SimConfig& config, const NetworkRun& run) {
    json rep = provenance(config);
    rep["horizon"] = config.horizon;
    rep["replications"] = config.replications;
    rep["rates"] = config.rates();
    const auto region = region_for(config);
    rep["region"] = region ? to_json(*region) : json(nullptr);
    rep["note"] = "divergence and tail verdicts are finite-sample heuristics, not proofs";

    const auto pooled = run.pooled();
    json queues = json::array();
    for (std::size_t i = 0; i < config.num_queues; ++i) {
        json q = {{"queue", i + 1}, {"final_lengths", json::array()}};
        for (const auto& r : run.replications) q["final_lengths"].push_back(r.final_lengths[i]);
        if (!pooled.queue_curves.empty()) {
            const auto curve = pooled.queue_curves[i].curve();
            q["queue_length"] = {{"curve", to_json(curve)}, {"divergence", to_json(classify_divergence(curve))}};
        }
        if (!pooled.delay_curves.empty()) {
            const auto curve = pooled.delay_curves[i].curve();
            q["delay"] = {{"curve", to_json(curve)},
                          {"divergence", to_json(classify_divergence(curve))},
                          {"completed_files", pooled.completed_files[i]}};
        }
        if (!pooled.marginals.empty()) q["tail"] = to_json(tail_classify(pooled.marginals[i].histogram()));
        queues.push_back(q);
    }
    rep["queues"] = queues;
    rep["drift"] = pooled.drift ? to_json(pooled.drift->report()) : json(nullptr);
    return rep;
}

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> horizon;
    std::string out_dir = ".";
    unsigned threads = 1;
    std::vector<double> lambda;
    std::optional<double> b;
    std::vector<double> grid;
    bool grid_given = false;
};

unsigned default_threads() {
    if (const char* env = std::getenv("MAXWEIGHT_LAB_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
        throw ConfigError("MAXWEIGHT_LAB_THREADS must be a positive integer");
    }
    return 1;
}

SimConfig load_with_overrides(const Options& o) {
    if (o.config_path.empty()) throw ConfigError("--config is required for this command");
    SimConfig c = load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.horizon) {
        c.horizon = *o.horizon;
        c.mg1.horizon = *o.horizon;
    }
    c.validate();
    return c;
}

fs::path out_path(const Options& o, const std::string& name) {
    fs::create_directories(o.out_dir);
    return fs::path(o.out_dir) / name;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    return f;
}

std::vector<double> lambda_from(const Options& o, const std::optional<SimConfig>& c) {
    if (!o.lambda.empty()) {
        if (o.lambda.size() != 3) throw ConfigError("--lambda needs 3 comma-separated rates");
        return o.lambda;
    }
    if (c) return c->rates();
    throw ConfigError("give --lambda or --config");
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const SimConfig c = load_with_overrides(o);
    NetworkRunOptions ro;
    ro.horizon = c.horizon;
    ro.replications = c.replications;
    ro.seed = c.seed;
    ro.threads = o.threads;
    ro.ladder = c.probes.ladder;
    ro.delays = c.probes.delays;
    ro.tail = c.probes.tail;
    ro.drift_T = c.probes.drift_T;
    std::ofstream trace, delays;
    if (!c.outputs.trace_csv.empty()) {
        trace = open_out(out_path(o, c.outputs.trace_csv));
        ro.trace_csv = &trace;
    }
    if (!c.outputs.delays_csv.empty()) {
        delays = open_out(out_path(o, c.outputs.delays_csv));
        ro.delays_csv = &delays;
    }
    const auto run = run_network(c.model(), ro);
    const json rep = network_report(c, run);
    const auto path = out_path(o, c.outputs.estimators_json);
    write_file(path, pretty_json(rep));

    std::ofstream curves = open_out(out_path(o, "curves.csv"));
    CsvWriter csv(curves);
    csv.header({"series", "queue", "M", "estimate", "stderr"});
    for (const auto& q : rep["queues"]) {
        for (const char* series : {"queue_length", "delay"}) {
            if (!q.contains(series)) continue;
            const auto& cv = q[series]["curve"];
            for (std::size_t i = 0; i < cv["ladder"].size(); ++i) {
                csv.field(series).field(q["queue"].get<std::uint64_t>()).field(cv["ladder"][i].get<std::int64_t>());
                csv.field(cv["estimate"][i].get<double>()).field(cv["stderr"][i].get<double>()).end_row();
            }
        }
    }
    out << "simulate: wrote " << path.string() << " (digest " << rep["config_digest"].get<std::string>() << ")\n";
    return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const SimConfig base = load_with_overrides(o);
    if (base.num_queues != 3) throw ConfigError("sweep needs the 3-queue network");
    const std::vector<double> grid = o.grid_given ? o.grid : base.sweep.lambda2;
    for (double l : grid) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("lambda2 grid values must lie in (0, 1)");
    }
    const auto family = parse_family(base.arrivals[1].family());
    if (!family) throw ConfigError("queue 2 law cannot be recalibrated for a sweep");
    double shape = 2.5;
    if (const auto* z = std::get_if<BernoulliZeta>(&base.arrivals[1].law())) shape = z->s;

    std::ofstream f = open_out(out_path(o, "sweep.csv"));
    CsvWriter csv(f);
    csv.header({"lambda2", "analytic_verdict", "empirical_verdict", "drift", "drift_ci_lo", "drift_ci_hi"});
    json rows = json::array();
    for (double l2 : grid) {
        SimConfig c = base;
        c.arrivals[1] = calibrate_rate(l2, *family, shape);
        auto rates = c.rates();
        const auto region = classify(rates);
        csv.field(l2);
        json row = {{"lambda2", l2}};
        if (!region.stable) {
            csv.field("outside_region").field("not_run").field("").field("").field("").end_row();
            row["analytic_verdict"] = "outside_region";
            rows.push_back(row);
            continue;
        }
        const auto q2 = region.queue_verdicts[1];
        const std::string analytic = q2 == QueueVerdict::delay_stable     ? "stable"
                                     : q2 == QueueVerdict::delay_unstable ? "unstable"
                                                                          : "boundary";
        NetworkRunOptions ro;
        ro.horizon = c.horizon;
        ro.replications = c.replications;
        ro.seed = c.seed;
        ro.threads = o.threads;
        ro.ladder = c.probes.ladder;
        ro.delays = false;
        ro.tail = false;
        ro.drift_T = c.probes.drift_T;
        const auto run = run_network(c.model(), ro);
        const auto pooled = run.pooled();
        const auto div = classify_divergence(pooled.queue_curves[1].curve());
        const std::string empirical = div.verdict == Divergence::finite      ? "stable"
                                      : div.verdict == Divergence::diverging ? "unstable"
                                                                             : "inconclusive";
        csv.field(analytic).field(empirical);
        row["analytic_verdict"] = analytic;
        row["empirical_verdict"] = empirical;
        row["divergence"] = to_json(div);
        if (pooled.drift) {
            const auto d = pooled.drift->report();
            if (d.inconclusive) {
                csv.field("").field("").field("");
            } else {
                csv.field(d.all.mean).field(d.all.ci_lo).field(d.all.ci_hi);
            }
            row["drift"] = to_json(d);
        } else {
            csv.field("").field("").field("");
        }
        csv.end_row();
        rows.push_back(row);
    }
    json rep = provenance(base);
    rep["grid"] = grid;
    rep["rows"] = rows;
    write_file(out_path(o, "sweep.json"), pretty_json(rep));
    out << "sweep: " << grid.size() << " grid points\n";
    return kExitOk;
}

int cmd_burst(const Options& o, std::ostream& out) {
    std::optional<SimConfig> c;
    if (!o.config_path.empty()) c = load_with_overrides(o);
    const auto lambda = lambda_from(o, c);
    const auto b = static_cast<std::int64_t>(o.b ? *o.b : (c ? static_cast<double>(c->probes.burst_b) : -1.0));
    if (b < 0) throw ConfigError("give --b or probes.burst_b");
    BurstOptions bo;
    bo.threads = o.threads;
    if (c) {
        bo.seeds = c->probes.burst_seeds;
        bo.zeta_shape = c->probes.burst_shape;
    }
    const std::uint64_t seed = o.seed ? *o.seed : (c ? c->seed : 1);
    const auto cmp = compare_to_simulation(lambda, b, seed, bo);
    json rep = c ? provenance(*c)
                 : json{{"config_digest", fnv1a_hex(canonical_json({{"command", "burst"}, {"lambda", lambda}, {"b", b}}))},
                        {"seed", seed}};
    rep["seed"] = seed;
    rep["lambda"] = lambda;
    rep["comparison"] = to_json(cmp);
    write_file(out_path(o, "burst.json"), pretty_json(rep));
    std::ofstream f = open_out(out_path(o, "burst.csv"));
    write_burst_csv(f, cmp);
    out << "burst: median err_T1 " << format_double(cmp.median_err_T1) << ", median mu2 "
        << format_double(cmp.median_mu2) << ", median q2/b " << format_double(cmp.median_q2_over_b) << "\n";
    return kExitOk;
}

int cmd_fluid(const Options& o, std::ostream& out) {
    std::optional<SimConfig> c;
    if (!o.config_path.empty()) c = load_with_overrides(o);
    const auto lambda = lambda_from(o, c);
    const double b = o.b ? *o.b : (c ? static_cast<double>(c->probes.burst_b) : -1.0);
    if (b < 0) throw ConfigError("give --b or probes.burst_b");
    json rep = c ? provenance(*c)
                 : json{{"config_digest", fnv1a_hex(canonical_json({{"command", "fluid"}, {"lambda", lambda}, {"b", b}}))}};
    if (!c) rep["seed"] = nullptr;
    rep["lambda"] = lambda;
    rep["trajectory"] = to_json(fluid_burst(lambda, b));
    const std::string text = pretty_json(rep);
    write_file(out_path(o, "fluid.json"), text);
    out << text;
    return kExitOk;
}

int cmd_region(const Options& o, std::ostream& out) {
    std::optional<SimConfig> c;
    if (!o.config_path.empty()) c = load_with_overrides(o);
    const auto lambda = lambda_from(o, c);
    json rep = c ? provenance(*c)
                 : json{{"config_digest", fnv1a_hex(canonical_json({{"command", "region"}, {"lambda", lambda}}))}};
    if (!c) rep["seed"] = nullptr;
    rep["lambda"] = lambda;
    rep["verdict"] = to_json(classify(lambda));
    const std::string text = pretty_json(rep);
    write_file(out_path(o, "region.json"), text);
    out << text;
    return kExitOk;
}

int cmd_mg1(const Options& o, std::ostream& out) {
    const SimConfig c = load_with_overrides(o);
    if (!c.mg1.service) throw ConfigError("mg1.service is required");
    WorkloadOptions wo;
    wo.threads = o.threads;
    wo.initial_workload = c.mg1.initial_workload;
    const auto trace = simulate_workload(c.mg1.p, *c.mg1.service, c.mg1.horizon, c.mg1.replications, c.seed, wo);
    json rep = provenance(c);
    rep["trace"] = to_json(trace);
    rep["scaling"] = trace.ladder.size() >= 5 ? to_json(fit_scaling(trace, c.mg1.gamma)) : json(nullptr);
    write_file(out_path(o, "mg1.json"), pretty_json(rep));
    std::ofstream f = open_out(out_path(o, "mg1.csv"));
    write_workload_csv(f, trace);
    out << "mg1: " << trace.ladder.size() << " ladder points, " << trace.replications << " replications\n";
    return kExitOk;
}

void print_error(std::ostream& err, const char* kind, const std::string& message) {
    err << canonical_json({{"error", kind}, {"message", message}}) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Max-Weight switched-network laboratory", "maxweight-lab"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", o.config_path, "Experiment config (JSON)");
    app.add_option("--seed", o.seed, "Master seed, overrides the config");
    app.add_option("--horizon", o.horizon, "Slots per replication, overrides the config");
    app.add_option("--out", o.out_dir, "Output directory");
    auto* threads = app.add_option("--threads", o.threads, "Replication parallelism")->check(CLI::PositiveNumber);

    auto* simulate = app.add_subcommand("simulate", "Run replications and write estimator reports");
    auto* sweep = app.add_subcommand("sweep", "Sweep lambda2 and compare analytic and empirical verdicts");
    sweep->add_option("--grid", o.grid, "lambda2 values")->delimiter(',');
    auto* burst = app.add_subcommand("burst", "Compare burst simulations with the fluid trajectory");
    auto* fluid = app.add_subcommand("fluid", "Fluid trajectory after a burst");
    auto* region = app.add_subcommand("region", "Stability region and delay-stability verdicts");
    auto* mg1 = app.add_subcommand("mg1", "Workload growth bench");
    for (auto* sub : {burst, fluid, region}) sub->add_option("--lambda", o.lambda, "Rates l1,l2,l3")->delimiter(',');
    for (auto* sub : {burst, fluid}) sub->add_option("--b", o.b, "Burst size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        print_error(err, "config_error", e.what());
        return kExitConfig;
    }

    try {
        if (threads->count() == 0) o.threads = default_threads();
        o.grid_given = sweep->get_option("--grid")->count() > 0;
        if (o.horizon && *o.horizon < 1) throw ConfigError("--horizon must be at least 1");
        if (simulate->parsed()) return cmd_simulate(o, out);
        if (sweep->parsed()) return cmd_sweep(o, out);
        if (burst->parsed()) return cmd_burst(o, out);
        if (fluid->parsed()) return cmd_fluid(o, out);
        if (region->parsed()) return cmd_region(o, out);
        if (mg1->parsed()) return cmd_mg1(o, out);
    } catch (const ConfigError& e) {
        print_error(err, "config_error", e.what());
        return kExitConfig;
    } catch (const DomainError& e) {
        print_error(err, "config_error", e.what());
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        print_error(err, "config_error", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        print_error(err, "runtime_error", e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace mwlab

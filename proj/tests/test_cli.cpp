#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "mwlab/cli.hpp"
#include "mwlab/config.hpp"
#include "mwlab/errors.hpp"

using namespace mwlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "maxweight-lab");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mwlab_test_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

json minimal(double l2 = 0.4) {
    return {{"schema_version", 1},
            {"arrivals",
             {{{"law", "bernoulli_zeta"}, {"mean", 0.2}, {"s", 2.5}},
              {{"law", "bernoulli"}, {"p", l2}},
              {{"law", "bernoulli"}, {"p", 0.3}}}},
            {"horizon", 1000},
            {"seed", 7},
            {"probes", {{"drift_T", 20}}},
            {"outputs", {{"trace_csv", "trace.csv"}, {"delays_csv", "delays.csv"}}}};
}

}  // namespace

TEST_CASE("simulate with a minimal config writes well-formed reports") {
    const auto dir = scratch("minimal");
    const auto cfg = write_config(dir, minimal());
    const auto r = cli({"--config", cfg.string(), "--out", dir.string(), "simulate"});
    REQUIRE(r.code == 0);
    const json rep = json::parse(slurp(dir / "estimators.json"));
    CHECK(rep["schema_version"] == 1);
    CHECK(rep["seed"] == 7);
    CHECK(rep["config_digest"].get<std::string>().size() == 16);
    CHECK(rep["region"]["verdict"] == "stable");
    REQUIRE(rep["queues"].size() == 3);
    for (const auto& q : rep["queues"]) {
        CHECK(q["queue_length"]["curve"]["ladder"].size() == 9);
        CHECK(q["queue_length"]["divergence"].contains("verdict"));
        CHECK(q["delay"]["curve"]["estimate"].size() == 9);
        CHECK(q.contains("tail"));
    }
    CHECK(rep["drift"]["T"] == 20);
    CHECK(slurp(dir / "curves.csv").rfind("series,queue,M,estimate,stderr\n", 0) == 0);
    CHECK(slurp(dir / "delays.csv").rfind("queue,k,arrival_slot,size,delay\n", 0) == 0);
    const auto trace = slurp(dir / "trace.csv");
    CHECK(trace.rfind("slot,a1,a2,a3,sched_idx,s1,s2,s3,q1,q2,q3\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 1001);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    json j = minimal();
    j["replications"] = 3;
    const auto cfg = write_config(a, j);
    REQUIRE(cli({"--config", cfg.string(), "--out", a.string(), "--threads", "1", "simulate"}).code == 0);
    REQUIRE(cli({"--config", cfg.string(), "--out", b.string(), "--threads", "3", "simulate"}).code == 0);
    for (const char* f : {"estimators.json", "curves.csv", "delays.csv", "trace.csv"}) {
        CHECK(slurp(a / f) == slurp(b / f));
    }
}

TEST_CASE("simulate outside the stability region still reports") {
    const auto dir = scratch("unstable");
    json j = minimal(0.75);
    const auto cfg = write_config(dir, j);
    REQUIRE(cli({"--config", cfg.string(), "--out", dir.string(), "simulate"}).code == 0);
    const json rep = json::parse(slurp(dir / "estimators.json"));
    CHECK(rep["region"]["verdict"] == "unstable");
    CHECK(rep["region"]["queue_verdicts"][1] == "not_applicable");
}

TEST_CASE("seed override changes the digest-stamped seed only") {
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    const auto cfg = write_config(a, minimal());
    REQUIRE(cli({"--config", cfg.string(), "--out", a.string(), "simulate"}).code == 0);
    REQUIRE(cli({"--config", cfg.string(), "--seed", "8", "--out", b.string(), "simulate"}).code == 0);
    const json ra = json::parse(slurp(a / "estimators.json"));
    const json rb = json::parse(slurp(b / "estimators.json"));
    CHECK(rb["seed"] == 8);
    CHECK(ra["config_digest"] != rb["config_digest"]);
}

TEST_CASE("sweep: empty grid gives a header-only CSV") {
    const auto dir = scratch("sweep_empty");
    json j = minimal();
    j["sweep"] = {{"lambda2", json::array()}};
    const auto cfg = write_config(dir, j);
    REQUIRE(cli({"--config", cfg.string(), "--out", dir.string(), "sweep"}).code == 0);
    CHECK(slurp(dir / "sweep.csv") == "lambda2,analytic_verdict,empirical_verdict,drift,drift_ci_lo,drift_ci_hi\n");
}

TEST_CASE("sweep: analytic verdicts follow the threshold") {
    const auto dir = scratch("sweep_grid");
    const auto cfg = write_config(dir, minimal());
    const auto r = cli({"--config", cfg.string(), "--out", dir.string(), "sweep", "--grid", "0.30,0.40,0.50,0.55,0.60"});
    REQUIRE(r.code == 0);
    const json rep = json::parse(slurp(dir / "sweep.json"));
    const std::vector<std::string> expect{"stable", "stable", "unstable", "unstable", "unstable"};
    REQUIRE(rep["rows"].size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(rep["rows"][i]["analytic_verdict"] == expect[i]);
    const auto csv = slurp(dir / "sweep.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("sweep: a grid point outside the region is flagged, not fatal") {
    const auto dir = scratch("sweep_out");
    const auto cfg = write_config(dir, minimal());
    REQUIRE(cli({"--config", cfg.string(), "--out", dir.string(), "sweep", "--grid", "0.8"}).code == 0);
    CHECK(slurp(dir / "sweep.csv").find("0.80000000000000004,outside_region,not_run,,,\n") != std::string::npos);
}

TEST_CASE("config round trip is the identity") {
    const json j = minimal();
    const auto c1 = config_from_json(j);
    const auto c2 = config_from_json(to_json(c1));
    CHECK(canonical_json(to_json(c1)) == canonical_json(to_json(c2)));
    CHECK(config_digest(c1) == config_digest(c2));
}

TEST_CASE("config errors exit with code 2 and an error object") {
    const auto dir = scratch("errors");
    auto r = cli({"--config", (dir / "missing.json").string(), "simulate"});
    CHECK(r.code == 2);
    CHECK(json::parse(r.err)["error"] == "config_error");

    json j = minimal();
    j["bogus"] = 1;
    r = cli({"--config", write_config(dir, j).string(), "simulate"});
    CHECK(r.code == 2);

    j = minimal();
    j["schema_version"] = 2;
    CHECK(cli({"--config", write_config(dir, j).string(), "simulate"}).code == 2);

    CHECK(cli({"fluid", "--lambda", "0.6,0.1,0.5", "--b", "100"}).code == 2);
    CHECK(cli({"--threads", "0", "region", "--lambda", "0.2,0.4,0.3"}).code == 2);
    CHECK(cli({"nonsense"}).code == 2);
}

TEST_CASE("runtime errors exit with code 3") {
    const auto dir = scratch("runtime");
    const auto cfg = write_config(dir, minimal());
    // An output directory that is a regular file cannot be created.
    const auto blocker = dir / "blocker";
    std::ofstream(blocker) << "x";
    const auto r = cli({"--config", cfg.string(), "--out", (blocker / "sub").string(), "simulate"});
    CHECK(r.code == 3);
    CHECK(json::parse(r.err)["error"] == "runtime_error");
}

TEST_CASE("region passthrough") {
    const auto dir = scratch("region");
    const auto r = cli({"--out", dir.string(), "region", "--lambda", "0.2,0.6,0.3"});
    REQUIRE(r.code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep["verdict"]["threshold"].get<double>() == doctest::Approx(0.45));
    CHECK(rep["verdict"]["queue_verdicts"] == json({"delay_unstable", "delay_unstable", "delay_unstable"}));
    CHECK(slurp(dir / "region.json") == r.out);
}

TEST_CASE("fluid passthrough") {
    const auto dir = scratch("fluid");
    const auto r = cli({"--out", dir.string(), "fluid", "--lambda", "0.2,0.6,0.3", "--b", "10000"});
    REQUIRE(r.code == 0);
    const json t = json::parse(r.out)["trajectory"];
    CHECK(t["T1"].get<double>() == doctest::Approx(9090.909090909));
    CHECK(t["q2_peak"].get<double>() == doctest::Approx(909.0909090909));
    CHECK(t["phase2_emptier"] == "queue1");
}

TEST_CASE("burst passthrough is deterministic") {
    const auto a = scratch("burst_a"), b = scratch("burst_b");
    const auto cfg = write_config(a, [] {
        json j = minimal(0.6);
        j["probes"] = {{"burst_seeds", 2}};
        return j;
    }());
    for (const auto& d : {a, b}) {
        REQUIRE(cli({"--config", cfg.string(), "--out", d.string(), "burst", "--b", "2000"}).code == 0);
    }
    CHECK(slurp(a / "burst.json") == slurp(b / "burst.json"));
    CHECK(slurp(a / "burst.csv") == slurp(b / "burst.csv"));
    const json rep = json::parse(slurp(a / "burst.json"));
    CHECK(rep["comparison"]["runs"].size() == 2);
    CHECK(rep["comparison"]["fluid"]["T1"].get<double>() == doctest::Approx(2000 / 1.1));
}

TEST_CASE("mg1 passthrough is deterministic") {
    const auto a = scratch("mg1_a"), b = scratch("mg1_b");
    json j = minimal();
    j["mg1"] = {{"p", 0.1}, {"service", {{"law", "bernoulli_zeta"}, {"p", 1.0}, {"s", 2.5}}}, {"replications", 4}};
    const auto cfg = write_config(a, j);
    for (const auto& d : {a, b}) {
        REQUIRE(cli({"--config", cfg.string(), "--horizon", "100000", "--out", d.string(), "mg1"}).code == 0);
    }
    CHECK(slurp(a / "mg1.json") == slurp(b / "mg1.json"));
    CHECK(slurp(a / "mg1.csv") == slurp(b / "mg1.csv"));
    const json rep = json::parse(slurp(a / "mg1.json"));
    CHECK(rep["trace"]["t"].back() == 100000);
    CHECK(rep["scaling"]["gamma"].get<double>() == doctest::Approx(0.45));
}

TEST_CASE("installed binary honours the thread environment variable") {
    const char* bin = std::getenv("MAXWEIGHT_LAB");
    if (!bin) return;
    const auto dir = scratch("binary");
    const auto cfg = write_config(dir, minimal());
    const std::string cmd = std::string("MAXWEIGHT_LAB_THREADS=2 ") + bin + " --config " + cfg.string() + " --out " +
                            dir.string() + " simulate > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "estimators.json"));
    const std::string bad = std::string(bin) + " region --lambda 0 2>/dev/null >/dev/null";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("sweep: empirical verdicts match analytic away from the threshold") {
    // Pinned: seed 1, one 1e7-slot replication per grid point.
    const auto dir = scratch("sweep_empirical");
    json j = minimal();
    j["arrivals"][0]["s"] = 2.3;
    j["horizon"] = 10'000'000;
    j["seed"] = 1;
    j["probes"] = json::object();
    j["outputs"] = json::object();
    const auto cfg = write_config(dir, j);
    REQUIRE(cli({"--config", cfg.string(), "--out", dir.string(), "sweep", "--grid", "0.30,0.40,0.60"}).code == 0);
    const json rep = json::parse(slurp(dir / "sweep.json"));
    for (const auto& row : rep["rows"]) {
        CHECK(row["empirical_verdict"] == row["analytic_verdict"]);
    }
}

#include "mwlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mwlab/errors.hpp"
#include "mwlab/estimators.hpp"
#include "mwlab/io.hpp"

namespace mwlab {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

double get_double(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + " is missing \"" + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::int64_t as_int(const json& v, const std::string& what) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9.2e18) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(what + " must be an integer");
}

std::uint64_t as_uint(const json& v, const std::string& what) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const std::int64_t i = as_int(v, what);
    if (i < 0) throw ConfigError(what + " must be nonnegative");
    return static_cast<std::uint64_t>(i);
}

std::vector<std::int64_t> int_list(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError(what + " must be an array");
    std::vector<std::int64_t> out;
    for (const auto& e : v) out.push_back(as_int(e, what + " entry"));
    return out;
}

std::string as_string(const json& v, const std::string& what) {
    if (!v.is_string()) throw ConfigError(what + " must be a string");
    return v.get<std::string>();
}

void write_json(std::ostringstream& out, const json& j, int indent, int depth) {
    const auto newline = [&](int d) {
        if (indent < 0) return;
        out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
    };
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                return;
            }
            out << '{';
            bool first = true;
            for (const auto& [k, v] : j.items()) {
                if (!first) out << ',';
                first = false;
                newline(depth + 1);
                out << json(k).dump() << (indent < 0 ? ":" : ": ");
                write_json(out, v, indent, depth + 1);
            }
            newline(depth);
            out << '}';
            return;
        }
        case json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                return;
            }
            out << '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out << ',';
                first = false;
                newline(depth + 1);
                write_json(out, v, indent, depth + 1);
            }
            newline(depth);
            out << ']';
            return;
        }
        case json::value_t::number_float: {
            const double d = j.get<double>();
            out << (std::isfinite(d) ? format_double(d) : "null");
            return;
        }
        default:
            out << j.dump();
    }
}

}  // namespace

std::string canonical_json(const json& j) {
    std::ostringstream out;
    write_json(out, j, -1, 0);
    return out.str();
}

std::string pretty_json(const json& j) {
    std::ostringstream out;
    write_json(out, j, 2, 0);
    out << '\n';
    return out.str();
}

json to_json(const ArrivalSpec& spec) {
    return std::visit(
        [](const auto& l) -> json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, Bernoulli>) {
                return {{"law", "bernoulli"}, {"p", l.p}};
            } else if constexpr (std::is_same_v<L, Geometric>) {
                return {{"law", "geometric"}, {"mean", l.mean}};
            } else if constexpr (std::is_same_v<L, Poisson>) {
                return {{"law", "poisson"}, {"rate", l.rate}};
            } else if constexpr (std::is_same_v<L, BernoulliZeta>) {
                return {{"law", "bernoulli_zeta"}, {"p", l.p}, {"s", l.s}};
            } else {
                return {{"law", "deterministic"}, {"pattern", l.pattern}};
            }
        },
        spec.law());
}

ArrivalSpec arrival_from_json(const json& j) {
    const std::string where = "arrival spec";
    require_object(j, where);
    if (!j.contains("law")) throw ConfigError("arrival spec is missing \"law\"");
    const std::string law = as_string(j.at("law"), "arrival law");
    if (law == "deterministic") {
        reject_unknown(j, {"law", "pattern"}, where);
        if (!j.contains("pattern")) throw ConfigError("deterministic law is missing \"pattern\"");
        return ArrivalSpec(Deterministic{int_list(j.at("pattern"), "pattern")});
    }
    const auto family = parse_family(law);
    if (!family) throw ConfigError("unknown arrival law \"" + law + "\"");
    if (*family == LawFamily::bernoulli_zeta) {
        reject_unknown(j, {"law", "p", "s", "mean"}, where);
        const double s = j.contains("s") ? get_double(j, "s", where) : 2.5;
        if (j.contains("mean") == j.contains("p")) throw ConfigError("bernoulli_zeta needs exactly one of p, mean");
        if (j.contains("mean")) return calibrate_rate(get_double(j, "mean", where), *family, s);
        return ArrivalSpec(BernoulliZeta{get_double(j, "p", where), s});
    }
    const char* param = *family == LawFamily::bernoulli ? "p" : *family == LawFamily::poisson ? "rate" : "mean";
    reject_unknown(j, {"law", param, "mean"}, where);
    if (std::string(param) != "mean" && j.contains("mean")) {
        if (j.contains(param)) throw ConfigError(law + " needs exactly one of " + param + ", mean");
        return calibrate_rate(get_double(j, "mean", where), *family);
    }
    const double v = get_double(j, param, where);
    switch (*family) {
        case LawFamily::bernoulli: return ArrivalSpec(Bernoulli{v});
        case LawFamily::geometric: return ArrivalSpec(Geometric{v});
        case LawFamily::poisson: return ArrivalSpec(Poisson{v});
        default: break;
    }
    throw ConfigError("unknown arrival law \"" + law + "\"");
}

json to_json(const SimConfig& c) {
    json schedules = json::array();
    for (const auto& s : c.schedules) {
        json row = json::array();
        for (auto v : s.service) row.push_back(static_cast<int>(v));
        schedules.push_back(row);
    }
    json arrivals = json::array();
    for (const auto& a : c.arrivals) arrivals.push_back(to_json(a));
    json mg1 = {{"p", c.mg1.p},
                {"horizon", c.mg1.horizon},
                {"replications", c.mg1.replications},
                {"gamma", c.mg1.gamma},
                {"initial_workload", c.mg1.initial_workload}};
    mg1["service"] = c.mg1.service ? to_json(*c.mg1.service) : json(nullptr);
    return {
        {"schema_version", c.schema_version},
        {"num_queues", c.num_queues},
        {"schedules", schedules},
        {"arrivals", arrivals},
        {"horizon", c.horizon},
        {"replications", c.replications},
        {"seed", c.seed},
        {"initial_lengths", c.initial_lengths},
        {"probes",
         {{"ladder", c.probes.ladder},
          {"delays", c.probes.delays},
          {"tail", c.probes.tail},
          {"drift_T", c.probes.drift_T},
          {"burst_b", c.probes.burst_b},
          {"burst_seeds", c.probes.burst_seeds},
          {"burst_shape", c.probes.burst_shape}}},
        {"outputs",
         {{"trace_csv", c.outputs.trace_csv},
          {"estimators_json", c.outputs.estimators_json},
          {"delays_csv", c.outputs.delays_csv}}},
        {"sweep", {{"lambda2", c.sweep.lambda2}}},
        {"mg1", mg1},
    };
}

SimConfig config_from_json(const json& j) {
    require_object(j, "config");
    reject_unknown(j,
                   {"schema_version", "num_queues", "schedules", "arrivals", "horizon", "replications", "seed",
                    "initial_lengths", "probes", "outputs", "sweep", "mg1"},
                   "config");
    SimConfig c;
    if (!j.contains("schema_version")) throw ConfigError("config is missing \"schema_version\"");
    c.schema_version = static_cast<int>(as_int(j.at("schema_version"), "schema_version"));
    if (c.schema_version != kSchemaVersion) {
        throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    if (j.contains("num_queues")) c.num_queues = as_uint(j.at("num_queues"), "num_queues");
    if (j.contains("schedules")) {
        if (!j.at("schedules").is_array()) throw ConfigError("schedules must be an array");
        for (const auto& row : j.at("schedules")) {
            Schedule s;
            for (auto v : int_list(row, "schedule")) {
                if (v != 0 && v != 1) throw ConfigError("schedule entries must be 0 or 1");
                s.service.push_back(static_cast<std::uint8_t>(v));
            }
            c.schedules.push_back(std::move(s));
        }
    } else if (c.num_queues == 3) {
        c.schedules = ScheduleSet::three_queue().schedules();
    } else {
        throw ConfigError("schedules are required unless num_queues is 3");
    }
    if (!j.contains("arrivals") || !j.at("arrivals").is_array()) throw ConfigError("config needs an arrivals array");
    for (const auto& a : j.at("arrivals")) c.arrivals.push_back(arrival_from_json(a));
    if (j.contains("horizon")) c.horizon = as_int(j.at("horizon"), "horizon");
    if (j.contains("replications")) c.replications = as_uint(j.at("replications"), "replications");
    if (j.contains("seed")) c.seed = as_uint(j.at("seed"), "seed");
    if (j.contains("initial_lengths")) c.initial_lengths = int_list(j.at("initial_lengths"), "initial_lengths");

    c.probes.ladder = geometric_ladder(64, 2, 9);
    if (j.contains("probes")) {
        const auto& p = j.at("probes");
        require_object(p, "probes");
        reject_unknown(p, {"ladder", "delays", "tail", "drift_T", "burst_b", "burst_seeds", "burst_shape"}, "probes");
        if (p.contains("ladder")) c.probes.ladder = int_list(p.at("ladder"), "probes.ladder");
        if (p.contains("delays")) {
            if (!p.at("delays").is_boolean()) throw ConfigError("probes.delays must be a boolean");
            c.probes.delays = p.at("delays").get<bool>();
        }
        if (p.contains("tail")) {
            if (!p.at("tail").is_boolean()) throw ConfigError("probes.tail must be a boolean");
            c.probes.tail = p.at("tail").get<bool>();
        }
        if (p.contains("drift_T")) c.probes.drift_T = as_int(p.at("drift_T"), "probes.drift_T");
        if (p.contains("burst_b")) c.probes.burst_b = as_int(p.at("burst_b"), "probes.burst_b");
        if (p.contains("burst_seeds")) c.probes.burst_seeds = as_uint(p.at("burst_seeds"), "probes.burst_seeds");
        if (p.contains("burst_shape")) c.probes.burst_shape = get_double(p, "burst_shape", "probes");
    }
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        require_object(o, "outputs");
        reject_unknown(o, {"trace_csv", "estimators_json", "delays_csv"}, "outputs");
        if (o.contains("trace_csv")) c.outputs.trace_csv = as_string(o.at("trace_csv"), "outputs.trace_csv");
        if (o.contains("estimators_json")) {
            c.outputs.estimators_json = as_string(o.at("estimators_json"), "outputs.estimators_json");
        }
        if (o.contains("delays_csv")) c.outputs.delays_csv = as_string(o.at("delays_csv"), "outputs.delays_csv");
    }
    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        require_object(s, "sweep");
        reject_unknown(s, {"lambda2"}, "sweep");
        if (s.contains("lambda2")) {
            if (!s.at("lambda2").is_array()) throw ConfigError("sweep.lambda2 must be an array");
            for (const auto& v : s.at("lambda2")) {
                if (!v.is_number()) throw ConfigError("sweep.lambda2 entries must be numbers");
                c.sweep.lambda2.push_back(v.get<double>());
            }
        }
    }
    if (j.contains("mg1")) {
        const auto& m = j.at("mg1");
        require_object(m, "mg1");
        reject_unknown(m, {"p", "service", "horizon", "replications", "gamma", "initial_workload"}, "mg1");
        if (m.contains("p")) c.mg1.p = get_double(m, "p", "mg1");
        if (m.contains("service") && !m.at("service").is_null()) c.mg1.service = arrival_from_json(m.at("service"));
        if (m.contains("horizon")) c.mg1.horizon = as_int(m.at("horizon"), "mg1.horizon");
        if (m.contains("replications")) c.mg1.replications = as_uint(m.at("replications"), "mg1.replications");
        if (m.contains("gamma")) c.mg1.gamma = get_double(m, "gamma", "mg1");
        if (m.contains("initial_workload")) {
            c.mg1.initial_workload = as_int(m.at("initial_workload"), "mg1.initial_workload");
        }
    }
    c.validate();
    return c;
}

void SimConfig::validate() const {
    if (schema_version != kSchemaVersion) throw ConfigError("unsupported schema_version");
    if (num_queues < 1) throw ConfigError("num_queues must be positive");
    ScheduleSet set(num_queues, schedules);
    if (arrivals.size() != num_queues) {
        throw ConfigError("need one arrival spec per queue: got " + std::to_string(arrivals.size()) + " for " +
                          std::to_string(num_queues) + " queues");
    }
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (!initial_lengths.empty()) {
        if (initial_lengths.size() != num_queues) throw ConfigError("initial_lengths has the wrong dimension");
        for (auto q : initial_lengths) {
            if (q < 0) throw ConfigError("initial lengths must be nonnegative");
        }
    }
    for (std::size_t i = 0; i < probes.ladder.size(); ++i) {
        if (probes.ladder[i] < 1 || (i > 0 && probes.ladder[i] <= probes.ladder[i - 1])) {
            throw ConfigError("probes.ladder must be positive and strictly increasing");
        }
    }
    if (probes.drift_T < 0) throw ConfigError("probes.drift_T must be nonnegative");
    if (probes.drift_T > 0 && num_queues != 3) throw ConfigError("the drift probe needs exactly 3 queues");
    if (probes.burst_b < 0) throw ConfigError("probes.burst_b must be nonnegative");
    if (probes.burst_seeds < 1) throw ConfigError("probes.burst_seeds must be positive");
    if (!(probes.burst_shape > 2.0 && probes.burst_shape < 3.0)) throw ConfigError("probes.burst_shape must lie in (2, 3)");
    for (double l : sweep.lambda2) {
        if (!(l > 0.0 && l < 1.0)) throw ConfigError("sweep.lambda2 entries must lie in (0, 1)");
    }
    if (mg1.horizon < 1) throw ConfigError("mg1.horizon must be at least 1");
    if (mg1.replications < 1) throw ConfigError("mg1.replications must be at least 1");
    if (!(mg1.gamma > 0.0)) throw ConfigError("mg1.gamma must be positive");
    if (mg1.initial_workload < 0) throw ConfigError("mg1.initial_workload must be nonnegative");
}

NetworkModel SimConfig::model() const {
    NetworkModel m{ScheduleSet(num_queues, schedules), arrivals, initial_lengths};
    m.validate();
    return m;
}

std::vector<double> SimConfig::rates() const {
    std::vector<double> r;
    for (const auto& a : arrivals) r.push_back(a.declared_mean());
    return r;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

std::string config_digest(const SimConfig& config) { return fnv1a_hex(canonical_json(to_json(config))); }

}  // namespace mwlab

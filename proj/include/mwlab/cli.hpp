#pragma once

#include <ostream>

#include <json.hpp>

#include "mwlab/config.hpp"
#include "mwlab/estimators.hpp"
#include "mwlab/experiment.hpp"
#include "mwlab/fluid.hpp"
#include "mwlab/mg1.hpp"
#include "mwlab/region.hpp"

namespace mwlab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Entry point of the maxweight-lab tool. Reports go to files under --out;
// short summaries go to `out`, machine-readable errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Report fragments shared by the subcommands.
nlohmann::json to_json(const TruncatedMeanCurve& curve);
nlohmann::json to_json(const DivergenceReport& rep);
nlohmann::json to_json(const DriftProbeReport& rep);
nlohmann::json to_json(const TailReport& rep);
nlohmann::json to_json(const RegionVerdict& v);
nlohmann::json to_json(const FluidTrajectory& f);
nlohmann::json to_json(const BurstComparison& c);
nlohmann::json to_json(const WorkloadTrace& t);
nlohmann::json to_json(const ScalingReport& s);

// The estimator report written by `simulate`.
nlohmann::json network_report(const SimConfig& config, const NetworkRun& run);

}  // namespace mwlab

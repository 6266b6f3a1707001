#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "enrt/analysis.hpp"
#include "enrt/estimators.hpp"
#include "enrt/outcome.hpp"
#include "enrt/sensmodel.hpp"
#include "enrt/sim.hpp"

namespace enrt {

/// Round-trip-safe decimal rendering (17 significant digits).
std::string format_double(double v);

nlohmann::json to_json(const EdgeProbabilityModel& model);
EdgeProbabilityModel edge_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EffectEstimate& est);

nlohmann::json to_json(const OutcomeModelSpec& spec);
OutcomeModelSpec outcome_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Prior& prior);
Prior prior_from_json(const nlohmann::json& j);

nlohmann::json to_json(const sim::ScenarioConfig& cfg);
sim::ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Resolved CLI run configuration. Parsing is strict: unknown keys anywhere
/// in the document are rejected.
struct RunConfig {
    std::string command;  // estimate | gsa | pba | simulate
    std::string input;
    double p_z = 0.5;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int threads = 1;
    double ci_level = 0.95;
    std::vector<std::string> estimands = {"IE", "DE"};
    bool augmented = false;
    bool three_level = false;
    std::optional<OutcomeModelSpec> outcome_model;
    std::optional<GridPoint> point;  // "model" (+ kappa/delta) for estimate/pba
    std::vector<GridPoint> grid;     // gsa
    PriorSet priors;                 // pba
    PBAConfig pba;                   // pba block
    std::optional<sim::ScenarioConfig> scenario;  // simulate block
};

RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace enrt

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "enrt/estimators.hpp"
#include "enrt/sample.hpp"
#include "enrt/sensmodel.hpp"

namespace enrt::sim {

/// Scenario description for the contaminated-ENRT simulator.
struct ScenarioConfig {
    int n_e = 200;
    int alters_per_ego = 2;
    double m_a = 100.0;  // expected latent alter-ego edges
    double m_e = 150.0;  // expected latent ego-ego edges
    std::optional<double> gamma;  // homophily strength; unset means homogeneous contamination
    Metric metric = Metric::Euclidean;
    double p_z = 0.5;
    long long reps = 5000;
    std::uint64_t seed = 0;
    std::vector<std::string> estimators = {"naive", "heterogeneous", "homogeneous"};
};

/// Covariate generator: two Bernoullis with role-specific rates plus a
/// standard normal.
struct CovariateConfig {
    double ego_p1 = 0.6;
    double ego_p2 = 0.2;
    double alter_p1 = 0.5;
    double alter_p2 = 0.3;
};

/// Observed star skeleton plus the realized latent edges of the population
/// network. The skeleton's treatments/outcomes are placeholders; replications
/// supply realizations through DesignData.
struct PopulationNetwork {
    EgocentricSample sample;
    std::vector<std::pair<int, int>> latent_ego_ego;    // ego-index pairs, i < j
    std::vector<std::pair<int, int>> latent_alter_ego;  // (alter index, ego index != e(alter))
    EdgeProbabilityModel generating_model;
};

PopulationNetwork generate_population(const ScenarioConfig& cfg, const CovariateConfig& covgen,
                                      std::uint64_t seed);
PopulationNetwork generate_population(const ScenarioConfig& cfg, std::uint64_t seed);

/// Coefficients of the outcome-generating models. Defaults give true effects
/// IE = DE = 2 with interaction parameter kappa = 1.5.
struct OutcomeCoefficients {
    double ego_intercept = -0.5;
    double ego_z = 2.0;
    double ego_f = 0.5;
    double ego_zf = 1.0;
    Eigen::Vector3d beta_ego{-0.5, -0.3, 0.2};
    double alter_intercept = -0.5;
    double alter_f = 2.0;
    Eigen::Vector3d beta_alter{-0.4, -0.2, 0.1};
    double noise_sd = 1.0;
};

struct PotentialOutcomeTable {
    PotentialOutcomes cells;  // ego n_e x 4, alter n_a x 2
    double ie_true = 0.0;
    double de_true = 0.0;
    std::optional<double> kappa;  // implied interaction parameter, when constant
};

PotentialOutcomeTable generate_potential_outcomes(const PopulationNetwork& net,
                                                  const OutcomeCoefficients& coef,
                                                  std::uint64_t noise_seed);

/// Sample-average effects (and the implied kappa, flagged absent when the
/// ego cells are inconsistent with a single constant).
struct TrueEffects {
    double ie = 0.0;
    double de = 0.0;
    std::optional<double> kappa;
};
TrueEffects true_effects(const PotentialOutcomes& cells);

/// Edge probabilities equal to the realized latent edges (entries in {0,1});
/// the oracle specification for exactness checks.
EdgeProbabilities realized_edge_probabilities(const PopulationNetwork& net);

/// True exposures under the full population network for one treatment draw.
struct TrueExposures {
    Eigen::VectorXd ego;    // 0/1 per ego
    Eigen::VectorXd alter;  // 0/1 per alter
};
TrueExposures true_exposures(const PopulationNetwork& net, const Eigen::VectorXd& z_ego);

/// Realize a full design (true exposures -> consistent observed outcomes ->
/// observed exposures) for one treatment vector.
DesignData realize_design(const PopulationNetwork& net, const PotentialOutcomeTable& pot,
                          const Eigen::VectorXd& z_ego);

struct EstimatorSummary {
    std::string specification;  // "naive", "heterogeneous", or "homogeneous"
    bool augmented = false;
    Estimand estimand = Estimand::IE;
    double bias = 0.0;
    double coverage = 0.0;
    double sd_se = 0.0;
    double mean_point = 0.0;
    double sd_point = 0.0;
    double mean_se = 0.0;
};

struct ReplicationReport {
    std::vector<EstimatorSummary> rows;
    double ie_true = 0.0;
    double de_true = 0.0;
    long long reps = 0;
};

/// Redraw treatments `reps` times and evaluate the requested estimators
/// against the fixed network and potential outcomes. Roster tokens: naive,
/// heterogeneous, homogeneous, each optionally suffixed "_augmented".
ReplicationReport run_replications(const PopulationNetwork& net, const PotentialOutcomeTable& pot,
                                   const std::vector<std::string>& roster, long long reps,
                                   double p_z, std::uint64_t seed, int threads = 1);

}  // namespace enrt::sim

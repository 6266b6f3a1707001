#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "enrt/sample.hpp"
#include "enrt/sensmodel.hpp"

namespace enrt {

enum class Estimand { IE, DE, IE_RR, IE_3L };

std::string estimand_name(Estimand e);

struct EffectEstimate {
    Estimand estimand = Estimand::IE;
    double point = 0.0;
    std::optional<double> variance;  // absent for the relative-risk estimator
    double ci_low = 0.0;
    double ci_high = 0.0;
    double level = 0.95;
    std::vector<std::pair<std::string, double>> params;  // sensitivity parameters used
    std::vector<std::string> warnings;
};

/// Interaction sensitivity parameter: the ego direct effect under exposure is
/// kappa times the direct effect under non-exposure.
struct KappaSpec {
    double kappa = 1.0;
};

/// Three-level dose sensitivity parameter: the marginal effect of a second-or
/// -higher exposure is delta times the effect of the first.
struct DeltaSpec {
    double delta = 0.0;
};

/// One realization of the randomization: treatments, observed outcomes, and
/// observed exposures. Lets the simulator reuse a sample skeleton across
/// replications without rebuilding it.
struct DesignData {
    Eigen::VectorXd z_ego;    // 0/1 per ego
    Eigen::VectorXd y_ego;    // observed outcome per ego
    Eigen::VectorXd y_alter;  // observed outcome per alter
    Eigen::VectorXd f_alter;  // observed exposure per alter (recruiting ego's treatment)
};

/// Extract the realization stored on the sample (requires ego treatments).
DesignData design_from_sample(const EgocentricSample& s);

// Horvitz-Thompson estimators on observed exposures.
EffectEstimate naive_ie(const EgocentricSample& s, const DesignData& d, double level = 0.95);
EffectEstimate naive_ie(const EgocentricSample& s, double level = 0.95);
EffectEstimate naive_de(const EgocentricSample& s, const DesignData& d, double level = 0.95);
EffectEstimate naive_de(const EgocentricSample& s, double level = 0.95);

// Bias-corrected estimators given an exposure profile.
EffectEstimate adjusted_ie(const EgocentricSample& s, const DesignData& d,
                           const ExposureProfile& prof, double level = 0.95);
EffectEstimate adjusted_ie(const EgocentricSample& s, const ExposureProfile& prof,
                           double level = 0.95);

/// Direct-effect correction; pass the edge model to include the conservative
/// shared-neighbor covariance term in the variance (omitted when null).
EffectEstimate adjusted_de(const EgocentricSample& s, const DesignData& d,
                           const ExposureProfile& prof, const KappaSpec& kappa,
                           const EdgeProbabilities* edge_model = nullptr, double level = 0.95);
EffectEstimate adjusted_de(const EgocentricSample& s, const ExposureProfile& prof,
                           const KappaSpec& kappa, const EdgeProbabilities* edge_model = nullptr,
                           double level = 0.95);

/// Relative-risk estimator for binary outcomes (point estimate only).
EffectEstimate adjusted_ie_rr(const EgocentricSample& s, const DesignData& d,
                              const ExposureProfile& prof, double level = 0.95);
EffectEstimate adjusted_ie_rr(const EgocentricSample& s, const ExposureProfile& prof,
                              double level = 0.95);

/// Indirect effect under the three-level exposure mapping {0, 1, 2+}.
EffectEstimate adjusted_ie_three_level(const EgocentricSample& s, const DesignData& d,
                                       const ExposureProfile& prof, const DeltaSpec& delta,
                                       double level = 0.95);
EffectEstimate adjusted_ie_three_level(const EgocentricSample& s, const ExposureProfile& prof,
                                       const DeltaSpec& delta, double level = 0.95);

/// Cluster (ego-network totals) variance of a weighted alter-level HT sum.
double variance_ie(const EgocentricSample& s, const DesignData& d,
                   const Eigen::VectorXd& alter_weights, std::vector<std::string>* warnings = nullptr);
double variance_ie(const EgocentricSample& s, const Eigen::VectorXd& alter_weights,
                   std::vector<std::string>* warnings = nullptr);

/// Neyman variance of a weighted ego-level HT sum, plus the conservative
/// covariance term driven by expected shared latent neighbors when an edge
/// model is supplied.
double variance_de(const EgocentricSample& s, const DesignData& d,
                   const Eigen::VectorXd& ego_weights, const EdgeProbabilities* edge_model = nullptr,
                   std::vector<std::string>* warnings = nullptr);
double variance_de(const EgocentricSample& s, const Eigen::VectorXd& ego_weights,
                   const EdgeProbabilities* edge_model = nullptr,
                   std::vector<std::string>* warnings = nullptr);

/// Expected number of shared latent neighbors for every ego pair: entry (i,j)
/// is sum_k rho[i,k] * rho[j,k] over k != i,j (zero diagonal).
Eigen::MatrixXd expected_shared_neighbors(const Eigen::MatrixXd& rho_ego);

/// Conservative covariance sum: scale/n^2 * sum_{i != j} xi_ij * s_i * s_j
/// evaluated without forming the xi matrix.
double shared_neighbor_covariance(const Eigen::MatrixXd& rho_ego, const Eigen::VectorXd& abs_resid,
                                  double p_z);

std::pair<double, double> wald_ci(double point, double variance, double level);

/// Standard-normal quantile used for the Wald intervals.
double normal_quantile(double p);

/// Per-unit potential outcomes on the two-level exposure mapping. Ego columns
/// are Y(z,f) at ego_col(z,f); alter columns are Y(0,0), Y(0,1).
struct PotentialOutcomes {
    Eigen::MatrixXd ego;    // n_e x 4
    Eigen::MatrixXd alter;  // n_a x 2
    static constexpr int ego_col(int z, int f) { return z + 2 * f; }
};

/// Closed-form expected bias of the naive estimators given the full table:
/// returns (IE bias, DE bias).
std::pair<double, double> theoretical_naive_bias(const PotentialOutcomes& po,
                                                 const ExposureProfile& prof, double p_z);

}  // namespace enrt

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "enrt/estimators.hpp"
#include "enrt/sample.hpp"
#include "enrt/sensmodel.hpp"

namespace enrt {

struct OutcomeModelSpec {
    enum class Family { Linear, Logistic };
    Family family = Family::Linear;
    std::vector<std::string> covariates;  // empty selects every covariate column
    bool neighbor_averages = false;       // append average of observed neighbors' covariates
};

/// A fitted outcome regression, evaluable at either indicator level.
/// Coefficients are [intercept, indicator, features...]; logistic predictions
/// are on the probability scale.
struct FittedModel {
    OutcomeModelSpec::Family family = OutcomeModelSpec::Family::Linear;
    Eigen::VectorXd beta;
    std::vector<std::string> warnings;

    double predict(double indicator, const Eigen::RowVectorXd& features) const;
};

/// Least squares for the linear family; IRLS (gradient norm < 1e-8, at most
/// 50 iterations) for the logistic family. Rank-deficient designs fall back
/// to a small ridge penalty; diverging IRLS falls back to the linear family.
FittedModel fit_outcome_model(const OutcomeModelSpec& spec, const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& indicator, const Eigen::VectorXd& outcome);

/// Ego-network level two-fold split. Every ego-network lands wholly in one
/// fold; both folds are guaranteed at least one ego and one alter.
struct CrossFitPlan {
    std::vector<int> fold_of_ego;  // 0 or 1 per ego index
    std::uint64_t seed = 0;
};

CrossFitPlan make_crossfit_plan(const EgocentricSample& s, std::uint64_t seed);

/// Cross-fitted predictions: models trained on the complementary fold,
/// evaluated on each unit at both indicator levels. Computed once per
/// analysis and reused across sensitivity-parameter values.
struct CrossFitPredictions {
    Eigen::MatrixXd mu_ego;    // n_e x 2, columns are z = 0, 1
    Eigen::MatrixXd mu_alter;  // n_a x 2, columns are observed exposure f = 0, 1
    std::vector<int> fold_of_ego;
    std::vector<std::string> warnings;
};

CrossFitPredictions crossfit_predictions(const EgocentricSample& s, const DesignData& d,
                                         const OutcomeModelSpec& spec, const CrossFitPlan& plan);

/// Feature matrix per the spec's recipe for the given units (rows follow
/// ego/alter dense index order).
Eigen::MatrixXd model_features(const EgocentricSample& s, const OutcomeModelSpec& spec, Role role);

struct AugmentedEstimates {
    EffectEstimate ie;
    EffectEstimate de;
};

/// Outcome-model augmented bias-corrected estimators with split-combined
/// variances. The edge model, when given, adds the per-fold shared-neighbor
/// covariance term to the DE variance. Passing a delta switches the indirect
/// effect to the three-level weighting (requires a three-level profile).
AugmentedEstimates augmented_estimates(const EgocentricSample& s, const DesignData& d,
                                       const ExposureProfile& prof, const KappaSpec& kappa,
                                       const CrossFitPredictions& preds,
                                       const EdgeProbabilities* edge_model = nullptr,
                                       double level = 0.95,
                                       const DeltaSpec* three_level_delta = nullptr);
AugmentedEstimates augmented_estimates(const EgocentricSample& s, const ExposureProfile& prof,
                                       const KappaSpec& kappa, const OutcomeModelSpec& spec,
                                       const CrossFitPlan& plan,
                                       const EdgeProbabilities* edge_model = nullptr,
                                       double level = 0.95,
                                       const DeltaSpec* three_level_delta = nullptr);

}  // namespace enrt

#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "enrt/sample.hpp"

namespace enrt {

enum class Metric { Euclidean, Cosine, Lp };

/// Sensitivity specification for latent-edge probabilities. Four variants:
/// constant probabilities, constant probabilities implied by an expected edge
/// count, and covariate-heterogeneous versions of both.
struct EdgeProbabilityModel {
    enum class Kind { HomogeneousProb, HomogeneousCount, HeterogeneousProb, HeterogeneousCount };
    Kind kind = Kind::HomogeneousProb;

    double rho_e = 0.0;  // ego-ego probability (base probability for HeterogeneousProb)
    double rho_a = 0.0;  // alter-ego probability (base probability for HeterogeneousProb)
    double m_e = 0.0;    // expected missing ego-ego edges (count variants)
    double m_a = 0.0;    // expected missing alter-ego edges (count variants)
    double gamma_e = 0.0;  // homophily strength (heterogeneous variants)
    double gamma_a = 0.0;
    Metric metric = Metric::Euclidean;
    double lp_p = 2.0;        // order for Metric::Lp
    bool standardize = true;  // center/scale covariates before distances

    bool heterogeneous() const {
        return kind == Kind::HeterogeneousProb || kind == Kind::HeterogeneousCount;
    }
    bool count_based() const {
        return kind == Kind::HomogeneousCount || kind == Kind::HeterogeneousCount;
    }
    /// Throws std::invalid_argument when parameters are out of range for the
    /// given sample dimensions.
    void validate(int n_e, int n_a) const;
};

/// Postulated probabilities of each latent edge. ego_ego is symmetric with a
/// zero diagonal; alter_ego holds a zero at (i, e(i)) since the edge to the
/// recruiting ego is observed, not latent.
struct EdgeProbabilities {
    Eigen::MatrixXd ego_ego;    // n_e x n_e
    Eigen::MatrixXd alter_ego;  // n_a x n_e
    std::vector<std::string> warnings;
};

/// Pairwise covariate distances over recruited units.
struct PairwiseDistances {
    Eigen::MatrixXd ego_ego;    // n_e x n_e, zero diagonal
    Eigen::MatrixXd alter_ego;  // n_a x n_e (entry for the own ego is still a
                                // valid distance; consumers skip it)
};

PairwiseDistances pairwise_distances(const EgocentricSample& s, Metric metric, bool standardize,
                                     double lp_p = 2.0);

EdgeProbabilities build_edge_probabilities(const EdgeProbabilityModel& model,
                                           const EgocentricSample& s);

/// Eq.-style exposure probabilities under edge independence.
/// Ego i: 1 - prod_{j != i} (1 - p_z * rho_e[i,j]).
Eigen::VectorXd exposure_prob_ego(const EdgeProbabilities& ep, double p_z);
/// Alter i: p_z + (1-p_z) * [1 - prod_{j != e(i)} (1 - p_z * rho_a[i,j])].
Eigen::VectorXd exposure_prob_alter(const EdgeProbabilities& ep, double p_z,
                                    const std::vector<int>& alter_ego);

/// Distribution of the number of treated latent neighbors beyond the own ego:
/// columns (P[S=0], P[S=1], P[S>=2]) per alter.
Eigen::MatrixXd exposure_probs_three_level(const EdgeProbabilities& ep, double p_z,
                                           const std::vector<int>& alter_ego);

/// Exact (P[S=0], P[S=1], P[S>=2]) for a sum of independent Bernoullis.
std::array<double, 3> poisson_binomial_tail(std::span<const double> probs);

/// Per-unit exposure probabilities ready for estimator weighting. Values that
/// reach 1 are capped at 1 - 1e-12 so downstream weights stay finite.
struct ExposureProfile {
    Eigen::VectorXd pi_alter;                  // in [p_z, 1) per alter
    Eigen::VectorXd pi_ego;                    // in [0, 1) per ego
    std::optional<Eigen::MatrixXd> three_level;  // n_a x 3 when requested
};

ExposureProfile make_exposure_profile(const EdgeProbabilities& ep, double p_z,
                                      const std::vector<int>& alter_ego,
                                      bool with_three_level = false);
ExposureProfile make_exposure_profile(const EdgeProbabilities& ep, const EgocentricSample& s,
                                      bool with_three_level = false);

}  // namespace enrt

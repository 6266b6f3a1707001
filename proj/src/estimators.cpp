#include "enrt/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "enrt/rng.hpp"

namespace enrt {

namespace {

Eigen::VectorXd ht_terms_alter(const DesignData& d, double p_z) {
    // I{F=1}Y/p_z - I{F=0}Y/(1-p_z) per alter
    return (d.f_alter.array() / p_z - (1.0 - d.f_alter.array()) / (1.0 - p_z)) *
           d.y_alter.array();
}

Eigen::VectorXd ht_terms_ego(const DesignData& d, double p_z) {
    return (d.z_ego.array() / p_z - (1.0 - d.z_ego.array()) / (1.0 - p_z)) * d.y_ego.array();
}

void warn_empty_alter_strata(const DesignData& d, std::vector<std::string>& warnings) {
    const double exposed = d.f_alter.sum();
    if (exposed == 0.0) warnings.push_back("no exposed alters in this realization");
    if (exposed == static_cast<double>(d.f_alter.size()))
        warnings.push_back("no unexposed alters in this realization");
}

void warn_empty_ego_strata(const DesignData& d, std::vector<std::string>& warnings) {
    const double treated = d.z_ego.sum();
    if (treated == 0.0) warnings.push_back("no treated egos in this realization");
    if (treated == static_cast<double>(d.z_ego.size()))
        warnings.push_back("no control egos in this realization");
}

void attach_ci(EffectEstimate& est, double level) {
    est.level = level;
    if (est.variance) {
        const auto [lo, hi] = wald_ci(est.point, *est.variance, level);
        est.ci_low = lo;
        est.ci_high = hi;
    } else {
        est.ci_low = est.ci_high = std::numeric_limits<double>::quiet_NaN();
    }
}

void check_profile_alter(const ExposureProfile& prof, const EgocentricSample& s) {
    if (prof.pi_alter.size() != s.n_a())
        throw std::invalid_argument("exposure profile does not match alter count");
    for (int a = 0; a < s.n_a(); ++a)
        if (prof.pi_alter[a] >= 1.0)
            throw std::invalid_argument("alter exposure probability >= 1 at alter index " +
                                        std::to_string(a));
}

}  // namespace

std::string estimand_name(Estimand e) {
    switch (e) {
        case Estimand::IE: return "IE";
        case Estimand::DE: return "DE";
        case Estimand::IE_RR: return "IE_RR";
        case Estimand::IE_3L: return "IE_3L";
    }
    return "?";
}

DesignData design_from_sample(const EgocentricSample& s) {
    DesignData d;
    d.z_ego = s.ego_treatments();
    d.y_ego = s.ego_outcomes();
    d.y_alter = s.alter_outcomes();
    d.f_alter.resize(s.n_a());
    for (int a = 0; a < s.n_a(); ++a) d.f_alter[a] = d.z_ego[s.alter_ego[a]];
    return d;
}

double variance_ie(const EgocentricSample& s, const DesignData& d,
                   const Eigen::VectorXd& alter_weights, std::vector<std::string>* warnings) {
    const Eigen::VectorXd r = ht_terms_alter(d, s.p_z).cwiseProduct(alter_weights);
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(s.n_e());
    for (int a = 0; a < s.n_a(); ++a) totals[s.alter_ego[a]] += r[a];
    if (s.n_e() < 2) {
        if (warnings) warnings->push_back("single ego-network: no between-cluster variation");
        return 0.0;
    }
    const double mean = totals.mean();
    const double n_a2 = static_cast<double>(s.n_a()) * s.n_a();
    return (totals.array() - mean).square().sum() / n_a2;
}

double variance_ie(const EgocentricSample& s, const Eigen::VectorXd& alter_weights,
                   std::vector<std::string>* warnings) {
    return variance_ie(s, design_from_sample(s), alter_weights, warnings);
}

Eigen::MatrixXd expected_shared_neighbors(const Eigen::MatrixXd& rho_ego) {
    Eigen::MatrixXd xi = rho_ego * rho_ego.transpose();
    xi.diagonal().setZero();  // only distinct pairs are meaningful
    return xi;
}

double shared_neighbor_covariance(const Eigen::MatrixXd& rho_ego, const Eigen::VectorXd& abs_resid,
                                  double p_z) {
    const Eigen::Index n_e = rho_ego.rows();
    if (n_e == 0) return 0.0;
    // sum_{i != j} xi_ij s_i s_j = |rho^T s|^2 - sum_i |rho_i.|^2 s_i^2, using
    // the zero diagonal of rho.
    const double full = (rho_ego.transpose() * abs_resid).squaredNorm();
    const double self = (rho_ego.array().square().matrix().rowwise().sum().array() *
                         abs_resid.array().square())
                            .sum();
    const double n2 = static_cast<double>(n_e) * static_cast<double>(n_e);
    return p_z * (1.0 - p_z) / n2 * (full - self);
}

double variance_de(const EgocentricSample& s, const DesignData& d,
                   const Eigen::VectorXd& ego_weights, const EdgeProbabilities* edge_model,
                   std::vector<std::string>* warnings) {
    const Eigen::VectorXd e = ht_terms_ego(d, s.p_z).cwiseProduct(ego_weights);
    if (s.n_e() < 2) {
        if (warnings) warnings->push_back("single ego: degenerate variance");
        return 0.0;
    }
    const double mean = e.mean();
    const Eigen::VectorXd resid = e.array() - mean;
    const double n2 = static_cast<double>(s.n_e()) * s.n_e();
    double v = resid.squaredNorm() / n2;
    if (edge_model)
        v += shared_neighbor_covariance(edge_model->ego_ego, resid.cwiseAbs(), s.p_z);
    return v;
}

double variance_de(const EgocentricSample& s, const Eigen::VectorXd& ego_weights,
                   const EdgeProbabilities* edge_model, std::vector<std::string>* warnings) {
    return variance_de(s, design_from_sample(s), ego_weights, edge_model, warnings);
}

EffectEstimate naive_ie(const EgocentricSample& s, const DesignData& d, double level) {
    if (s.n_a() < 1) throw std::invalid_argument("indirect effect requires at least one alter");
    EffectEstimate est;
    est.estimand = Estimand::IE;
    est.point = ht_terms_alter(d, s.p_z).mean();
    est.variance = variance_ie(s, d, Eigen::VectorXd::Ones(s.n_a()), &est.warnings);
    warn_empty_alter_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate naive_ie(const EgocentricSample& s, double level) {
    return naive_ie(s, design_from_sample(s), level);
}

EffectEstimate naive_de(const EgocentricSample& s, const DesignData& d, double level) {
    if (s.n_e() < 1) throw std::invalid_argument("direct effect requires at least one ego");
    EffectEstimate est;
    est.estimand = Estimand::DE;
    est.point = ht_terms_ego(d, s.p_z).mean();
    est.variance = variance_de(s, d, Eigen::VectorXd::Ones(s.n_e()), nullptr, &est.warnings);
    warn_empty_ego_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate naive_de(const EgocentricSample& s, double level) {
    return naive_de(s, design_from_sample(s), level);
}

EffectEstimate adjusted_ie(const EgocentricSample& s, const DesignData& d,
                           const ExposureProfile& prof, double level) {
    if (s.n_a() < 1) throw std::invalid_argument("indirect effect requires at least one alter");
    check_profile_alter(prof, s);
    EffectEstimate est;
    est.estimand = Estimand::IE;
    if ((prof.pi_alter.array() < s.p_z - 1e-12).any())
        est.warnings.push_back("alter exposure probability below p_z");
    const Eigen::VectorXd weights = (1.0 - s.p_z) / (1.0 - prof.pi_alter.array());
    est.point = ht_terms_alter(d, s.p_z).cwiseProduct(weights).mean();
    est.variance = variance_ie(s, d, weights, &est.warnings);
    warn_empty_alter_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate adjusted_ie(const EgocentricSample& s, const ExposureProfile& prof, double level) {
    return adjusted_ie(s, design_from_sample(s), prof, level);
}

EffectEstimate adjusted_de(const EgocentricSample& s, const DesignData& d,
                           const ExposureProfile& prof, const KappaSpec& kappa,
                           const EdgeProbabilities* edge_model, double level) {
    if (s.n_e() < 1) throw std::invalid_argument("direct effect requires at least one ego");
    if (!std::isfinite(kappa.kappa)) throw std::invalid_argument("kappa must be finite");
    if (prof.pi_ego.size() != s.n_e())
        throw std::invalid_argument("exposure profile does not match ego count");

    EffectEstimate est;
    est.estimand = Estimand::DE;
    Eigen::VectorXd weights(s.n_e());
    for (int i = 0; i < s.n_e(); ++i) {
        const double denom = 1.0 + prof.pi_ego[i] * (kappa.kappa - 1.0);
        if (denom == 0.0)
            throw std::invalid_argument("kappa sits exactly on the sign-flip boundary for ego " +
                                        std::to_string(i));
        weights[i] = 1.0 / denom;
    }
    const double max_pi = prof.pi_ego.size() > 0 ? prof.pi_ego.maxCoeff() : 0.0;
    if (max_pi > 0.0 && kappa.kappa <= 1.0 - 1.0 / max_pi)
        est.warnings.push_back("kappa in the sign-flip region (kappa <= 1 - 1/max pi_e)");

    est.point = ht_terms_ego(d, s.p_z).cwiseProduct(weights).mean();
    est.variance = variance_de(s, d, weights, edge_model, &est.warnings);
    warn_empty_ego_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate adjusted_de(const EgocentricSample& s, const ExposureProfile& prof,
                           const KappaSpec& kappa, const EdgeProbabilities* edge_model,
                           double level) {
    return adjusted_de(s, design_from_sample(s), prof, kappa, edge_model, level);
}

EffectEstimate adjusted_ie_rr(const EgocentricSample& s, const DesignData& d,
                              const ExposureProfile& prof, double level) {
    if (s.n_a() < 1) throw std::invalid_argument("indirect effect requires at least one alter");
    check_profile_alter(prof, s);
    for (int a = 0; a < s.n_a(); ++a)
        if (d.y_alter[a] != 0.0 && d.y_alter[a] != 1.0)
            throw std::invalid_argument("relative risk requires 0/1 outcomes (alter index " +
                                        std::to_string(a) + ")");

    double numerator = 0.0;
    double denominator = 0.0;
    for (int a = 0; a < s.n_a(); ++a) {
        const double exposed_term = d.f_alter[a] * d.y_alter[a] / s.p_z;
        const double unexposed_term = (1.0 - d.f_alter[a]) * d.y_alter[a] / (1.0 - s.p_z);
        numerator += exposed_term;
        const double w = (1.0 - s.p_z) / (1.0 - prof.pi_alter[a]);
        const double c = (prof.pi_alter[a] - s.p_z) / (1.0 - prof.pi_alter[a]);
        denominator += w * unexposed_term - c * exposed_term;
    }
    if (denominator == 0.0) throw std::invalid_argument("relative-risk denominator is zero");

    EffectEstimate est;
    est.estimand = Estimand::IE_RR;
    est.point = numerator / denominator;
    warn_empty_alter_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate adjusted_ie_rr(const EgocentricSample& s, const ExposureProfile& prof,
                              double level) {
    return adjusted_ie_rr(s, design_from_sample(s), prof, level);
}

EffectEstimate adjusted_ie_three_level(const EgocentricSample& s, const DesignData& d,
                                       const ExposureProfile& prof, const DeltaSpec& delta,
                                       double level) {
    if (s.n_a() < 1) throw std::invalid_argument("indirect effect requires at least one alter");
    if (!prof.three_level)
        throw std::invalid_argument("three-level estimator requires a three-level profile");
    if (!std::isfinite(delta.delta)) throw std::invalid_argument("delta must be finite");
    const Eigen::MatrixXd& star = *prof.three_level;
    if (star.rows() != s.n_a())
        throw std::invalid_argument("three-level profile does not match alter count");

    EffectEstimate est;
    est.estimand = Estimand::IE_3L;
    Eigen::VectorXd weights(s.n_a());
    for (int a = 0; a < s.n_a(); ++a) {
        const double denom = star(a, 0) + star(a, 1) * delta.delta;
        if (denom <= 0.0)
            throw std::invalid_argument("nonpositive three-level weight denominator at alter " +
                                        std::to_string(a));
        weights[a] = 1.0 / denom;
    }
    est.point = ht_terms_alter(d, s.p_z).cwiseProduct(weights).mean();
    est.variance = variance_ie(s, d, weights, &est.warnings);
    warn_empty_alter_strata(d, est.warnings);
    attach_ci(est, level);
    return est;
}

EffectEstimate adjusted_ie_three_level(const EgocentricSample& s, const ExposureProfile& prof,
                                       const DeltaSpec& delta, double level) {
    return adjusted_ie_three_level(s, design_from_sample(s), prof, delta, level);
}

double normal_quantile(double p) { return rng::Stream::normal_quantile(p); }

std::pair<double, double> wald_ci(double point, double variance, double level) {
    if (variance < 0) throw std::invalid_argument("negative variance");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level outside (0,1)");
    const double half = normal_quantile(0.5 + level / 2.0) * std::sqrt(variance);
    return {point - half, point + half};
}

std::pair<double, double> theoretical_naive_bias(const PotentialOutcomes& po,
                                                 const ExposureProfile& prof, double p_z) {
    const Eigen::Index n_a = po.alter.rows();
    const Eigen::Index n_e = po.ego.rows();
    double ie_bias = 0.0;
    for (Eigen::Index a = 0; a < n_a; ++a)
        ie_bias += (p_z - prof.pi_alter[a]) / (1.0 - p_z) * (po.alter(a, 1) - po.alter(a, 0));
    if (n_a > 0) ie_bias /= static_cast<double>(n_a);

    double de_bias = 0.0;
    for (Eigen::Index i = 0; i < n_e; ++i) {
        const double exposed_effect =
            po.ego(i, PotentialOutcomes::ego_col(1, 1)) - po.ego(i, PotentialOutcomes::ego_col(0, 1));
        const double unexposed_effect =
            po.ego(i, PotentialOutcomes::ego_col(1, 0)) - po.ego(i, PotentialOutcomes::ego_col(0, 0));
        de_bias += prof.pi_ego[i] * (exposed_effect - unexposed_effect);
    }
    if (n_e > 0) de_bias /= static_cast<double>(n_e);
    return {ie_bias, de_bias};
}

}  // namespace enrt

#include "enrt/sensmodel.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace enrt {

namespace {

constexpr double kProbCap = 1.0 - 1e-12;

void check_unit_interval(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
}

double metric_distance(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, Metric metric,
                       double lp_p) {
    switch (metric) {
        case Metric::Euclidean:
            return (a - b).norm();
        case Metric::Cosine: {
            const double na = a.norm();
            const double nb = b.norm();
            if (na == 0.0 || nb == 0.0)
                throw std::invalid_argument("cosine distance undefined for zero-norm covariates");
            return 1.0 - a.dot(b) / (na * nb);
        }
        case Metric::Lp: {
            if (lp_p <= 0) throw std::invalid_argument("Lp metric requires p > 0");
            return std::pow((a - b).array().abs().pow(lp_p).sum(), 1.0 / lp_p);
        }
    }
    throw std::logic_error("unknown metric");
}

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

void EdgeProbabilityModel::validate(int n_e, int n_a) const {
    if (gamma_e < 0 || gamma_a < 0) throw std::invalid_argument("gamma must be nonnegative");
    switch (kind) {
        case Kind::HomogeneousProb:
        case Kind::HeterogeneousProb:
            check_unit_interval(rho_e, "rho_e");
            check_unit_interval(rho_a, "rho_a");
            break;
        case Kind::HomogeneousCount:
        case Kind::HeterogeneousCount: {
            const double max_e = 0.5 * n_e * (n_e - 1);
            const double max_a = static_cast<double>(n_a) * (n_e - 1);
            if (m_e < 0 || m_e > max_e)
                throw std::invalid_argument("m_e outside [0, n_e(n_e-1)/2]");
            if (m_a < 0 || m_a > max_a)
                throw std::invalid_argument("m_a outside [0, n_a(n_e-1)]");
            if (n_e == 1 && m_e > 0)
                throw std::invalid_argument("ego-ego edge count > 0 with a single ego");
            break;
        }
    }
}

PairwiseDistances pairwise_distances(const EgocentricSample& s, Metric metric, bool standardize,
                                     double lp_p) {
    if (s.covariates.cols() < 1)
        throw std::invalid_argument("pairwise distances require at least one covariate");

    Eigen::MatrixXd x = s.covariates;
    if (standardize) {
        const Eigen::RowVectorXd mean = x.colwise().mean();
        x.rowwise() -= mean;
        const Eigen::Index n = x.rows();
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double sd = std::sqrt(x.col(c).squaredNorm() / std::max<Eigen::Index>(n - 1, 1));
            if (sd == 0.0)
                throw std::invalid_argument("covariate '" +
                                            (c < static_cast<Eigen::Index>(s.covariate_names.size())
                                                 ? s.covariate_names[c]
                                                 : std::to_string(c)) +
                                            "' has zero variance; cannot standardize");
            x.col(c) /= sd;
        }
    }

    PairwiseDistances d;
    d.ego_ego = Eigen::MatrixXd::Zero(s.n_e(), s.n_e());
    for (int i = 0; i < s.n_e(); ++i) {
        for (int j = i + 1; j < s.n_e(); ++j) {
            const double v =
                metric_distance(x.row(s.ego_units[i]), x.row(s.ego_units[j]), metric, lp_p);
            d.ego_ego(i, j) = v;
            d.ego_ego(j, i) = v;
        }
    }
    d.alter_ego = Eigen::MatrixXd::Zero(s.n_a(), s.n_e());
    for (int a = 0; a < s.n_a(); ++a)
        for (int j = 0; j < s.n_e(); ++j)
            d.alter_ego(a, j) =
                metric_distance(x.row(s.alter_units[a]), x.row(s.ego_units[j]), metric, lp_p);
    return d;
}

EdgeProbabilities build_edge_probabilities(const EdgeProbabilityModel& model,
                                           const EgocentricSample& s) {
    const int n_e = s.n_e();
    const int n_a = s.n_a();
    model.validate(n_e, n_a);

    EdgeProbabilities ep;
    ep.ego_ego = Eigen::MatrixXd::Zero(n_e, n_e);
    ep.alter_ego = Eigen::MatrixXd::Zero(n_a, n_e);

    auto fill_homogeneous = [&](double re, double ra) {
        for (int i = 0; i < n_e; ++i)
            for (int j = 0; j < n_e; ++j)
                if (i != j) ep.ego_ego(i, j) = re;
        for (int a = 0; a < n_a; ++a)
            for (int j = 0; j < n_e; ++j)
                if (j != s.alter_ego[a]) ep.alter_ego(a, j) = ra;
    };

    switch (model.kind) {
        case EdgeProbabilityModel::Kind::HomogeneousProb:
            fill_homogeneous(model.rho_e, model.rho_a);
            break;

        case EdgeProbabilityModel::Kind::HomogeneousCount: {
            const double pairs_e = 0.5 * n_e * (n_e - 1);
            const double pairs_a = static_cast<double>(n_a) * (n_e - 1);
            const double re = pairs_e > 0 ? model.m_e / pairs_e : 0.0;
            const double ra = pairs_a > 0 ? model.m_a / pairs_a : 0.0;
            if (pairs_a == 0 && model.m_a > 0)
                throw std::invalid_argument("alter-ego edge count > 0 with no possible pairs");
            fill_homogeneous(re, ra);
            break;
        }

        case EdgeProbabilityModel::Kind::HeterogeneousProb: {
            const auto d = pairwise_distances(s, model.metric, model.standardize, model.lp_p);
            double dbar_e = 0.0;
            if (n_e > 1) {
                double sum = 0.0;
                for (int i = 0; i < n_e; ++i)
                    for (int j = i + 1; j < n_e; ++j) sum += d.ego_ego(i, j);
                dbar_e = sum / (0.5 * n_e * (n_e - 1));
            }
            double dbar_a = 0.0;
            if (n_a > 0 && n_e > 1) {
                double sum = 0.0;
                for (int a = 0; a < n_a; ++a)
                    for (int j = 0; j < n_e; ++j)
                        if (j != s.alter_ego[a]) sum += d.alter_ego(a, j);
                dbar_a = sum / (static_cast<double>(n_a) * (n_e - 1));
            }
            // Degenerate baselines stay degenerate (the logit link cannot move
            // a probability off 0 or 1), and gamma = 0 bypasses the link so it
            // recovers the homogeneous probabilities exactly.
            for (int i = 0; i < n_e; ++i)
                for (int j = i + 1; j < n_e; ++j) {
                    double r = model.rho_e;
                    if (model.gamma_e != 0.0 && r > 0.0 && r < 1.0)
                        r = inv_logit(logit(model.rho_e) -
                                      model.gamma_e * (d.ego_ego(i, j) - dbar_e));
                    ep.ego_ego(i, j) = r;
                    ep.ego_ego(j, i) = r;
                }
            for (int a = 0; a < n_a; ++a)
                for (int j = 0; j < n_e; ++j) {
                    if (j == s.alter_ego[a]) continue;
                    double r = model.rho_a;
                    if (model.gamma_a != 0.0 && r > 0.0 && r < 1.0)
                        r = inv_logit(logit(model.rho_a) -
                                      model.gamma_a * (d.alter_ego(a, j) - dbar_a));
                    ep.alter_ego(a, j) = r;
                }
            break;
        }

        case EdgeProbabilityModel::Kind::HeterogeneousCount: {
            const auto d = pairwise_distances(s, model.metric, model.standardize, model.lp_p);
            Eigen::MatrixXd w_e = (-model.gamma_e * d.ego_ego.array()).exp();
            Eigen::MatrixXd w_a = (-model.gamma_a * d.alter_ego.array()).exp();
            double total_e = 0.0;
            for (int i = 0; i < n_e; ++i)
                for (int j = i + 1; j < n_e; ++j) total_e += w_e(i, j);
            double total_a = 0.0;
            for (int a = 0; a < n_a; ++a)
                for (int j = 0; j < n_e; ++j)
                    if (j != s.alter_ego[a]) total_a += w_a(a, j);

            double clamped_mass = 0.0;
            int clamped_pairs = 0;
            std::string first_pair;
            auto scaled = [&](double m, double total, double w, const char* kind, int pi, int pj) {
                if (total == 0.0) {
                    if (m > 0)
                        throw std::invalid_argument("positive edge count with no possible pairs");
                    return 0.0;
                }
                double r = m / total * w;
                if (r > 1.0) {
                    clamped_mass += r - 1.0;
                    if (clamped_pairs++ == 0)
                        first_pair = std::string(kind) + " (" + std::to_string(pi) + "," +
                                     std::to_string(pj) + ")";
                    r = 1.0;
                }
                return r;
            };
            for (int i = 0; i < n_e; ++i)
                for (int j = i + 1; j < n_e; ++j) {
                    const double r = scaled(model.m_e, total_e, w_e(i, j), "ego-ego", i, j);
                    ep.ego_ego(i, j) = r;
                    ep.ego_ego(j, i) = r;
                }
            for (int a = 0; a < n_a; ++a)
                for (int j = 0; j < n_e; ++j)
                    if (j != s.alter_ego[a])
                        ep.alter_ego(a, j) =
                            scaled(model.m_a, total_a, w_a(a, j), "alter-ego", a, j);
            if (clamped_pairs > 0) {
                std::ostringstream msg;
                msg << clamped_pairs << " edge probability(ies) exceeded 1 (first: " << first_pair
                    << ") and were clamped; lost expected-edge mass " << clamped_mass;
                ep.warnings.push_back(msg.str());
            }
            break;
        }
    }
    return ep;
}

Eigen::VectorXd exposure_prob_ego(const EdgeProbabilities& ep, double p_z) {
    const int n_e = static_cast<int>(ep.ego_ego.rows());
    Eigen::VectorXd pi(n_e);
    for (int i = 0; i < n_e; ++i) {
        double no_exposure = 1.0;
        for (int j = 0; j < n_e; ++j)
            if (j != i) no_exposure *= 1.0 - p_z * ep.ego_ego(i, j);
        pi[i] = 1.0 - no_exposure;
    }
    return pi;
}

Eigen::VectorXd exposure_prob_alter(const EdgeProbabilities& ep, double p_z,
                                    const std::vector<int>& alter_ego) {
    const int n_a = static_cast<int>(ep.alter_ego.rows());
    const int n_e = static_cast<int>(ep.alter_ego.cols());
    Eigen::VectorXd pi(n_a);
    for (int a = 0; a < n_a; ++a) {
        double no_latent = 1.0;
        for (int j = 0; j < n_e; ++j)
            if (j != alter_ego[a]) no_latent *= 1.0 - p_z * ep.alter_ego(a, j);
        pi[a] = p_z + (1.0 - p_z) * (1.0 - no_latent);
    }
    return pi;
}

std::array<double, 3> poisson_binomial_tail(std::span<const double> probs) {
    bool near_one = false;
    for (const double q : probs) {
        if (!(q >= 0.0 && q <= 1.0))
            throw std::invalid_argument("success probability outside [0,1]");
        if (1.0 - q < 1e-12) near_one = true;
    }
    double p0 = 1.0;
    double p1 = 0.0;
    if (near_one) {
        // Convolution truncated at two successes; exact and division-free.
        for (const double q : probs) {
            p1 = p1 * (1.0 - q) + p0 * q;
            p0 *= 1.0 - q;
        }
    } else {
        double ratio_sum = 0.0;
        for (const double q : probs) {
            p0 *= 1.0 - q;
            ratio_sum += q / (1.0 - q);
        }
        p1 = p0 * ratio_sum;
    }
    const double p2 = std::max(0.0, 1.0 - p0 - p1);
    return {p0, p1, p2};
}

Eigen::MatrixXd exposure_probs_three_level(const EdgeProbabilities& ep, double p_z,
                                           const std::vector<int>& alter_ego) {
    const int n_a = static_cast<int>(ep.alter_ego.rows());
    const int n_e = static_cast<int>(ep.alter_ego.cols());
    Eigen::MatrixXd out(n_a, 3);
    std::vector<double> q;
    q.reserve(std::max(0, n_e - 1));
    for (int a = 0; a < n_a; ++a) {
        q.clear();
        for (int j = 0; j < n_e; ++j)
            if (j != alter_ego[a]) q.push_back(p_z * ep.alter_ego(a, j));
        const auto tail = poisson_binomial_tail(q);
        out(a, 0) = tail[0];
        out(a, 1) = tail[1];
        out(a, 2) = tail[2];
    }
    return out;
}

ExposureProfile make_exposure_profile(const EdgeProbabilities& ep, double p_z,
                                      const std::vector<int>& alter_ego, bool with_three_level) {
    ExposureProfile prof;
    prof.pi_alter = exposure_prob_alter(ep, p_z, alter_ego).cwiseMin(kProbCap);
    prof.pi_ego = exposure_prob_ego(ep, p_z).cwiseMin(kProbCap);
    if (with_three_level) prof.three_level = exposure_probs_three_level(ep, p_z, alter_ego);
    return prof;
}

ExposureProfile make_exposure_profile(const EdgeProbabilities& ep, const EgocentricSample& s,
                                      bool with_three_level) {
    return make_exposure_profile(ep, s.p_z, s.alter_ego, with_three_level);
}

}  // namespace enrt

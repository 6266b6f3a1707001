#include "enrt/outcome.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "enrt/rng.hpp"

namespace enrt {

namespace {

constexpr double kGradTol = 1e-8;
constexpr int kMaxIrls = 50;
constexpr double kSeparationNorm = 1e3;

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::MatrixXd assemble_design(const Eigen::MatrixXd& features, const Eigen::VectorXd& indicator) {
    Eigen::MatrixXd x(features.rows(), features.cols() + 2);
    x.col(0).setOnes();
    x.col(1) = indicator;
    if (features.cols() > 0) x.rightCols(features.cols()) = features;
    return x;
}

}  // namespace

double FittedModel::predict(double indicator, const Eigen::RowVectorXd& features) const {
    double eta = beta[0] + beta[1] * indicator;
    if (features.size() > 0) eta += features.dot(beta.tail(features.size()));
    return family == OutcomeModelSpec::Family::Logistic ? sigmoid(eta) : eta;
}

FittedModel fit_outcome_model(const OutcomeModelSpec& spec, const Eigen::MatrixXd& features,
                              const Eigen::VectorXd& indicator, const Eigen::VectorXd& outcome) {
    const Eigen::Index n = features.rows();
    if (indicator.size() != n || outcome.size() != n)
        throw std::invalid_argument("design rows are inconsistent");
    const Eigen::MatrixXd x = assemble_design(features, indicator);
    if (n < x.cols())
        throw std::invalid_argument("need at least " + std::to_string(x.cols()) +
                                    " rows to fit the outcome model, got " + std::to_string(n));

    FittedModel model;
    model.family = spec.family;

    auto fit_linear = [&](const Eigen::VectorXd& y) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() == x.cols()) {
            model.beta = qr.solve(y);
        } else {
            const Eigen::MatrixXd xtx = x.transpose() * x;
            const double lambda = 1e-8 * xtx.trace() / static_cast<double>(x.cols());
            Eigen::MatrixXd penalized = xtx;
            penalized.diagonal().array() += std::max(lambda, 1e-300);
            model.beta = penalized.ldlt().solve(x.transpose() * y);
            model.warnings.push_back("rank-deficient design, ridge regularization applied");
        }
    };

    if (spec.family == OutcomeModelSpec::Family::Linear) {
        fit_linear(outcome);
        return model;
    }

    for (Eigen::Index i = 0; i < n; ++i)
        if (outcome[i] != 0.0 && outcome[i] != 1.0)
            throw std::invalid_argument("logistic family requires 0/1 outcomes");

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
    bool diverged = false;
    bool ridge_used = false;
    bool converged = false;
    for (int it = 0; it < kMaxIrls; ++it) {
        const Eigen::VectorXd eta = x * beta;
        Eigen::VectorXd mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = sigmoid(eta[i]);
            w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
        }
        const Eigen::VectorXd grad = x.transpose() * (outcome - mu);
        if (grad.norm() < kGradTol) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
        Eigen::VectorXd step;
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = ldlt.solve(grad);
        } else {
            Eigen::MatrixXd penalized = hess;
            penalized.diagonal().array() += 1e-8 * hess.trace() / static_cast<double>(x.cols());
            step = penalized.ldlt().solve(grad);
            ridge_used = true;
        }
        beta += step;
        if (!beta.allFinite() || beta.norm() > kSeparationNorm) {
            diverged = true;
            break;
        }
    }
    if (diverged) {
        model.family = OutcomeModelSpec::Family::Linear;
        fit_linear(outcome);
        model.warnings.push_back("logistic fit diverged (likely separation); fell back to linear");
        return model;
    }
    if (!converged)
        model.warnings.push_back("IRLS stopped at the iteration cap before reaching tolerance");
    if (ridge_used) model.warnings.push_back("singular IRLS step, ridge regularization applied");
    model.beta = beta;
    return model;
}

Eigen::MatrixXd model_features(const EgocentricSample& s, const OutcomeModelSpec& spec, Role role) {
    std::vector<int> cols;
    if (spec.covariates.empty()) {
        cols.resize(s.covariates.cols());
        for (std::size_t c = 0; c < cols.size(); ++c) cols[c] = static_cast<int>(c);
    } else {
        for (const auto& name : spec.covariates) {
            const auto it = std::find(s.covariate_names.begin(), s.covariate_names.end(), name);
            if (it == s.covariate_names.end())
                throw std::invalid_argument("unknown covariate '" + name + "'");
            cols.push_back(static_cast<int>(it - s.covariate_names.begin()));
        }
    }
    const std::vector<int>& rows = role == Role::Ego ? s.ego_units : s.alter_units;
    const int q = static_cast<int>(cols.size());
    Eigen::MatrixXd out(rows.size(), spec.neighbor_averages ? 2 * q : q);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < q; ++c) out(static_cast<Eigen::Index>(r), c) = s.covariates(rows[r], cols[c]);
    if (spec.neighbor_averages) {
        // Observed-network neighbors: an alter's only neighbor is its ego; an
        // ego's neighbors are its alters (zero-filled when it recruited none).
        for (std::size_t r = 0; r < rows.size(); ++r) {
            Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(q);
            if (role == Role::Alter) {
                const int ego_unit = s.ego_units[s.alter_ego[r]];
                for (int c = 0; c < q; ++c) avg[c] = s.covariates(ego_unit, cols[c]);
            } else if (!s.ego_alters[r].empty()) {
                for (const int a : s.ego_alters[r])
                    for (int c = 0; c < q; ++c) avg[c] += s.covariates(s.alter_units[a], cols[c]);
                avg /= static_cast<double>(s.ego_alters[r].size());
            }
            out.block(static_cast<Eigen::Index>(r), q, 1, q) = avg;
        }
    }
    return out;
}

CrossFitPlan make_crossfit_plan(const EgocentricSample& s, std::uint64_t seed) {
    if (s.n_e() < 2)
        throw std::invalid_argument("cross-fitting requires at least two ego-networks");
    constexpr int kMaxRetries = 1000;
    rng::Stream stream(seed, /*stream=*/0);
    CrossFitPlan plan;
    plan.seed = seed;
    plan.fold_of_ego.resize(s.n_e());
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        std::array<int, 2> egos{0, 0};
        std::array<int, 2> alters{0, 0};
        for (int i = 0; i < s.n_e(); ++i) {
            const int fold = stream.bernoulli(0.5) ? 1 : 0;
            plan.fold_of_ego[i] = fold;
            egos[fold] += 1;
            alters[fold] += static_cast<int>(s.ego_alters[i].size());
        }
        if (egos[0] >= 1 && egos[1] >= 1 && alters[0] >= 1 && alters[1] >= 1) return plan;
    }
    throw std::runtime_error(
        "could not split ego-networks into two folds each holding an ego and an alter");
}

CrossFitPredictions crossfit_predictions(const EgocentricSample& s, const DesignData& d,
                                         const OutcomeModelSpec& spec, const CrossFitPlan& plan) {
    if (static_cast<int>(plan.fold_of_ego.size()) != s.n_e())
        throw std::invalid_argument("cross-fit plan does not match sample");

    CrossFitPredictions preds;
    preds.fold_of_ego = plan.fold_of_ego;
    preds.mu_ego = Eigen::MatrixXd::Zero(s.n_e(), 2);
    preds.mu_alter = Eigen::MatrixXd::Zero(s.n_a(), 2);

    const Eigen::MatrixXd ego_features = model_features(s, spec, Role::Ego);
    const Eigen::MatrixXd alter_features = model_features(s, spec, Role::Alter);

    for (int q = 0; q < 2; ++q) {
        std::vector<int> train_egos, eval_egos, train_alters, eval_alters;
        for (int i = 0; i < s.n_e(); ++i)
            (plan.fold_of_ego[i] == q ? eval_egos : train_egos).push_back(i);
        for (int a = 0; a < s.n_a(); ++a)
            (plan.fold_of_ego[s.alter_ego[a]] == q ? eval_alters : train_alters).push_back(a);

        auto rows_of = [](const Eigen::MatrixXd& m, const std::vector<int>& idx) {
            Eigen::MatrixXd out(idx.size(), m.cols());
            for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(idx[r]);
            return out;
        };
        auto entries_of = [](const Eigen::VectorXd& v, const std::vector<int>& idx) {
            Eigen::VectorXd out(idx.size());
            for (std::size_t r = 0; r < idx.size(); ++r) out[static_cast<Eigen::Index>(r)] = v[idx[r]];
            return out;
        };

        // Ego model trained on the complementary fold; falls back to a zero
        // predictor when the training fold lacks a treated or control ego (or
        // the fit itself is infeasible).
        const Eigen::VectorXd z_train = entries_of(d.z_ego, train_egos);
        bool ego_fallback = z_train.size() == 0 || z_train.sum() == 0.0 ||
                            z_train.sum() == static_cast<double>(z_train.size());
        FittedModel ego_model;
        if (!ego_fallback) {
            try {
                ego_model = fit_outcome_model(spec, rows_of(ego_features, train_egos), z_train,
                                              entries_of(d.y_ego, train_egos));
                for (auto& w : ego_model.warnings) preds.warnings.push_back("ego model: " + w);
            } catch (const std::exception& e) {
                ego_fallback = true;
                preds.warnings.push_back(std::string("ego model unavailable (") + e.what() +
                                         "), using raw HT terms for fold " + std::to_string(q));
            }
        } else {
            preds.warnings.push_back("empty treated or control ego stratum in training fold " +
                                     std::to_string(1 - q) + ", using raw HT terms for fold " +
                                     std::to_string(q));
        }
        for (const int i : eval_egos) {
            if (ego_fallback) continue;  // zero predictions already in place
            preds.mu_ego(i, 0) = ego_model.predict(0.0, ego_features.row(i));
            preds.mu_ego(i, 1) = ego_model.predict(1.0, ego_features.row(i));
        }

        const Eigen::VectorXd f_train = entries_of(d.f_alter, train_alters);
        bool alter_fallback = f_train.size() == 0 || f_train.sum() == 0.0 ||
                              f_train.sum() == static_cast<double>(f_train.size());
        FittedModel alter_model;
        if (!alter_fallback) {
            try {
                alter_model = fit_outcome_model(spec, rows_of(alter_features, train_alters), f_train,
                                                entries_of(d.y_alter, train_alters));
                for (auto& w : alter_model.warnings) preds.warnings.push_back("alter model: " + w);
            } catch (const std::exception& e) {
                alter_fallback = true;
                preds.warnings.push_back(std::string("alter model unavailable (") + e.what() +
                                         "), using raw HT terms for fold " + std::to_string(q));
            }
        } else {
            preds.warnings.push_back("empty exposed or unexposed alter stratum in training fold " +
                                     std::to_string(1 - q) + ", using raw HT terms for fold " +
                                     std::to_string(q));
        }
        for (const int a : eval_alters) {
            if (alter_fallback) continue;
            preds.mu_alter(a, 0) = alter_model.predict(0.0, alter_features.row(a));
            preds.mu_alter(a, 1) = alter_model.predict(1.0, alter_features.row(a));
        }
    }
    return preds;
}

AugmentedEstimates augmented_estimates(const EgocentricSample& s, const DesignData& d,
                                       const ExposureProfile& prof, const KappaSpec& kappa,
                                       const CrossFitPredictions& preds,
                                       const EdgeProbabilities* edge_model, double level,
                                       const DeltaSpec* three_level_delta) {
    if (static_cast<int>(preds.fold_of_ego.size()) != s.n_e())
        throw std::invalid_argument("predictions do not match sample");
    if (three_level_delta && !prof.three_level)
        throw std::invalid_argument("three-level weighting requires a three-level profile");
    const double p_z = s.p_z;

    AugmentedEstimates out;
    out.ie.estimand = three_level_delta ? Estimand::IE_3L : Estimand::IE;
    out.de.estimand = Estimand::DE;
    for (const auto& w : preds.warnings) {
        out.ie.warnings.push_back(w);
        out.de.warnings.push_back(w);
    }

    // Alter weights and residual terms.
    Eigen::VectorXd w_alter(s.n_a()), resid_alter(s.n_a()), shift_alter(s.n_a());
    for (int a = 0; a < s.n_a(); ++a) {
        if (three_level_delta) {
            const double denom = (*prof.three_level)(a, 0) +
                                 (*prof.three_level)(a, 1) * three_level_delta->delta;
            if (denom <= 0.0)
                throw std::invalid_argument("nonpositive three-level weight denominator");
            w_alter[a] = 1.0 / denom;
        } else {
            if (prof.pi_alter[a] >= 1.0)
                throw std::invalid_argument("alter exposure probability >= 1");
            w_alter[a] = (1.0 - p_z) / (1.0 - prof.pi_alter[a]);
        }
        const double f = d.f_alter[a];
        resid_alter[a] = f * (d.y_alter[a] - preds.mu_alter(a, 1)) / p_z -
                         (1.0 - f) * (d.y_alter[a] - preds.mu_alter(a, 0)) / (1.0 - p_z);
        shift_alter[a] = preds.mu_alter(a, 1) - preds.mu_alter(a, 0);
    }
    Eigen::VectorXd w_ego(s.n_e()), resid_ego(s.n_e()), shift_ego(s.n_e());
    for (int i = 0; i < s.n_e(); ++i) {
        const double denom = 1.0 + prof.pi_ego[i] * (kappa.kappa - 1.0);
        if (denom == 0.0)
            throw std::invalid_argument("kappa sits exactly on the sign-flip boundary");
        w_ego[i] = 1.0 / denom;
        const double z = d.z_ego[i];
        resid_ego[i] = z * (d.y_ego[i] - preds.mu_ego(i, 1)) / p_z -
                       (1.0 - z) * (d.y_ego[i] - preds.mu_ego(i, 0)) / (1.0 - p_z);
        shift_ego[i] = preds.mu_ego(i, 1) - preds.mu_ego(i, 0);
    }

    double ie_point = 0.0, ie_var = 0.0, de_point = 0.0, de_var = 0.0;
    const double n_a_total = static_cast<double>(s.n_a());
    const double n_e_total = static_cast<double>(s.n_e());

    for (int q = 0; q < 2; ++q) {
        std::vector<int> egos_q, alters_q;
        for (int i = 0; i < s.n_e(); ++i)
            if (preds.fold_of_ego[i] == q) egos_q.push_back(i);
        for (int a = 0; a < s.n_a(); ++a)
            if (preds.fold_of_ego[s.alter_ego[a]] == q) alters_q.push_back(a);
        const double n_a_q = static_cast<double>(alters_q.size());
        const double n_e_q = static_cast<double>(egos_q.size());
        if (alters_q.empty() || egos_q.empty())
            throw std::invalid_argument("cross-fit fold without egos or alters");

        double ie_q = 0.0;
        for (const int a : alters_q) ie_q += w_alter[a] * (resid_alter[a] + shift_alter[a]);
        ie_q /= n_a_q;
        ie_point += n_a_q / n_a_total * ie_q;

        // Cluster totals of weighted residuals within the fold.
        Eigen::VectorXd totals(egos_q.size());
        double t_sum = 0.0;
        {
            std::vector<double> by_ego(s.n_e(), 0.0);
            for (const int a : alters_q) by_ego[s.alter_ego[a]] += w_alter[a] * resid_alter[a];
            for (std::size_t r = 0; r < egos_q.size(); ++r) {
                totals[static_cast<Eigen::Index>(r)] = by_ego[egos_q[r]];
                t_sum += by_ego[egos_q[r]];
            }
        }
        const double t_bar = t_sum / n_e_q;
        ie_var += (n_a_q * n_a_q) / (n_a_total * n_a_total) *
                  ((totals.array() - t_bar).square().sum() / (n_a_q * n_a_q));

        double de_q = 0.0;
        Eigen::VectorXd tilde(egos_q.size());
        for (std::size_t r = 0; r < egos_q.size(); ++r) {
            const int i = egos_q[r];
            de_q += w_ego[i] * (resid_ego[i] + shift_ego[i]);
            tilde[static_cast<Eigen::Index>(r)] = w_ego[i] * resid_ego[i];
        }
        de_q /= n_e_q;
        de_point += n_e_q / n_e_total * de_q;

        const double tilde_bar = tilde.mean();
        const Eigen::VectorXd resid_q = tilde.array() - tilde_bar;
        double v_q = resid_q.squaredNorm() / (n_e_q * n_e_q);
        if (edge_model) {
            Eigen::MatrixXd rho_rows(egos_q.size(), s.n_e());
            for (std::size_t r = 0; r < egos_q.size(); ++r)
                rho_rows.row(static_cast<Eigen::Index>(r)) = edge_model->ego_ego.row(egos_q[r]);
            v_q += shared_neighbor_covariance(rho_rows, resid_q.cwiseAbs(), p_z);
        }
        de_var += (n_e_q * n_e_q) / (n_e_total * n_e_total) * v_q;
    }

    out.ie.point = ie_point;
    out.ie.variance = ie_var;
    out.ie.level = level;
    const auto [ie_lo, ie_hi] = wald_ci(ie_point, ie_var, level);
    out.ie.ci_low = ie_lo;
    out.ie.ci_high = ie_hi;

    out.de.point = de_point;
    out.de.variance = de_var;
    out.de.level = level;
    const auto [de_lo, de_hi] = wald_ci(de_point, de_var, level);
    out.de.ci_low = de_lo;
    out.de.ci_high = de_hi;
    return out;
}

AugmentedEstimates augmented_estimates(const EgocentricSample& s, const ExposureProfile& prof,
                                       const KappaSpec& kappa, const OutcomeModelSpec& spec,
                                       const CrossFitPlan& plan, const EdgeProbabilities* edge_model,
                                       double level, const DeltaSpec* three_level_delta) {
    const DesignData d = design_from_sample(s);
    const auto preds = crossfit_predictions(s, d, spec, plan);
    return augmented_estimates(s, d, prof, kappa, preds, edge_model, level, three_level_delta);
}

}  // namespace enrt

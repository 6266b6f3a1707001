#include <doctest.h>

#include <cmath>

#include "enrt/outcome.hpp"
#include "enrt/rng.hpp"
#include "enrt/sim.hpp"
#include "helpers.hpp"

using namespace enrt;

TEST_CASE("linear fit reproduces normal-equation coefficients") {
    // Five points, outcome = 1 + 2*indicator + 0.5*x, no noise.
    Eigen::MatrixXd features(5, 1);
    features << 0, 1, 2, 3, 4;
    Eigen::VectorXd indicator(5);
    indicator << 0, 1, 0, 1, 0;
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) y[i] = 1.0 + 2.0 * indicator[i] + 0.5 * features(i, 0);

    const auto model = fit_outcome_model(OutcomeModelSpec{}, features, indicator, y);
    CHECK(model.beta[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(model.beta[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(model.beta[2] == doctest::Approx(0.5).epsilon(1e-10));
    Eigen::RowVectorXd x(1);
    x << 10.0;
    CHECK(model.predict(1.0, x) == doctest::Approx(8.0).epsilon(1e-10));
    CHECK(model.predict(0.0, x) == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("logistic fit on balanced symmetric data has zero intercept") {
    Eigen::MatrixXd features(8, 1);
    Eigen::VectorXd indicator(8), y(8);
    // Perfectly balanced: for each covariate value both outcomes appear.
    int r = 0;
    for (const double x : {-1.0, 1.0}) {
        for (const double f : {0.0, 1.0}) {
            for (const double yy : {0.0, 1.0}) {
                if (r >= 8) break;
                features(r, 0) = x;
                indicator[r] = f;
                y[r] = yy;
                ++r;
            }
        }
    }
    OutcomeModelSpec spec;
    spec.family = OutcomeModelSpec::Family::Logistic;
    const auto model = fit_outcome_model(spec, features, indicator, y);
    CHECK(model.family == OutcomeModelSpec::Family::Logistic);
    CHECK(std::abs(model.beta[0]) < 1e-6);
    CHECK(std::abs(model.beta[1]) < 1e-6);
    CHECK(std::abs(model.beta[2]) < 1e-6);
    Eigen::RowVectorXd x(1);
    x << 0.0;
    CHECK(model.predict(1.0, x) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("separated logistic data falls back to linear with a warning") {
    // Separation on a tiny covariate scale forces the coefficient norm past
    // the divergence threshold within the iteration budget. The indicator is
    // deliberately uninformative so only the small-scale column separates.
    Eigen::MatrixXd features(6, 1);
    features << -0.03, -0.02, -0.01, 0.01, 0.02, 0.03;
    Eigen::VectorXd indicator(6);
    indicator << 0, 1, 0, 1, 0, 1;
    Eigen::VectorXd y(6);
    y << 0, 0, 0, 1, 1, 1;  // perfectly separated in x
    OutcomeModelSpec spec;
    spec.family = OutcomeModelSpec::Family::Logistic;
    const auto model = fit_outcome_model(spec, features, indicator, y);
    CHECK(model.family == OutcomeModelSpec::Family::Linear);
    CHECK(!model.warnings.empty());
    CHECK(model.beta.allFinite());
}

TEST_CASE("rank-deficient design takes the ridge path") {
    Eigen::MatrixXd features(6, 2);
    for (int i = 0; i < 6; ++i) {
        features(i, 0) = i;
        features(i, 1) = 2.0 * i;  // exact collinearity
    }
    Eigen::VectorXd indicator = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd y = features.col(0);
    const auto model = fit_outcome_model(OutcomeModelSpec{}, features, indicator, y);
    CHECK(!model.warnings.empty());
    CHECK(model.beta.allFinite());
}

TEST_CASE("logistic family validates outcomes") {
    Eigen::MatrixXd features(4, 1);
    features << 1, 2, 3, 4;
    Eigen::VectorXd indicator(4);
    indicator << 0, 1, 0, 1;
    Eigen::VectorXd y(4);
    y << 0, 1, 0.5, 1;
    OutcomeModelSpec spec;
    spec.family = OutcomeModelSpec::Family::Logistic;
    CHECK_THROWS_AS(fit_outcome_model(spec, features, indicator, y), std::invalid_argument);
}

TEST_CASE("too few rows are rejected") {
    Eigen::MatrixXd features(2, 2);
    features.setRandom();
    Eigen::VectorXd indicator(2), y(2);
    indicator << 0, 1;
    y << 1, 2;
    CHECK_THROWS_AS(fit_outcome_model(OutcomeModelSpec{}, features, indicator, y),
                    std::invalid_argument);
}

TEST_CASE("cross-fit plans") {
    SUBCASE("deterministic in the seed") {
        const auto s = testutil::make_star_sample({1, 2, 1, 1, 2}, 0.5);
        const auto a = make_crossfit_plan(s, 77);
        const auto b = make_crossfit_plan(s, 77);
        CHECK(a.fold_of_ego == b.fold_of_ego);
    }
    SUBCASE("two ego-networks split one per fold") {
        const auto s = testutil::make_star_sample({1, 1}, 0.5);
        const auto plan = make_crossfit_plan(s, 3);
        CHECK(plan.fold_of_ego[0] != plan.fold_of_ego[1]);
    }
    SUBCASE("impossible constraint is an explicit error") {
        const auto s = testutil::make_star_sample({3, 0}, 0.5);  // all alters under one ego
        CHECK_THROWS(make_crossfit_plan(s, 5));
        const auto single = testutil::make_star_sample({3}, 0.5);
        CHECK_THROWS_AS(make_crossfit_plan(single, 5), std::invalid_argument);
    }
    SUBCASE("fold sizes average n_e / 2") {
        const auto s = testutil::make_star_sample(std::vector<int>(20, 1), 0.5);
        double total = 0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            const auto plan = make_crossfit_plan(s, 1000 + t);
            for (const int f : plan.fold_of_ego) total += f;
        }
        const double mean = total / trials;          // expected 10
        const double se = std::sqrt(20 * 0.25 / trials);  // binomial se of the fold count
        CHECK(std::abs(mean - 10.0) < 3.0 * se + 0.05);
    }
}

namespace {

enrt::sim::PopulationNetwork small_net(enrt::rng::Stream& stream) {
    enrt::sim::ScenarioConfig cfg;
    cfg.n_e = 20;
    cfg.alters_per_ego = 2;
    cfg.m_a = 6;
    cfg.m_e = 5;
    cfg.reps = 1;
    return enrt::sim::generate_population(cfg, stream.next_u64());
}

}  // namespace

TEST_CASE("zero outcome models reduce augmentation to the plain adjusted estimators") {
    enrt::rng::Stream stream(71, 0);
    auto net = small_net(stream);
    const auto& s = net.sample;
    const auto pot = enrt::sim::generate_potential_outcomes(net, enrt::sim::OutcomeCoefficients{},
                                                            9);
    Eigen::VectorXd z(s.n_e());
    for (int i = 0; i < s.n_e(); ++i) z[i] = stream.bernoulli(0.5) ? 1 : 0;
    const auto d = enrt::sim::realize_design(net, pot, z);
    const auto ep = build_edge_probabilities(net.generating_model, s);
    const auto prof = make_exposure_profile(ep, s);

    CrossFitPredictions zero_preds;
    zero_preds.fold_of_ego = make_crossfit_plan(s, 5).fold_of_ego;
    zero_preds.mu_ego = Eigen::MatrixXd::Zero(s.n_e(), 2);
    zero_preds.mu_alter = Eigen::MatrixXd::Zero(s.n_a(), 2);

    const KappaSpec kappa{1.5};
    const auto aug = augmented_estimates(s, d, prof, kappa, zero_preds, &ep);
    const auto plain_ie = adjusted_ie(s, d, prof);
    const auto plain_de = adjusted_de(s, d, prof, kappa, &ep);
    CHECK(aug.ie.point == doctest::Approx(plain_ie.point).epsilon(1e-12));
    CHECK(aug.de.point == doctest::Approx(plain_de.point).epsilon(1e-12));
}

TEST_CASE("perfect outcome models yield zero variance on noiseless linear data") {
    enrt::rng::Stream stream(73, 0);
    enrt::sim::ScenarioConfig cfg;
    cfg.n_e = 16;
    cfg.alters_per_ego = 2;
    cfg.m_a = 0;
    cfg.m_e = 0;
    auto net = enrt::sim::generate_population(cfg, 21);
    enrt::sim::OutcomeCoefficients coef;
    coef.noise_sd = 0.0;  // exactly linear in (z/f, x)
    // Zero covariate effects keep the fit exact even when a binary covariate
    // is constant inside a training fold.
    coef.beta_ego.setZero();
    coef.beta_alter.setZero();
    const auto pot = enrt::sim::generate_potential_outcomes(net, coef, 22);
    Eigen::VectorXd z(net.sample.n_e());
    for (int i = 0; i < net.sample.n_e(); ++i) z[i] = stream.bernoulli(0.5) ? 1 : 0;
    const auto d = enrt::sim::realize_design(net, pot, z);

    const auto plan = make_crossfit_plan(net.sample, 30);
    const auto preds = crossfit_predictions(net.sample, d, OutcomeModelSpec{}, plan);
    ExposureProfile prof;
    prof.pi_alter = Eigen::VectorXd::Constant(net.sample.n_a(), 0.5);
    prof.pi_ego = Eigen::VectorXd::Zero(net.sample.n_e());
    const auto aug = augmented_estimates(net.sample, d, prof, KappaSpec{1.0}, preds);
    // The ridge fallback perturbs an exactly-collinear fit by ~1e-8, so the
    // residual variance is bounded by its square rather than exact zero.
    CHECK(*aug.ie.variance < 1e-12);
    CHECK(*aug.de.variance < 1e-12);
    CHECK(aug.ie.point == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(aug.de.point == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("fold-exchange symmetry") {
    enrt::rng::Stream stream(79, 0);
    auto net = small_net(stream);
    const auto& s = net.sample;
    const auto pot = enrt::sim::generate_potential_outcomes(net, enrt::sim::OutcomeCoefficients{},
                                                            11);
    Eigen::VectorXd z(s.n_e());
    for (int i = 0; i < s.n_e(); ++i) z[i] = stream.bernoulli(0.5) ? 1 : 0;
    const auto d = enrt::sim::realize_design(net, pot, z);
    const auto ep = build_edge_probabilities(net.generating_model, s);
    const auto prof = make_exposure_profile(ep, s);

    const auto plan = make_crossfit_plan(s, 13);
    CrossFitPlan swapped = plan;
    for (auto& f : swapped.fold_of_ego) f = 1 - f;

    const auto a = augmented_estimates(s, prof, KappaSpec{1.5}, OutcomeModelSpec{}, plan, &ep);
    const auto b = augmented_estimates(s, prof, KappaSpec{1.5}, OutcomeModelSpec{}, swapped, &ep);
    CHECK(a.ie.point == doctest::Approx(b.ie.point).epsilon(1e-13));
    CHECK(a.de.point == doctest::Approx(b.de.point).epsilon(1e-13));
    CHECK(*a.ie.variance == doctest::Approx(*b.ie.variance).epsilon(1e-13));
    CHECK(*a.de.variance == doctest::Approx(*b.de.variance).epsilon(1e-13));
}

TEST_CASE("neighbor-average features follow the observed star") {
    Eigen::MatrixXd cov(5, 1);
    cov << 10, 1, 3, 20, 5;  // e1, a11, a12, e2, a21
    const auto s = testutil::make_star_sample({2, 1}, 0.5, cov, {"x_v"});
    OutcomeModelSpec spec;
    spec.neighbor_averages = true;
    const auto ego_feats = model_features(s, spec, Role::Ego);
    const auto alter_feats = model_features(s, spec, Role::Alter);
    CHECK(ego_feats(0, 0) == 10);
    CHECK(ego_feats(0, 1) == doctest::Approx(2.0));  // mean of alters 1 and 3
    CHECK(ego_feats(1, 1) == doctest::Approx(5.0));
    CHECK(alter_feats(0, 1) == 10);  // an alter's only neighbor is its ego
    CHECK(alter_feats(2, 1) == 20);
}

TEST_CASE("cross-fitting falls back to raw HT terms when a stratum is empty") {
    const auto s = testutil::make_star_sample({1, 1, 1, 1}, 0.5);
    DesignData d;
    d.z_ego = Eigen::Vector4d(1, 1, 0, 1);
    d.y_ego = Eigen::Vector4d(1, 2, 3, 4);
    d.y_alter = Eigen::Vector4d(1, 0, 2, 1);
    d.f_alter = d.z_ego;
    CrossFitPlan plan;
    plan.fold_of_ego = {0, 0, 1, 1};  // training fold for q=1 is all-treated
    const auto preds = crossfit_predictions(s, d, OutcomeModelSpec{}, plan);
    CHECK(!preds.warnings.empty());
    // Predictions for fold 1 egos stay zero.
    CHECK(preds.mu_ego(2, 0) == 0.0);
    CHECK(preds.mu_ego(2, 1) == 0.0);
}

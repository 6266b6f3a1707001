#include "enrt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "enrt/parallel.hpp"

namespace enrt {

namespace {

void append_params(EffectEstimate& est, const GridPoint& point) {
    const auto& m = point.model;
    switch (m.kind) {
        case EdgeProbabilityModel::Kind::HomogeneousProb:
            est.params = {{"rho_e", m.rho_e}, {"rho_a", m.rho_a}};
            break;
        case EdgeProbabilityModel::Kind::HomogeneousCount:
            est.params = {{"m_e", m.m_e}, {"m_a", m.m_a}};
            break;
        case EdgeProbabilityModel::Kind::HeterogeneousProb:
            est.params = {{"rho_e", m.rho_e}, {"rho_a", m.rho_a},
                          {"gamma_e", m.gamma_e}, {"gamma_a", m.gamma_a}};
            break;
        case EdgeProbabilityModel::Kind::HeterogeneousCount:
            est.params = {{"m_e", m.m_e}, {"m_a", m.m_a},
                          {"gamma_e", m.gamma_e}, {"gamma_a", m.gamma_a}};
            break;
    }
    est.params.emplace_back("kappa", point.kappa);
    est.params.emplace_back("delta", point.delta);
}

const std::set<std::string>& allowed_prior_keys() {
    static const std::set<std::string> keys{"rho_e", "rho_a", "m_e", "m_a", "kappa", "delta"};
    return keys;
}

void validate_priors(const PriorSet& priors, const GridPoint& base, const AnalysisOptions& opts) {
    for (const auto& [key, prior] : priors) {
        if (!allowed_prior_keys().count(key))
            throw std::invalid_argument("unknown sensitivity parameter '" + key + "' in priors");
        prior.validate();
        const bool count_model = base.model.count_based();
        if ((key == "m_e" || key == "m_a") && !count_model)
            throw std::invalid_argument("prior on '" + key +
                                        "' requires a count-based edge model");
        if ((key == "rho_e" || key == "rho_a") && count_model)
            throw std::invalid_argument("prior on '" + key +
                                        "' requires a probability-based edge model");
        if (key == "delta" && !opts.three_level)
            throw std::invalid_argument("prior on 'delta' requires the three-level mapping");
    }
}

}  // namespace

void Prior::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
    };
    switch (dist) {
        case Dist::DiscreteUniform:
        case Dist::ContinuousUniform:
            if (!(a <= b)) throw std::invalid_argument("uniform prior needs lo <= hi");
            break;
        case Dist::Poisson:
            if (a < 0) throw std::invalid_argument("poisson mean must be nonnegative");
            break;
        case Dist::NegBinomial:
            if (a < 0) throw std::invalid_argument("neg_binomial mean must be nonnegative");
            positive(b, "neg_binomial size");
            break;
        case Dist::LogNormal:
            if (b < 0) throw std::invalid_argument("log_normal sdlog must be nonnegative");
            break;
        case Dist::PointMass:
            break;
        case Dist::Beta:
            positive(a, "beta shape a");
            positive(b, "beta shape b");
            break;
    }
}

double sample_prior(const Prior& prior, rng::Stream& stream) {
    switch (prior.dist) {
        case Prior::Dist::DiscreteUniform:
            return static_cast<double>(stream.discrete_uniform(
                static_cast<long long>(prior.a), static_cast<long long>(prior.b)));
        case Prior::Dist::Poisson:
            return static_cast<double>(stream.poisson(prior.a));
        case Prior::Dist::NegBinomial:
            return static_cast<double>(stream.neg_binomial(prior.a, prior.b));
        case Prior::Dist::ContinuousUniform:
            return stream.uniform(prior.a, prior.b);
        case Prior::Dist::LogNormal:
            return stream.lognormal(prior.a, prior.b);
        case Prior::Dist::PointMass:
            return prior.a;
        case Prior::Dist::Beta:
            return stream.beta(prior.a, prior.b);
    }
    throw std::logic_error("unknown prior distribution");
}

std::vector<EffectEstimate> evaluate_point(const EgocentricSample& s, const DesignData& d,
                                           const GridPoint& point, const AnalysisOptions& opts,
                                           const CrossFitPredictions* preds) {
    const EdgeProbabilities ep = build_edge_probabilities(point.model, s);
    const ExposureProfile prof = make_exposure_profile(ep, s, opts.three_level);
    const KappaSpec kappa{point.kappa};
    const DeltaSpec delta{point.delta};

    std::vector<EffectEstimate> out;
    if (opts.augmented) {
        if (!preds) throw std::logic_error("augmented evaluation requires predictions");
        auto aug = augmented_estimates(s, d, prof, kappa, *preds, &ep, opts.level,
                                       opts.three_level ? &delta : nullptr);
        for (const auto& w : ep.warnings) {
            aug.ie.warnings.push_back(w);
            aug.de.warnings.push_back(w);
        }
        if (opts.estimate_ie) out.push_back(std::move(aug.ie));
        if (opts.estimate_de) out.push_back(std::move(aug.de));
    } else {
        if (opts.estimate_ie) {
            EffectEstimate ie = opts.three_level
                                    ? adjusted_ie_three_level(s, d, prof, delta, opts.level)
                                    : adjusted_ie(s, d, prof, opts.level);
            for (const auto& w : ep.warnings) ie.warnings.push_back(w);
            out.push_back(std::move(ie));
        }
        if (opts.estimate_de) {
            EffectEstimate de = adjusted_de(s, d, prof, kappa, &ep, opts.level);
            for (const auto& w : ep.warnings) de.warnings.push_back(w);
            out.push_back(std::move(de));
        }
    }
    if (opts.estimate_ie_rr) out.push_back(adjusted_ie_rr(s, d, prof, opts.level));
    for (auto& est : out) append_params(est, point);
    return out;
}

std::vector<GsaRow> run_gsa(const EgocentricSample& s, const SensitivityGrid& grid,
                            const AnalysisOptions& opts_in) {
    if (grid.points.empty()) throw std::invalid_argument("sensitivity grid is empty");
    AnalysisOptions opts = opts_in;
    opts.augmented = grid.augmented;
    opts.three_level = grid.three_level;

    const DesignData d = design_from_sample(s);
    CrossFitPredictions preds;
    if (opts.augmented) {
        const auto plan = make_crossfit_plan(s, opts.crossfit_seed);
        preds = crossfit_predictions(s, d, opts.outcome_model, plan);
    }

    std::vector<GsaRow> rows(grid.points.size());
    parallel_for(grid.points.size(), opts.threads, [&](std::size_t i) {
        GsaRow& row = rows[i];
        row.point = static_cast<int>(i);
        row.params = grid.points[i];
        try {
            row.estimates =
                evaluate_point(s, d, grid.points[i], opts, opts.augmented ? &preds : nullptr);
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
    });
    return rows;
}

double empirical_percentile(std::vector<double> values, double pct) {
    if (values.empty()) throw std::invalid_argument("percentile of empty sample");
    if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile outside [0,100]");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    const double k = pct / 100.0 * n;
    if (k <= 0.0) return values.front();
    if (k >= n) return values.back();
    const double rounded = std::floor(k);
    if (k == rounded) {
        const auto idx = static_cast<std::size_t>(rounded);
        return 0.5 * (values[idx - 1] + values[idx]);
    }
    return values[static_cast<std::size_t>(std::ceil(k)) - 1];
}

PbaResult run_pba(const EgocentricSample& s, const GridPoint& base, const PriorSet& priors,
                  const PBAConfig& cfg, const AnalysisOptions& opts) {
    if (cfg.draws < 1) throw std::invalid_argument("PBA requires at least one draw");
    validate_priors(priors, base, opts);
    for (const double p : cfg.percentiles)
        if (!(p >= 0.0 && p <= 100.0))
            throw std::invalid_argument("summary percentile outside [0,100]");

    const DesignData d = design_from_sample(s);
    CrossFitPredictions preds;
    if (opts.augmented) {
        const auto plan = make_crossfit_plan(s, opts.crossfit_seed);
        preds = crossfit_predictions(s, d, opts.outcome_model, plan);
    }

    // Canonical sampling order keeps the draw table independent of the map's
    // iteration guarantees and of any future prior additions.
    static const char* kOrder[] = {"rho_e", "rho_a", "m_e", "m_a", "kappa", "delta"};

    PbaResult result;
    result.draws.resize(static_cast<std::size_t>(cfg.draws));
    parallel_for(static_cast<std::size_t>(cfg.draws), opts.threads, [&](std::size_t b) {
        PbaDraw& draw = result.draws[b];
        draw.index = static_cast<long long>(b);
        rng::Stream stream(cfg.master_seed, static_cast<std::uint64_t>(b));

        GridPoint point = base;
        for (const char* key : kOrder) {
            const auto it = priors.find(key);
            if (it == priors.end()) continue;
            const double v = sample_prior(it->second, stream);
            draw.sampled.emplace_back(key, v);
            const std::string k = key;
            if (k == "rho_e") point.model.rho_e = v;
            else if (k == "rho_a") point.model.rho_a = v;
            else if (k == "m_e") point.model.m_e = v;
            else if (k == "m_a") point.model.m_a = v;
            else if (k == "kappa") point.kappa = v;
            else point.delta = v;
        }

        try {
            draw.estimates = evaluate_point(s, d, point, opts, opts.augmented ? &preds : nullptr);
            draw.values.reserve(draw.estimates.size());
            for (const auto& est : draw.estimates) {
                if (cfg.statistical_uncertainty && est.variance)
                    draw.values.push_back(stream.normal(est.point, std::sqrt(*est.variance)));
                else
                    draw.values.push_back(est.point);
            }
        } catch (const std::exception& e) {
            draw.ok = false;
            draw.error = e.what();
        }
    });

    // Summaries per estimand over successful draws.
    std::vector<Estimand> estimands;
    for (const auto& draw : result.draws) {
        if (!draw.ok) continue;
        for (const auto& est : draw.estimates) estimands.push_back(est.estimand);
        break;
    }
    long long failed = 0;
    for (const auto& draw : result.draws)
        if (!draw.ok) ++failed;
    for (std::size_t k = 0; k < estimands.size(); ++k) {
        PbaSummary summary;
        summary.estimand = estimands[k];
        summary.n_failed = failed;
        std::vector<double> values;
        rng::KahanSum sum;
        for (const auto& draw : result.draws) {
            if (!draw.ok) continue;
            values.push_back(draw.values[k]);
            sum.add(draw.values[k]);
        }
        summary.n_used = static_cast<long long>(values.size());
        if (!values.empty()) summary.mean = sum.value() / static_cast<double>(values.size());
        for (const double p : cfg.percentiles)
            summary.percentiles.emplace_back(p, values.empty() ? 0.0
                                                               : empirical_percentile(values, p));
        result.summaries.push_back(std::move(summary));
    }
    return result;
}

}  // namespace enrt

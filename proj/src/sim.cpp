#include "enrt/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "enrt/outcome.hpp"
#include "enrt/parallel.hpp"
#include "enrt/rng.hpp"

namespace enrt::sim {

namespace {

// Stream tags under the scenario seed.
constexpr std::uint64_t kCovariateStream = 0;
constexpr std::uint64_t kEdgeStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kReplicationRoot = 3;

struct RosterEntry {
    std::string specification;
    bool augmented = false;
};

RosterEntry parse_roster_token(const std::string& token) {
    RosterEntry entry;
    std::string base = token;
    const std::string suffix = "_augmented";
    if (base.size() > suffix.size() && base.ends_with(suffix)) {
        entry.augmented = true;
        base = base.substr(0, base.size() - suffix.size());
    }
    if (base != "naive" && base != "heterogeneous" && base != "homogeneous")
        throw std::invalid_argument("unknown estimator token '" + token + "'");
    entry.specification = base;
    return entry;
}

}  // namespace

PopulationNetwork generate_population(const ScenarioConfig& cfg, const CovariateConfig& covgen,
                                      std::uint64_t seed) {
    if (cfg.n_e < 1 || cfg.alters_per_ego < 0)
        throw std::invalid_argument("invalid scenario dimensions");

    const int n_units = cfg.n_e * (1 + cfg.alters_per_ego);
    std::vector<Unit> units;
    units.reserve(n_units);
    Eigen::MatrixXd covariates(n_units, 3);
    rng::Stream cov_stream(seed, kCovariateStream);

    int row = 0;
    for (int i = 0; i < cfg.n_e; ++i) {
        Unit ego;
        ego.unit_id = "ego" + std::to_string(i + 1);
        ego.role = Role::Ego;
        ego.ego_id = ego.unit_id;
        ego.treatment = 0;  // placeholder; replications assign through DesignData
        ego.source_row = row + 2;
        covariates(row, 0) = cov_stream.bernoulli(covgen.ego_p1) ? 1.0 : 0.0;
        covariates(row, 1) = cov_stream.bernoulli(covgen.ego_p2) ? 1.0 : 0.0;
        covariates(row, 2) = cov_stream.normal();
        units.push_back(std::move(ego));
        ++row;
        for (int a = 0; a < cfg.alters_per_ego; ++a) {
            Unit alter;
            alter.unit_id = "alter" + std::to_string(i + 1) + "_" + std::to_string(a + 1);
            alter.role = Role::Alter;
            alter.ego_id = "ego" + std::to_string(i + 1);
            alter.source_row = row + 2;
            covariates(row, 0) = cov_stream.bernoulli(covgen.alter_p1) ? 1.0 : 0.0;
            covariates(row, 1) = cov_stream.bernoulli(covgen.alter_p2) ? 1.0 : 0.0;
            covariates(row, 2) = cov_stream.normal();
            units.push_back(std::move(alter));
            ++row;
        }
    }

    PopulationNetwork net;
    net.sample = build_sample(std::move(units), std::move(covariates), {"x_1", "x_2", "x_3"},
                              cfg.p_z);

    EdgeProbabilityModel model;
    model.m_e = cfg.m_e;
    model.m_a = cfg.m_a;
    if (cfg.gamma) {
        model.kind = EdgeProbabilityModel::Kind::HeterogeneousCount;
        model.gamma_e = *cfg.gamma;
        model.gamma_a = *cfg.gamma;
        model.metric = cfg.metric;
    } else {
        model.kind = EdgeProbabilityModel::Kind::HomogeneousCount;
    }
    net.generating_model = model;

    const EdgeProbabilities ep = build_edge_probabilities(model, net.sample);
    rng::Stream edge_stream(seed, kEdgeStream);
    for (int i = 0; i < net.sample.n_e(); ++i)
        for (int j = i + 1; j < net.sample.n_e(); ++j)
            if (edge_stream.bernoulli(ep.ego_ego(i, j))) net.latent_ego_ego.emplace_back(i, j);
    for (int a = 0; a < net.sample.n_a(); ++a)
        for (int j = 0; j < net.sample.n_e(); ++j) {
            if (j == net.sample.alter_ego[a]) continue;
            if (edge_stream.bernoulli(ep.alter_ego(a, j))) net.latent_alter_ego.emplace_back(a, j);
        }
    return net;
}

PopulationNetwork generate_population(const ScenarioConfig& cfg, std::uint64_t seed) {
    return generate_population(cfg, CovariateConfig{}, seed);
}

PotentialOutcomeTable generate_potential_outcomes(const PopulationNetwork& net,
                                                  const OutcomeCoefficients& coef,
                                                  std::uint64_t noise_seed) {
    const EgocentricSample& s = net.sample;
    if (s.covariates.cols() < 3)
        throw std::invalid_argument("outcome model expects three covariates");

    rng::Stream noise(noise_seed, kNoiseStream);
    PotentialOutcomeTable table;
    table.cells.ego.resize(s.n_e(), 4);
    table.cells.alter.resize(s.n_a(), 2);

    for (int i = 0; i < s.n_e(); ++i) {
        const Eigen::RowVector3d x = s.covariates.row(s.ego_units[i]).head<3>();
        const double base = coef.ego_intercept + x * coef.beta_ego + coef.noise_sd * noise.normal();
        for (int z = 0; z <= 1; ++z)
            for (int f = 0; f <= 1; ++f)
                table.cells.ego(i, PotentialOutcomes::ego_col(z, f)) =
                    base + coef.ego_z * z + coef.ego_f * f + coef.ego_zf * z * f;
    }
    for (int a = 0; a < s.n_a(); ++a) {
        const Eigen::RowVector3d x = s.covariates.row(s.alter_units[a]).head<3>();
        const double base =
            coef.alter_intercept + x * coef.beta_alter + coef.noise_sd * noise.normal();
        table.cells.alter(a, 0) = base;
        table.cells.alter(a, 1) = base + coef.alter_f;
    }

    const TrueEffects truths = true_effects(table.cells);
    table.ie_true = truths.ie;
    table.de_true = truths.de;
    table.kappa = truths.kappa;
    return table;
}

TrueEffects true_effects(const PotentialOutcomes& cells) {
    TrueEffects out;
    const Eigen::Index n_a = cells.alter.rows();
    const Eigen::Index n_e = cells.ego.rows();
    if (n_a > 0) out.ie = (cells.alter.col(1) - cells.alter.col(0)).mean();
    if (n_e > 0)
        out.de = (cells.ego.col(PotentialOutcomes::ego_col(1, 0)) -
                  cells.ego.col(PotentialOutcomes::ego_col(0, 0)))
                     .mean();

    // kappa is implied by the ratio of exposed to unexposed direct effects;
    // report it only when constant across egos.
    std::optional<double> kappa;
    bool consistent = true;
    for (Eigen::Index i = 0; i < n_e && consistent; ++i) {
        const double unexposed = cells.ego(i, PotentialOutcomes::ego_col(1, 0)) -
                                 cells.ego(i, PotentialOutcomes::ego_col(0, 0));
        const double exposed = cells.ego(i, PotentialOutcomes::ego_col(1, 1)) -
                               cells.ego(i, PotentialOutcomes::ego_col(0, 1));
        if (unexposed == 0.0) {
            if (exposed != 0.0) consistent = false;  // no finite kappa satisfies this ego
            continue;
        }
        const double ratio = exposed / unexposed;
        if (!kappa) {
            kappa = ratio;
        } else if (std::abs(ratio - *kappa) > 1e-9 * std::max(1.0, std::abs(*kappa))) {
            consistent = false;
        }
    }
    if (consistent) out.kappa = kappa;
    return out;
}

EdgeProbabilities realized_edge_probabilities(const PopulationNetwork& net) {
    EdgeProbabilities ep;
    ep.ego_ego = Eigen::MatrixXd::Zero(net.sample.n_e(), net.sample.n_e());
    ep.alter_ego = Eigen::MatrixXd::Zero(net.sample.n_a(), net.sample.n_e());
    for (const auto& [i, j] : net.latent_ego_ego) {
        ep.ego_ego(i, j) = 1.0;
        ep.ego_ego(j, i) = 1.0;
    }
    for (const auto& [a, j] : net.latent_alter_ego) ep.alter_ego(a, j) = 1.0;
    return ep;
}

TrueExposures true_exposures(const PopulationNetwork& net, const Eigen::VectorXd& z_ego) {
    const EgocentricSample& s = net.sample;
    TrueExposures exp;
    exp.ego = Eigen::VectorXd::Zero(s.n_e());
    exp.alter = Eigen::VectorXd::Zero(s.n_a());
    // Observed star edges first: an alter is exposed when its ego is treated
    // (alters are never treated, so egos gain nothing from the star).
    for (int a = 0; a < s.n_a(); ++a)
        if (z_ego[s.alter_ego[a]] > 0.5) exp.alter[a] = 1.0;
    for (const auto& [i, j] : net.latent_ego_ego) {
        if (z_ego[j] > 0.5) exp.ego[i] = 1.0;
        if (z_ego[i] > 0.5) exp.ego[j] = 1.0;
    }
    for (const auto& [a, j] : net.latent_alter_ego)
        if (z_ego[j] > 0.5) exp.alter[a] = 1.0;
    return exp;
}

DesignData realize_design(const PopulationNetwork& net, const PotentialOutcomeTable& pot,
                          const Eigen::VectorXd& z_ego) {
    const EgocentricSample& s = net.sample;
    const TrueExposures exp = true_exposures(net, z_ego);
    DesignData d;
    d.z_ego = z_ego;
    d.y_ego.resize(s.n_e());
    d.y_alter.resize(s.n_a());
    d.f_alter.resize(s.n_a());
    for (int i = 0; i < s.n_e(); ++i) {
        const int z = z_ego[i] > 0.5 ? 1 : 0;
        const int f = exp.ego[i] > 0.5 ? 1 : 0;
        d.y_ego[i] = pot.cells.ego(i, PotentialOutcomes::ego_col(z, f));
    }
    for (int a = 0; a < s.n_a(); ++a) {
        const int f = exp.alter[a] > 0.5 ? 1 : 0;
        d.y_alter[a] = pot.cells.alter(a, f);
        d.f_alter[a] = z_ego[s.alter_ego[a]];
    }
    return d;
}

ReplicationReport run_replications(const PopulationNetwork& net, const PotentialOutcomeTable& pot,
                                   const std::vector<std::string>& roster, long long reps,
                                   double p_z, std::uint64_t seed, int threads) {
    if (reps < 1) throw std::invalid_argument("need at least one replication");
    const EgocentricSample& s = net.sample;
    if (s.p_z != p_z)
        throw std::invalid_argument("replication p_z differs from the sample design");

    std::vector<RosterEntry> entries;
    bool any_augmented = false;
    for (const auto& token : roster) {
        entries.push_back(parse_roster_token(token));
        any_augmented |= entries.back().augmented;
    }
    if (entries.empty()) throw std::invalid_argument("empty estimator roster");

    // Specification-dependent state is fixed across replications.
    const EdgeProbabilities ep_het = build_edge_probabilities(net.generating_model, s);
    EdgeProbabilityModel homog;
    homog.kind = EdgeProbabilityModel::Kind::HomogeneousCount;
    homog.m_e = net.generating_model.m_e;
    homog.m_a = net.generating_model.m_a;
    const EdgeProbabilities ep_hom = build_edge_probabilities(homog, s);
    const ExposureProfile prof_het = make_exposure_profile(ep_het, s);
    const ExposureProfile prof_hom = make_exposure_profile(ep_hom, s);
    ExposureProfile prof_naive;
    prof_naive.pi_alter = Eigen::VectorXd::Constant(s.n_a(), p_z);
    prof_naive.pi_ego = Eigen::VectorXd::Zero(s.n_e());

    bool needs_kappa = false;
    for (const auto& entry : entries) needs_kappa |= entry.specification != "naive";
    if (needs_kappa && !pot.kappa)
        throw std::invalid_argument(
            "adjusted direct-effect estimators need a constant implied kappa");
    const KappaSpec kappa{pot.kappa.value_or(1.0)};
    const KappaSpec kappa_one{1.0};

    OutcomeModelSpec linear_spec;  // linear on all covariates

    const std::uint64_t rep_master = rng::substream_seed(seed, kReplicationRoot);
    const std::size_t n_entries = entries.size();
    // Per replication and roster entry: IE (point, se, cover), DE (point, se, cover).
    struct RepCell {
        double point[2];
        double se[2];
        double cover[2];
    };
    std::vector<RepCell> cells(static_cast<std::size_t>(reps) * n_entries);

    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        rng::Stream z_stream(rep_master, 2 * static_cast<std::uint64_t>(r));
        Eigen::VectorXd z(s.n_e());
        for (int i = 0; i < s.n_e(); ++i) z[i] = z_stream.bernoulli(p_z) ? 1.0 : 0.0;
        const DesignData d = realize_design(net, pot, z);

        CrossFitPredictions preds;
        if (any_augmented) {
            const auto plan = make_crossfit_plan(
                s, rng::substream_seed(rep_master, 2 * static_cast<std::uint64_t>(r) + 1));
            preds = crossfit_predictions(s, d, linear_spec, plan);
        }

        for (std::size_t e = 0; e < n_entries; ++e) {
            const RosterEntry& entry = entries[e];
            const ExposureProfile& prof = entry.specification == "naive"        ? prof_naive
                                          : entry.specification == "homogeneous" ? prof_hom
                                                                                 : prof_het;
            const EdgeProbabilities* edge_model = entry.specification == "naive" ? nullptr
                                                  : entry.specification == "homogeneous"
                                                      ? &ep_hom
                                                      : &ep_het;
            const KappaSpec& k = entry.specification == "naive" ? kappa_one : kappa;

            EffectEstimate ie, de;
            if (entry.augmented) {
                auto aug = augmented_estimates(s, d, prof, k, preds, edge_model);
                ie = std::move(aug.ie);
                de = std::move(aug.de);
            } else if (entry.specification == "naive") {
                ie = naive_ie(s, d);
                de = naive_de(s, d);
            } else {
                ie = adjusted_ie(s, d, prof);
                de = adjusted_de(s, d, prof, k, edge_model);
            }

            RepCell& cell = cells[r * n_entries + e];
            const EffectEstimate* ests[2] = {&ie, &de};
            const double truths[2] = {pot.ie_true, pot.de_true};
            for (int which = 0; which < 2; ++which) {
                cell.point[which] = ests[which]->point;
                cell.se[which] = std::sqrt(ests[which]->variance.value_or(0.0));
                cell.cover[which] = (ests[which]->ci_low <= truths[which] &&
                                     truths[which] <= ests[which]->ci_high)
                                        ? 1.0
                                        : 0.0;
            }
        }
    });

    ReplicationReport report;
    report.ie_true = pot.ie_true;
    report.de_true = pot.de_true;
    report.reps = reps;
    const auto n = static_cast<double>(reps);
    for (std::size_t e = 0; e < n_entries; ++e) {
        for (int which = 0; which < 2; ++which) {
            rng::KahanSum point_sum, se_sum, cover_sum;
            for (long long r = 0; r < reps; ++r) {
                const RepCell& cell = cells[static_cast<std::size_t>(r) * n_entries + e];
                point_sum.add(cell.point[which]);
                se_sum.add(cell.se[which]);
                cover_sum.add(cell.cover[which]);
            }
            const double mean_point = point_sum.value() / n;
            rng::KahanSum sq_sum;
            for (long long r = 0; r < reps; ++r) {
                const double dev =
                    cells[static_cast<std::size_t>(r) * n_entries + e].point[which] - mean_point;
                sq_sum.add(dev * dev);
            }
            EstimatorSummary row;
            row.specification = entries[e].specification;
            row.augmented = entries[e].augmented;
            row.estimand = which == 0 ? Estimand::IE : Estimand::DE;
            row.mean_point = mean_point;
            row.sd_point = reps > 1 ? std::sqrt(sq_sum.value() / (n - 1.0)) : 0.0;
            row.mean_se = se_sum.value() / n;
            row.bias = mean_point - (which == 0 ? pot.ie_true : pot.de_true);
            row.coverage = cover_sum.value() / n;
            row.sd_se = row.mean_se > 0 ? row.sd_point / row.mean_se : 0.0;
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

}  // namespace enrt::sim

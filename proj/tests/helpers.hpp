#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "enrt/estimators.hpp"
#include "enrt/rng.hpp"
#include "enrt/sample.hpp"
#include "enrt/sim.hpp"

namespace testutil {

/// Star sample with the given alter counts per ego; covariates optional.
inline enrt::EgocentricSample make_star_sample(const std::vector<int>& alters_per_ego, double p_z,
                                               Eigen::MatrixXd covariates = {},
                                               std::vector<std::string> cov_names = {}) {
    std::vector<enrt::Unit> units;
    int row = 2;
    for (std::size_t i = 0; i < alters_per_ego.size(); ++i) {
        enrt::Unit ego;
        ego.unit_id = "e" + std::to_string(i + 1);
        ego.role = enrt::Role::Ego;
        ego.ego_id = ego.unit_id;
        ego.treatment = 0;
        ego.source_row = row++;
        units.push_back(ego);
        for (int a = 0; a < alters_per_ego[i]; ++a) {
            enrt::Unit alter;
            alter.unit_id = "a" + std::to_string(i + 1) + "_" + std::to_string(a + 1);
            alter.role = enrt::Role::Alter;
            alter.ego_id = "e" + std::to_string(i + 1);
            alter.source_row = row++;
            units.push_back(alter);
        }
    }
    if (covariates.rows() == 0) covariates = Eigen::MatrixXd::Zero(units.size(), 0);
    return enrt::build_sample(std::move(units), std::move(covariates), std::move(cov_names), p_z);
}

/// Random contaminated instance with a potential-outcome table satisfying the
/// constant-kappa interaction assumption exactly.
struct TinyInstance {
    enrt::sim::PopulationNetwork net;
    enrt::sim::PotentialOutcomeTable pot;
    double kappa = 1.0;
};

inline TinyInstance random_instance(enrt::rng::Stream& stream, int max_egos = 10,
                                    int max_alters = 15, double edge_prob = 0.3,
                                    double p_z = 0.5) {
    TinyInstance inst;
    const int n_e = 2 + static_cast<int>(stream.discrete_uniform(0, max_egos - 2));
    std::vector<int> alters(n_e, 0);
    const int n_a = static_cast<int>(stream.discrete_uniform(1, max_alters));
    for (int a = 0; a < n_a; ++a) alters[stream.discrete_uniform(0, n_e - 1)] += 1;
    inst.net.sample = make_star_sample(alters, p_z);

    for (int i = 0; i < n_e; ++i)
        for (int j = i + 1; j < n_e; ++j)
            if (stream.bernoulli(edge_prob)) inst.net.latent_ego_ego.emplace_back(i, j);
    for (int a = 0; a < inst.net.sample.n_a(); ++a)
        for (int j = 0; j < n_e; ++j) {
            if (j == inst.net.sample.alter_ego[a]) continue;
            if (stream.bernoulli(edge_prob)) inst.net.latent_alter_ego.emplace_back(a, j);
        }

    inst.kappa = stream.uniform(0.5, 2.5);
    auto& cells = inst.pot.cells;
    cells.ego.resize(n_e, 4);
    cells.alter.resize(inst.net.sample.n_a(), 2);
    using PO = enrt::PotentialOutcomes;
    for (int i = 0; i < n_e; ++i) {
        const double y00 = stream.normal(0.0, 2.0);
        const double y10 = stream.normal(1.0, 2.0);
        const double y01 = stream.normal(0.5, 2.0);
        cells.ego(i, PO::ego_col(0, 0)) = y00;
        cells.ego(i, PO::ego_col(1, 0)) = y10;
        cells.ego(i, PO::ego_col(0, 1)) = y01;
        cells.ego(i, PO::ego_col(1, 1)) = y01 + inst.kappa * (y10 - y00);
    }
    for (int a = 0; a < inst.net.sample.n_a(); ++a) {
        cells.alter(a, 0) = stream.normal(0.0, 2.0);
        cells.alter(a, 1) = stream.normal(1.0, 2.0);
    }
    const auto truths = enrt::sim::true_effects(cells);
    inst.pot.ie_true = truths.ie;
    inst.pot.de_true = truths.de;
    inst.pot.kappa = truths.kappa;
    return inst;
}

/// Exact design expectation: enumerate all 2^{n_e} ego-treatment vectors,
/// weight by the Bernoulli(p_z) mass, realize the design from the population
/// network, and average the statistic.
inline double enumerate_expectation(
    const enrt::sim::PopulationNetwork& net, const enrt::sim::PotentialOutcomeTable& pot,
    const std::function<double(const enrt::DesignData&)>& statistic) {
    const int n_e = net.sample.n_e();
    const double p_z = net.sample.p_z;
    enrt::rng::KahanSum acc;
    for (std::uint64_t mask = 0; mask < (1ull << n_e); ++mask) {
        Eigen::VectorXd z(n_e);
        double weight = 1.0;
        for (int i = 0; i < n_e; ++i) {
            const bool treated = mask & (1ull << i);
            z[i] = treated ? 1.0 : 0.0;
            weight *= treated ? p_z : 1.0 - p_z;
        }
        const auto d = enrt::sim::realize_design(net, pot, z);
        acc.add(weight * statistic(d));
    }
    return acc.value();
}

/// Exposure profile computed from the realized edges of the instance
/// (the oracle specification with probabilities in {0,1}).
inline enrt::ExposureProfile realized_profile(const enrt::sim::PopulationNetwork& net,
                                              bool three_level = false) {
    const auto ep = enrt::sim::realized_edge_probabilities(net);
    return enrt::make_exposure_profile(ep, net.sample, three_level);
}

}  // namespace testutil

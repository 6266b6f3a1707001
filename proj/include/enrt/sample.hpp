#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace enrt {

enum class Role { Ego, Alter };

/// One recruited participant. Egos carry a treatment assignment; alters
/// point at the ego that recruited them.
struct Unit {
    std::string unit_id;
    Role role = Role::Ego;
    std::string ego_id;            // recruiting ego; equals unit_id for egos
    std::optional<int> treatment;  // 0/1 for egos, absent for alters
    double outcome = 0.0;
    int source_row = 0;            // 1-based data row in the input file
};

/// A recruited ENRT sample: disjoint ego-networks (stars), Bernoulli(p_z)
/// treatment assignment over egos. Immutable after construction; safe to
/// share read-only across threads.
struct EgocentricSample {
    std::vector<Unit> units;  // file order
    double p_z = 0.5;

    Eigen::MatrixXd covariates;  // units.size() x p, row per unit (may have 0 cols)
    std::vector<std::string> covariate_names;

    // Dense indices derived at build time. "Ego index" / "alter index" count
    // egos and alters separately, in file order.
    std::vector<int> ego_units;                // ego index -> unit index
    std::vector<int> alter_units;              // alter index -> unit index
    std::vector<int> alter_ego;                // alter index -> ego index of e(i)
    std::vector<std::vector<int>> ego_alters;  // ego index -> alter indices

    int n_e() const { return static_cast<int>(ego_units.size()); }
    int n_a() const { return static_cast<int>(alter_units.size()); }

    /// Treatment vector over egos (requires all treatments assigned).
    Eigen::VectorXd ego_treatments() const;
    Eigen::VectorXd ego_outcomes() const;
    Eigen::VectorXd alter_outcomes() const;
    /// Covariate rows restricted to egos / alters.
    Eigen::MatrixXd ego_covariates() const;
    Eigen::MatrixXd alter_covariates() const;
};

struct Violation {
    int row = 0;  // source row of the offending unit, 0 if sample-level
    std::string field;
    std::string message;
};

struct SchemaOptions {
    std::string unit_id = "unit_id";
    std::string role = "role";
    std::string ego_id = "ego_id";
    std::string z = "z";
    std::string y = "y";
    // Explicit covariate columns; empty means auto-detect by "x_" prefix.
    std::vector<std::string> covariate_columns;
};

/// Assemble and index a sample from parts; throws std::invalid_argument on
/// structural violations (the same checks validate_sample reports).
EgocentricSample build_sample(std::vector<Unit> units, Eigen::MatrixXd covariates,
                              std::vector<std::string> covariate_names, double p_z);

/// Load the canonical units CSV (header unit_id,role,ego_id,z,y,x_...).
/// Malformed content throws std::runtime_error naming the offending row.
EgocentricSample load_sample(const std::string& path, const SchemaOptions& schema, double p_z);
EgocentricSample load_sample(const std::string& path, double p_z);

/// Re-check every invariant on an assembled sample. Empty report iff valid.
std::vector<Violation> validate_sample(const EgocentricSample& s);

/// Exposures in the observed star network: 0 for every ego, the recruiting
/// ego's treatment for every alter.
struct ObservedExposures {
    Eigen::VectorXd alter;  // 0/1 per alter index
};

ObservedExposures observed_exposures(const EgocentricSample& s);

}  // namespace enrt

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "enrt/estimators.hpp"
#include "enrt/outcome.hpp"
#include "enrt/rng.hpp"
#include "enrt/sample.hpp"
#include "enrt/sensmodel.hpp"

namespace enrt {

/// One sensitivity-parameter configuration: an edge model plus the
/// interaction (kappa) and dose (delta) parameters.
struct GridPoint {
    EdgeProbabilityModel model;
    double kappa = 1.0;
    double delta = 0.0;
};

struct SensitivityGrid {
    std::vector<GridPoint> points;
    bool augmented = false;
    bool three_level = false;
};

struct Prior {
    enum class Dist {
        DiscreteUniform,   // a = lo, b = hi (inclusive)
        Poisson,           // a = mean
        NegBinomial,       // a = mean, b = size
        ContinuousUniform, // a = lo, b = hi
        LogNormal,         // a = meanlog, b = sdlog
        PointMass,         // a = value
        Beta               // a, b = shape parameters
    };
    Dist dist = Dist::PointMass;
    double a = 0.0;
    double b = 0.0;

    void validate() const;
};

double sample_prior(const Prior& prior, rng::Stream& stream);

/// Priors keyed by sensitivity-parameter name; allowed keys are rho_e,
/// rho_a, m_e, m_a, kappa, delta. Parameters without a prior keep the value
/// from the template grid point (an implicit point mass).
using PriorSet = std::map<std::string, Prior>;

struct AnalysisOptions {
    bool estimate_ie = true;
    bool estimate_de = true;
    bool estimate_ie_rr = false;  // relative risk (binary outcomes, never augmented)
    bool augmented = false;
    bool three_level = false;
    OutcomeModelSpec outcome_model;
    std::uint64_t crossfit_seed = 0;
    double level = 0.95;
    int threads = 1;
};

struct GsaRow {
    int point = 0;
    GridPoint params;
    std::vector<EffectEstimate> estimates;
    bool ok = true;
    std::string error;
};

/// Bias-corrected estimates for every grid point. Outcome models (when
/// augmented) are cross-fit once and reused for all points; per-point
/// failures are recorded in the row and the run continues.
std::vector<GsaRow> run_gsa(const EgocentricSample& s, const SensitivityGrid& grid,
                            const AnalysisOptions& opts);

struct PBAConfig {
    long long draws = 1000;
    std::uint64_t master_seed = 0;
    bool statistical_uncertainty = true;
    std::vector<double> percentiles = {2.5, 50.0, 97.5};
};

struct PbaDraw {
    long long index = 0;
    std::vector<std::pair<std::string, double>> sampled;  // parameter draws in canonical order
    std::vector<EffectEstimate> estimates;
    std::vector<double> values;  // randomized values when uncertainty is on, else the points
    bool ok = true;
    std::string error;
};

struct PbaSummary {
    Estimand estimand = Estimand::IE;
    double mean = 0.0;
    std::vector<std::pair<double, double>> percentiles;  // (percent, value)
    long long n_used = 0;
    long long n_failed = 0;
};

struct PbaResult {
    std::vector<PbaDraw> draws;
    std::vector<PbaSummary> summaries;
};

/// Monte-Carlo propagation of the priors: per draw, sample the sensitivity
/// parameters, compute bias-corrected estimates, and (optionally) add the
/// design uncertainty through a normal draw around the point estimate. Draw
/// streams are derived from (master seed, draw index), so the draw table is
/// reproducible under any parallelism degree.
PbaResult run_pba(const EgocentricSample& s, const GridPoint& base, const PriorSet& priors,
                  const PBAConfig& cfg, const AnalysisOptions& opts);

/// Empirical percentile (nearest rank, averaging the two straddling order
/// statistics when pct/100 * n lands on an integer).
double empirical_percentile(std::vector<double> values, double pct);

/// Shared single-point evaluation used by both GSA and PBA.
std::vector<EffectEstimate> evaluate_point(const EgocentricSample& s, const DesignData& d,
                                           const GridPoint& point, const AnalysisOptions& opts,
                                           const CrossFitPredictions* preds);

}  // namespace enrt

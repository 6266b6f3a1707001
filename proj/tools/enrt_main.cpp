// enrt: design-based estimation and contamination sensitivity analysis for
// egocentric-network randomized trials.
//
// Subcommands: estimate | gsa | pba | simulate, each driven by a JSON config
// (strict schema; flags override config fields). Every run writes
// estimates.csv, summary.json, and manifest.json into the output directory;
// rerunning a manifest reproduces estimates.csv byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "enrt/analysis.hpp"
#include "enrt/estimators.hpp"
#include "enrt/json_io.hpp"
#include "enrt/outcome.hpp"
#include "enrt/sample.hpp"
#include "enrt/sensmodel.hpp"
#include "enrt/sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using enrt::RunConfig;
using nlohmann::json;

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::string config_path;
};

class ValidationError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig load_config(const CliOverrides& cli, const std::string& command) {
    std::ifstream in(cli.config_path);
    if (!in) throw ValidationError("cannot open config '" + cli.config_path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("config '" + cli.config_path + "' is not valid JSON: " + e.what());
    }
    RunConfig cfg;
    try {
        cfg = enrt::run_config_from_json(j);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    if (!cfg.command.empty() && cfg.command != command)
        throw ValidationError("config names command '" + cfg.command + "' but subcommand is '" +
                              command + "'");
    cfg.command = command;

    // Precedence: flags > config > environment (threads only) > defaults.
    if (cli.seed) cfg.seed = *cli.seed;
    if (cli.out) cfg.out_dir = *cli.out;
    if (cli.threads) {
        cfg.threads = *cli.threads;
    } else if (cfg.threads <= 0) {
        if (const char* env = std::getenv("ENRT_THREADS")) cfg.threads = std::atoi(env);
    }
    if (cfg.threads <= 0) cfg.threads = 1;
    if (!(cfg.p_z > 0.0 && cfg.p_z < 1.0)) throw ValidationError("p_z must lie in (0,1)");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0))
        throw ValidationError("ci_level must lie in (0,1)");
    return cfg;
}

enrt::AnalysisOptions analysis_options(const RunConfig& cfg) {
    enrt::AnalysisOptions opts;
    opts.estimate_ie = opts.estimate_de = opts.estimate_ie_rr = false;
    for (const auto& e : cfg.estimands) {
        if (e == "IE") opts.estimate_ie = true;
        if (e == "DE") opts.estimate_de = true;
        if (e == "IE_RR") opts.estimate_ie_rr = true;
    }
    opts.augmented = cfg.augmented;
    opts.three_level = cfg.three_level;
    if (cfg.outcome_model) opts.outcome_model = *cfg.outcome_model;
    opts.crossfit_seed = cfg.seed;
    opts.level = cfg.ci_level;
    opts.threads = cfg.threads;
    return opts;
}

std::string csv_cell(const std::optional<double>& v) {
    return v ? enrt::format_double(*v) : std::string();
}

std::string param_cell(const enrt::EffectEstimate& est, const std::string& name) {
    for (const auto& [k, v] : est.params)
        if (k == name) return enrt::format_double(v);
    return {};
}

const char* kParamColumns[] = {"rho_e", "rho_a", "m_e", "m_a", "gamma_e", "gamma_a",
                               "kappa", "delta"};

void append_estimate_row(std::ostringstream& csv, int row, const std::string& estimator,
                         bool augmented, const enrt::EffectEstimate& est, bool ok) {
    csv << row << ',' << estimator << ',' << (augmented ? "true" : "false") << ','
        << enrt::estimand_name(est.estimand) << ',' << enrt::format_double(est.point) << ','
        << csv_cell(est.variance) << ','
        << (est.variance ? enrt::format_double(est.ci_low) : std::string()) << ','
        << (est.variance ? enrt::format_double(est.ci_high) : std::string()) << ','
        << enrt::format_double(est.level);
    for (const char* p : kParamColumns) csv << ',' << param_cell(est, p);
    csv << ',' << (ok ? "1" : "0") << '\n';
}

void append_failed_row(std::ostringstream& csv, int row, const std::string& estimator) {
    csv << row << ',' << estimator << ",,,,,,,";
    for (std::size_t i = 0; i < std::size(kParamColumns); ++i) csv << ',';
    csv << ",0\n";
}

const char* kEstimateHeader =
    "row,estimator,augmented,estimand,point,variance,ci_low,ci_high,level,"
    "rho_e,rho_a,m_e,m_a,gamma_e,gamma_a,kappa,delta,ok\n";

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

void write_outputs(const RunConfig& cfg, const std::string& csv, json summary) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    summary["command"] = cfg.command;
    summary["seed"] = cfg.seed;
    summary["version"] = kVersion;
    json manifest = enrt::to_json(cfg);
    manifest["version"] = kVersion;
    write_file(dir / "estimates.csv", csv);
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

enrt::EgocentricSample load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ValidationError("missing 'input' CSV path");
    try {
        return enrt::load_sample(cfg.input, cfg.p_z);
    } catch (const std::exception& e) {
        // Data problems are validation failures; surface them as JSON lines.
        std::cerr << json{{"row", 0}, {"field", "input"}, {"message", e.what()}}.dump() << '\n';
        throw ValidationError(std::string("input: ") + e.what());
    }
}

int run_estimate(const RunConfig& cfg) {
    const auto s = load_input(cfg);
    if (!cfg.point) throw ValidationError("estimate requires a 'model' block");
    const auto opts = analysis_options(cfg);
    const auto d = enrt::design_from_sample(s);

    std::ostringstream csv;
    csv << kEstimateHeader;
    json summary_rows = json::array();
    int row = 0;

    // Uncorrected reference rows first.
    enrt::ExposureProfile prof_naive;
    prof_naive.pi_alter = Eigen::VectorXd::Constant(s.n_a(), s.p_z);
    prof_naive.pi_ego = Eigen::VectorXd::Zero(s.n_e());
    if (opts.estimate_ie && s.n_a() > 0) {
        const auto est = enrt::naive_ie(s, d, cfg.ci_level);
        append_estimate_row(csv, row++, "naive", false, est, true);
        summary_rows.push_back(enrt::to_json(est));
    }
    if (opts.estimate_de) {
        const auto est = enrt::naive_de(s, d, cfg.ci_level);
        append_estimate_row(csv, row++, "naive", false, est, true);
        summary_rows.push_back(enrt::to_json(est));
    }
    if (opts.estimate_ie_rr && s.n_a() > 0) {
        const auto est = enrt::adjusted_ie_rr(s, d, prof_naive, cfg.ci_level);
        append_estimate_row(csv, row++, "naive", false, est, true);
        summary_rows.push_back(enrt::to_json(est));
    }

    const enrt::CrossFitPredictions* preds_ptr = nullptr;
    enrt::CrossFitPredictions preds;
    if (opts.augmented) {
        const auto plan = enrt::make_crossfit_plan(s, opts.crossfit_seed);
        preds = enrt::crossfit_predictions(s, d, opts.outcome_model, plan);
        preds_ptr = &preds;
    }
    for (const auto& est : enrt::evaluate_point(s, d, *cfg.point, opts, preds_ptr)) {
        append_estimate_row(csv, row++, "adjusted", opts.augmented, est, true);
        summary_rows.push_back(enrt::to_json(est));
    }

    write_outputs(cfg, csv.str(), json{{"estimates", summary_rows}});
    return 0;
}

int run_gsa_command(const RunConfig& cfg) {
    const auto s = load_input(cfg);
    if (cfg.grid.empty()) throw ValidationError("gsa requires a non-empty 'grid'");
    enrt::SensitivityGrid grid;
    grid.points = cfg.grid;
    grid.augmented = cfg.augmented;
    grid.three_level = cfg.three_level;
    const auto rows = enrt::run_gsa(s, grid, analysis_options(cfg));

    std::ostringstream csv;
    csv << kEstimateHeader;
    json summary_rows = json::array();
    int failures = 0;
    for (const auto& r : rows) {
        json jr{{"point", r.point}, {"ok", r.ok}};
        if (r.ok) {
            json ests = json::array();
            for (const auto& est : r.estimates) {
                append_estimate_row(csv, r.point, "adjusted", cfg.augmented, est, true);
                ests.push_back(enrt::to_json(est));
            }
            jr["estimates"] = ests;
        } else {
            append_failed_row(csv, r.point, "adjusted");
            jr["error"] = r.error;
            ++failures;
        }
        summary_rows.push_back(jr);
    }
    write_outputs(cfg, csv.str(),
                  json{{"points", rows.size()}, {"failures", failures}, {"rows", summary_rows}});
    return 0;
}

int run_pba_command(const RunConfig& cfg) {
    const auto s = load_input(cfg);
    if (!cfg.point) throw ValidationError("pba requires a 'model' block");
    if (cfg.pba.draws < 1) throw ValidationError("pba requires draws >= 1");
    enrt::PBAConfig pba_cfg = cfg.pba;
    pba_cfg.master_seed = cfg.seed;
    const auto result = enrt::run_pba(s, *cfg.point, cfg.priors, pba_cfg, analysis_options(cfg));

    std::ostringstream csv;
    csv << "draw,ok,estimand,value,point,variance,"
           "rho_e,rho_a,m_e,m_a,gamma_e,gamma_a,kappa,delta\n";
    for (const auto& draw : result.draws) {
        if (!draw.ok) {
            csv << draw.index << ",0,,,,";
            for (std::size_t i = 0; i < std::size(kParamColumns); ++i) csv << ',';
            csv << '\n';
            continue;
        }
        for (std::size_t k = 0; k < draw.estimates.size(); ++k) {
            const auto& est = draw.estimates[k];
            csv << draw.index << ",1," << enrt::estimand_name(est.estimand) << ','
                << enrt::format_double(draw.values[k]) << ',' << enrt::format_double(est.point)
                << ',' << csv_cell(est.variance);
            for (const char* p : kParamColumns) csv << ',' << param_cell(est, p);
            csv << '\n';
        }
    }

    json summaries = json::array();
    for (const auto& sum : result.summaries) {
        json percentiles = json::object();
        for (const auto& [pct, value] : sum.percentiles)
            percentiles[enrt::format_double(pct)] = value;
        summaries.push_back(json{{"estimand", enrt::estimand_name(sum.estimand)},
                                 {"mean", sum.mean},
                                 {"percentiles", percentiles},
                                 {"n_used", sum.n_used},
                                 {"n_failed", sum.n_failed}});
    }
    write_outputs(cfg, csv.str(),
                  json{{"draws", cfg.pba.draws},
                       {"statistical_uncertainty", cfg.pba.statistical_uncertainty},
                       {"summaries", summaries}});
    return 0;
}

int run_simulate(const RunConfig& cfg) {
    if (!cfg.scenario) throw ValidationError("simulate requires a 'simulate' block");
    enrt::sim::ScenarioConfig scenario = *cfg.scenario;
    if (scenario.seed == 0) scenario.seed = cfg.seed;

    const auto net = enrt::sim::generate_population(scenario, scenario.seed);
    const auto pot = enrt::sim::generate_potential_outcomes(net, enrt::sim::OutcomeCoefficients{},
                                                            scenario.seed);
    const auto report = enrt::sim::run_replications(net, pot, scenario.estimators, scenario.reps,
                                                    scenario.p_z, scenario.seed, cfg.threads);

    std::ostringstream csv;
    csv << "estimand,scenario,specification,augmented,bias,coverage,sd_se\n";
    json rows = json::array();
    for (const auto& r : report.rows) {
        std::string scenario_label;
        if (r.estimand == enrt::Estimand::IE) {
            scenario_label = "m_a=" + enrt::format_double(scenario.m_a);
        } else {
            scenario_label = "m_e=" + enrt::format_double(scenario.m_e);
            if (pot.kappa) scenario_label += ";kappa=" + enrt::format_double(*pot.kappa);
        }
        csv << enrt::estimand_name(r.estimand) << ',' << scenario_label << ','
            << r.specification << ',' << (r.augmented ? "TRUE" : "FALSE") << ','
            << enrt::format_double(r.bias) << ',' << enrt::format_double(r.coverage) << ','
            << enrt::format_double(r.sd_se) << '\n';
        rows.push_back(json{{"estimand", enrt::estimand_name(r.estimand)},
                            {"scenario", scenario_label},
                            {"specification", r.specification},
                            {"augmented", r.augmented},
                            {"bias", r.bias},
                            {"coverage", r.coverage},
                            {"sd_se", r.sd_se},
                            {"mean_point", r.mean_point},
                            {"sd_point", r.sd_point},
                            {"mean_se", r.mean_se}});
    }
    json summary{{"reps", report.reps},
                 {"true_ie", report.ie_true},
                 {"true_de", report.de_true},
                 {"rows", rows}};
    if (pot.kappa) summary["true_kappa"] = *pot.kappa;
    write_outputs(cfg, csv.str(), summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Design-based ENRT estimation and contamination sensitivity analysis"};
    app.require_subcommand(1);

    CliOverrides cli;
    std::uint64_t seed_flag = 0;
    std::string out_flag;
    int threads_flag = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_flag, "master seed (overrides config)");
        sub->add_option("--out", out_flag, "output directory (overrides config)");
        sub->add_option("--threads", threads_flag, "worker threads (overrides config)");
    };
    CLI::App* estimate = app.add_subcommand("estimate", "point estimates for one sensitivity model");
    CLI::App* gsa = app.add_subcommand("gsa", "grid sensitivity analysis");
    CLI::App* pba = app.add_subcommand("pba", "probabilistic bias analysis");
    CLI::App* simulate = app.add_subcommand("simulate", "replicated-randomization simulation study");
    for (CLI::App* sub : {estimate, gsa, pba, simulate}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    CLI::App* chosen = app.get_subcommands().front();
    if (chosen->count("--seed")) cli.seed = seed_flag;
    if (chosen->count("--out")) cli.out = out_flag;
    if (chosen->count("--threads")) cli.threads = threads_flag;
    const std::string command = chosen->get_name();

    try {
        const RunConfig cfg = load_config(cli, command);
        try {
            if (command == "estimate") return run_estimate(cfg);
            if (command == "gsa") return run_gsa_command(cfg);
            if (command == "pba") return run_pba_command(cfg);
            return run_simulate(cfg);
        } catch (const ValidationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

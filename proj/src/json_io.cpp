#include "enrt/json_io.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

namespace enrt {

using nlohmann::json;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw std::invalid_argument("unknown key '" + item.key() + "' in " + where);
}

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::Euclidean: return "euclidean";
        case Metric::Cosine: return "cosine";
        case Metric::Lp: return "lp";
    }
    return "?";
}

Metric metric_from_name(const std::string& name) {
    if (name == "euclidean") return Metric::Euclidean;
    if (name == "cosine") return Metric::Cosine;
    if (name == "lp") return Metric::Lp;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

GridPoint grid_point_from_json(const json& j, const std::string& where) {
    require_keys(j, {"model", "kappa", "delta"}, where);
    if (!j.contains("model")) throw std::invalid_argument(where + " needs a 'model'");
    GridPoint p;
    p.model = edge_model_from_json(j.at("model"));
    p.kappa = j.value("kappa", 1.0);
    p.delta = j.value("delta", 0.0);
    return p;
}

json grid_point_to_json(const GridPoint& p) {
    return json{{"model", to_json(p.model)}, {"kappa", p.kappa}, {"delta", p.delta}};
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json to_json(const EdgeProbabilityModel& model) {
    json j;
    switch (model.kind) {
        case EdgeProbabilityModel::Kind::HomogeneousProb:
            j["variant"] = "homogeneous_prob";
            j["rho_e"] = model.rho_e;
            j["rho_a"] = model.rho_a;
            break;
        case EdgeProbabilityModel::Kind::HomogeneousCount:
            j["variant"] = "homogeneous_count";
            j["m_e"] = model.m_e;
            j["m_a"] = model.m_a;
            break;
        case EdgeProbabilityModel::Kind::HeterogeneousProb:
            j["variant"] = "heterogeneous_prob";
            j["rho_e"] = model.rho_e;
            j["rho_a"] = model.rho_a;
            break;
        case EdgeProbabilityModel::Kind::HeterogeneousCount:
            j["variant"] = "heterogeneous_count";
            j["m_e"] = model.m_e;
            j["m_a"] = model.m_a;
            break;
    }
    if (model.heterogeneous()) {
        j["gamma_e"] = model.gamma_e;
        j["gamma_a"] = model.gamma_a;
        j["metric"] = metric_name(model.metric);
        if (model.metric == Metric::Lp) j["p"] = model.lp_p;
        j["standardize"] = model.standardize;
    }
    return j;
}

EdgeProbabilityModel edge_model_from_json(const json& j) {
    require_keys(j, {"variant", "rho_e", "rho_a", "m_e", "m_a", "gamma_e", "gamma_a", "metric",
                     "p", "standardize"},
                 "edge model");
    if (!j.contains("variant")) throw std::invalid_argument("edge model needs a 'variant'");
    const std::string variant = j.at("variant").get<std::string>();

    EdgeProbabilityModel model;
    if (variant == "homogeneous_prob") {
        model.kind = EdgeProbabilityModel::Kind::HomogeneousProb;
    } else if (variant == "homogeneous_count") {
        model.kind = EdgeProbabilityModel::Kind::HomogeneousCount;
    } else if (variant == "heterogeneous_prob") {
        model.kind = EdgeProbabilityModel::Kind::HeterogeneousProb;
    } else if (variant == "heterogeneous_count") {
        model.kind = EdgeProbabilityModel::Kind::HeterogeneousCount;
    } else {
        throw std::invalid_argument("unknown edge-model variant '" + variant + "'");
    }

    const bool count = model.count_based();
    for (const char* key : {"rho_e", "rho_a"})
        if (j.contains(key) && count)
            throw std::invalid_argument(std::string("'") + key + "' not used by variant '" +
                                        variant + "'");
    for (const char* key : {"m_e", "m_a"})
        if (j.contains(key) && !count)
            throw std::invalid_argument(std::string("'") + key + "' not used by variant '" +
                                        variant + "'");
    if (!model.heterogeneous())
        for (const char* key : {"gamma_e", "gamma_a", "metric", "p", "standardize"})
            if (j.contains(key))
                throw std::invalid_argument(std::string("'") + key + "' not used by variant '" +
                                            variant + "'");

    model.rho_e = j.value("rho_e", 0.0);
    model.rho_a = j.value("rho_a", 0.0);
    model.m_e = j.value("m_e", 0.0);
    model.m_a = j.value("m_a", 0.0);
    model.gamma_e = j.value("gamma_e", 0.0);
    model.gamma_a = j.value("gamma_a", 0.0);
    if (j.contains("metric")) model.metric = metric_from_name(j.at("metric").get<std::string>());
    model.lp_p = j.value("p", 2.0);
    model.standardize = j.value("standardize", true);
    return model;
}

json to_json(const EffectEstimate& est) {
    json params = json::object();
    for (const auto& [k, v] : est.params) params[k] = v;
    json j{{"estimand", estimand_name(est.estimand)},
           {"point", est.point},
           {"level", est.level},
           {"params", params}};
    if (est.variance) {
        j["variance"] = *est.variance;
        j["ci_low"] = est.ci_low;
        j["ci_high"] = est.ci_high;
    }
    if (!est.warnings.empty()) j["warnings"] = est.warnings;
    return j;
}

json to_json(const OutcomeModelSpec& spec) {
    return json{{"family", spec.family == OutcomeModelSpec::Family::Linear ? "linear" : "logistic"},
                {"covariates", spec.covariates},
                {"neighbor_averages", spec.neighbor_averages}};
}

OutcomeModelSpec outcome_spec_from_json(const json& j) {
    require_keys(j, {"family", "covariates", "neighbor_averages"}, "outcome model");
    OutcomeModelSpec spec;
    const std::string family = j.value("family", "linear");
    if (family == "linear") {
        spec.family = OutcomeModelSpec::Family::Linear;
    } else if (family == "logistic") {
        spec.family = OutcomeModelSpec::Family::Logistic;
    } else {
        throw std::invalid_argument("unknown outcome-model family '" + family + "'");
    }
    if (j.contains("covariates")) spec.covariates = j.at("covariates").get<std::vector<std::string>>();
    spec.neighbor_averages = j.value("neighbor_averages", false);
    return spec;
}

json to_json(const Prior& prior) {
    switch (prior.dist) {
        case Prior::Dist::DiscreteUniform:
            return json{{"dist", "discrete_uniform"}, {"lo", prior.a}, {"hi", prior.b}};
        case Prior::Dist::Poisson:
            return json{{"dist", "poisson"}, {"mean", prior.a}};
        case Prior::Dist::NegBinomial:
            return json{{"dist", "neg_binomial"}, {"mean", prior.a}, {"size", prior.b}};
        case Prior::Dist::ContinuousUniform:
            return json{{"dist", "continuous_uniform"}, {"lo", prior.a}, {"hi", prior.b}};
        case Prior::Dist::LogNormal:
            return json{{"dist", "log_normal"}, {"meanlog", prior.a}, {"sdlog", prior.b}};
        case Prior::Dist::PointMass:
            return json{{"dist", "point_mass"}, {"value", prior.a}};
        case Prior::Dist::Beta:
            return json{{"dist", "beta"}, {"a", prior.a}, {"b", prior.b}};
    }
    throw std::logic_error("unknown prior distribution");
}

Prior prior_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dist"))
        throw std::invalid_argument("prior needs a 'dist' field");
    const std::string dist = j.at("dist").get<std::string>();
    Prior prior;
    auto get = [&](const char* key) {
        if (!j.contains(key))
            throw std::invalid_argument("prior '" + dist + "' needs '" + key + "'");
        return j.at(key).get<double>();
    };
    if (dist == "discrete_uniform") {
        require_keys(j, {"dist", "lo", "hi"}, "prior");
        prior = {Prior::Dist::DiscreteUniform, get("lo"), get("hi")};
    } else if (dist == "poisson") {
        require_keys(j, {"dist", "mean"}, "prior");
        prior = {Prior::Dist::Poisson, get("mean"), 0.0};
    } else if (dist == "neg_binomial") {
        require_keys(j, {"dist", "mean", "size"}, "prior");
        prior = {Prior::Dist::NegBinomial, get("mean"), get("size")};
    } else if (dist == "continuous_uniform") {
        require_keys(j, {"dist", "lo", "hi"}, "prior");
        prior = {Prior::Dist::ContinuousUniform, get("lo"), get("hi")};
    } else if (dist == "log_normal") {
        require_keys(j, {"dist", "meanlog", "sdlog"}, "prior");
        prior = {Prior::Dist::LogNormal, get("meanlog"), get("sdlog")};
    } else if (dist == "point_mass") {
        require_keys(j, {"dist", "value"}, "prior");
        prior = {Prior::Dist::PointMass, get("value"), 0.0};
    } else if (dist == "beta") {
        require_keys(j, {"dist", "a", "b"}, "prior");
        prior = {Prior::Dist::Beta, get("a"), get("b")};
    } else {
        throw std::invalid_argument("unknown prior distribution '" + dist + "'");
    }
    prior.validate();
    return prior;
}

json to_json(const sim::ScenarioConfig& cfg) {
    json j{{"n_e", cfg.n_e},     {"alters_per_ego", cfg.alters_per_ego},
           {"m_a", cfg.m_a},     {"m_e", cfg.m_e},
           {"p_z", cfg.p_z},     {"reps", cfg.reps},
           {"seed", cfg.seed},   {"estimators", cfg.estimators}};
    if (cfg.gamma) {
        j["gamma"] = *cfg.gamma;
        j["metric"] = metric_name(cfg.metric);
    }
    return j;
}

sim::ScenarioConfig scenario_from_json(const json& j) {
    require_keys(j, {"n_e", "alters_per_ego", "m_a", "m_e", "gamma", "metric", "p_z", "reps",
                     "seed", "estimators"},
                 "simulate block");
    sim::ScenarioConfig cfg;
    cfg.n_e = j.value("n_e", cfg.n_e);
    cfg.alters_per_ego = j.value("alters_per_ego", cfg.alters_per_ego);
    cfg.m_a = j.value("m_a", cfg.m_a);
    cfg.m_e = j.value("m_e", cfg.m_e);
    if (j.contains("gamma")) cfg.gamma = j.at("gamma").get<double>();
    if (j.contains("metric")) cfg.metric = metric_from_name(j.at("metric").get<std::string>());
    cfg.p_z = j.value("p_z", cfg.p_z);
    cfg.reps = j.value("reps", cfg.reps);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("estimators"))
        cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
    return cfg;
}

RunConfig run_config_from_json(const json& j) {
    require_keys(j, {"version", "command", "input", "p_z", "seed", "out", "threads", "ci_level",
                     "estimands", "augmented", "three_level", "outcome_model", "model", "kappa",
                     "delta", "grid", "priors", "pba", "simulate"},
                 "run config");
    RunConfig cfg;
    cfg.command = j.value("command", "");
    cfg.input = j.value("input", "");
    cfg.p_z = j.value("p_z", cfg.p_z);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.ci_level = j.value("ci_level", cfg.ci_level);
    if (j.contains("estimands")) {
        cfg.estimands = j.at("estimands").get<std::vector<std::string>>();
        for (const auto& e : cfg.estimands)
            if (e != "IE" && e != "DE" && e != "IE_RR")
                throw std::invalid_argument("unknown estimand '" + e + "'");
        if (cfg.estimands.empty()) throw std::invalid_argument("empty estimand selection");
    }
    cfg.augmented = j.value("augmented", false);
    cfg.three_level = j.value("three_level", false);
    if (j.contains("outcome_model"))
        cfg.outcome_model = outcome_spec_from_json(j.at("outcome_model"));

    if (j.contains("model")) {
        GridPoint p;
        p.model = edge_model_from_json(j.at("model"));
        p.kappa = j.value("kappa", 1.0);
        p.delta = j.value("delta", 0.0);
        cfg.point = p;
    } else if (j.contains("kappa") || j.contains("delta")) {
        throw std::invalid_argument("'kappa'/'delta' require a 'model' block");
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (!g.is_array()) throw std::invalid_argument("'grid' must be an array");
        int idx = 0;
        for (const auto& item : g)
            cfg.grid.push_back(grid_point_from_json(item, "grid point " + std::to_string(idx++)));
    }

    if (j.contains("priors")) {
        for (const auto& item : j.at("priors").items())
            cfg.priors.emplace(item.key(), prior_from_json(item.value()));
    }

    if (j.contains("pba")) {
        const auto& p = j.at("pba");
        require_keys(p, {"draws", "statistical_uncertainty", "percentiles"}, "pba block");
        cfg.pba.draws = p.value("draws", cfg.pba.draws);
        cfg.pba.statistical_uncertainty =
            p.value("statistical_uncertainty", cfg.pba.statistical_uncertainty);
        if (p.contains("percentiles"))
            cfg.pba.percentiles = p.at("percentiles").get<std::vector<double>>();
    }

    if (j.contains("simulate")) cfg.scenario = scenario_from_json(j.at("simulate"));
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json j{{"command", cfg.command}, {"p_z", cfg.p_z},         {"seed", cfg.seed},
           {"out", cfg.out_dir},     {"threads", cfg.threads}, {"ci_level", cfg.ci_level},
           {"estimands", cfg.estimands}};
    if (!cfg.input.empty()) j["input"] = cfg.input;
    if (cfg.augmented) j["augmented"] = true;
    if (cfg.three_level) j["three_level"] = true;
    if (cfg.outcome_model) j["outcome_model"] = to_json(*cfg.outcome_model);
    if (cfg.point) {
        j["model"] = to_json(cfg.point->model);
        j["kappa"] = cfg.point->kappa;
        j["delta"] = cfg.point->delta;
    }
    if (!cfg.grid.empty()) {
        json g = json::array();
        for (const auto& p : cfg.grid) g.push_back(grid_point_to_json(p));
        j["grid"] = g;
    }
    if (!cfg.priors.empty()) {
        json p = json::object();
        for (const auto& [k, v] : cfg.priors) p[k] = to_json(v);
        j["priors"] = p;
    }
    if (cfg.command == "pba")
        j["pba"] = json{{"draws", cfg.pba.draws},
                        {"statistical_uncertainty", cfg.pba.statistical_uncertainty},
                        {"percentiles", cfg.pba.percentiles}};
    if (cfg.scenario) j["simulate"] = to_json(*cfg.scenario);
    return j;
}

}  // namespace enrt

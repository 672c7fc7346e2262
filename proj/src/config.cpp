#include "semigraph/config.hpp"

#include <fstream>
#include <set>

namespace semigraph {

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <class T>
void read(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
    ExperimentConfig c;
    try {
        reject_unknown(doc,
                       {"env", "policies", "grid", "tuning_rounds", "horizon", "replications", "seed", "mc_samples",
                        "delta", "v_mode", "fixed", "checkpoints"},
                       "config");
        if (doc.contains("env")) {
            const auto& e = doc.at("env");
            reject_unknown(e,
                           {"users", "arms", "dim", "edge_prob", "gamma", "noise_sigma", "scenario",
                            "misspecified_fraction"},
                           "env");
            read(e, "users", c.env.users);
            read(e, "arms", c.env.arms);
            read(e, "dim", c.env.dim);
            read(e, "edge_prob", c.env.edge_prob);
            read(e, "gamma", c.env.gamma);
            read(e, "noise_sigma", c.env.noise_sigma);
            read(e, "misspecified_fraction", c.env.misspecified_fraction);
            if (e.contains("scenario")) c.env.scenario = scenario_from_string(e.at("scenario").get<std::string>());
        }
        read(doc, "policies", c.policies);
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            reject_unknown(g, {"v", "lambda"}, "grid");
            read(g, "v", c.grid_v);
            read(g, "lambda", c.grid_lambda);
        }
        read(doc, "tuning_rounds", c.t0);
        read(doc, "horizon", c.horizon);
        read(doc, "replications", c.replications);
        read(doc, "seed", c.seed);
        read(doc, "mc_samples", c.mc_samples);
        read(doc, "delta", c.delta);
        read(doc, "checkpoints", c.checkpoint_count);
        if (doc.contains("v_mode")) {
            const auto mode = doc.at("v_mode").get<std::string>();
            if (mode == "shared") {
                c.v_mode = VMode::Shared;
            } else if (mode == "oracle") {
                c.v_mode = VMode::Oracle;
            } else {
                throw ConfigError("v_mode must be 'shared' or 'oracle'");
            }
        }
        if (doc.contains("fixed")) {
            const auto& f = doc.at("fixed");
            reject_unknown(f, {"v", "lambda"}, "fixed");
            read(f, "v", c.fixed_v);
            read(f, "lambda", c.fixed_lambda);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const EnvironmentError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const HarnessError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json doc;
    doc["env"] = {{"users", c.env.users},
                  {"arms", c.env.arms},
                  {"dim", c.env.dim},
                  {"edge_prob", c.env.edge_prob},
                  {"gamma", c.env.gamma},
                  {"noise_sigma", c.env.noise_sigma},
                  {"scenario", std::string(to_string(c.env.scenario))},
                  {"misspecified_fraction", c.env.misspecified_fraction}};
    doc["policies"] = c.policies;
    doc["grid"] = {{"v", c.grid_v}, {"lambda", c.grid_lambda}};
    doc["tuning_rounds"] = c.t0;
    doc["horizon"] = c.horizon;
    doc["replications"] = c.replications;
    doc["seed"] = c.seed;
    doc["mc_samples"] = c.mc_samples;
    doc["delta"] = c.delta;
    doc["v_mode"] = c.v_mode == VMode::Oracle ? "oracle" : "shared";
    doc["fixed"] = {{"v", c.fixed_v}, {"lambda", c.fixed_lambda}};
    doc["checkpoints"] = c.checkpoint_count;
    return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

}  // namespace semigraph

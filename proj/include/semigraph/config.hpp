#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "semigraph/harness.hpp"

namespace semigraph {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JSON schema (every key optional; defaults are the ExperimentConfig defaults):
//
//   {
//     "env": {"users": 10, "arms": 5, "dim": 20, "edge_prob": 0.4, "gamma": 5,
//             "noise_sigma": 0.1, "scenario": "nonstationary",
//             "misspecified_fraction": 0.0},
//     "policies": ["SemiGraphTS", "SemiTS-Ind", ...],
//     "grid": {"v": [0.001, 0.01, 0.1, 1, 10], "lambda": [0.008, 0.04, 0.2, 1, 5]},
//     "tuning_rounds": 2000,
//     "horizon": 20000,
//     "replications": 5,
//     "seed": 1,
//     "mc_samples": 1000,
//     "delta": 0.1,
//     "v_mode": "shared" | "oracle",
//     "fixed": {"v": 0.1, "lambda": 1.0},
//     "checkpoints": 100
//   }
//
// Unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace semigraph

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "semigraph/environment.hpp"
#include "semigraph/policies.hpp"

namespace semigraph {

class HarnessError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VMode {
    Shared,  // grid-tuned v shared by all users
    Oracle,  // SemiGraphTS uses v_j computed from the true |Delta_j|
};

struct ExperimentConfig {
    EnvSpec env;
    std::vector<std::string> policies{"SemiGraphTS", "SemiTS-Ind", "SemiTS-Sin", "LinTS-Ind",
                                      "LinTS-Sin",   "GraphUCB",   "Random"};
    std::vector<double> grid_v{1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<double> grid_lambda{1.0 / 125.0, 1.0 / 25.0, 1.0 / 5.0, 1.0, 5.0};
    std::size_t t0 = 2000;
    std::size_t horizon = 20000;
    std::size_t replications = 5;
    std::uint64_t seed = 1;
    std::size_t mc_samples = 1000;
    double delta = 0.1;
    VMode v_mode = VMode::Shared;
    // Hyperparameters for single runs without tuning (`run` subcommand).
    double fixed_v = 0.1;
    double fixed_lambda = 1.0;
    std::size_t checkpoint_count = 100;

    void validate() const;
};

struct RoundRecord {
    std::size_t t = 0;  // 1-based
    std::size_t user = 0;
    std::size_t arm = 0;
    std::size_t optimal_arm = 0;
    double reward = 0.0;
    double regret = 0.0;
    double cum_regret = 0.0;
    std::optional<double> psi_num;  // |X_t|_{Gamma^{-1}}
    std::optional<double> psi_den;  // |X_t|_{B^{-1}}
    // max_i |b_i^c^T (mu_hat - mu)| / s_i; absent for policies without the estimator.
    std::optional<double> coverage_ratio;
    double cum_ceiling = 0.0;  // cumulative regret of always picking the worst arm
    double wall_seconds = 0.0;
};

struct Trace {
    std::string policy;
    std::size_t replication = 0;
    std::vector<RoundRecord> rounds;

    double final_regret() const { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }
};

// Independent per-run random streams.
struct RunSeeds {
    std::uint64_t context = 0;
    std::uint64_t noise = 0;
    std::uint64_t arrival = 0;
    std::uint64_t policy = 0;

    static RunSeeds derive(std::uint64_t parent, std::string_view phase, std::uint64_t index = 0);
};

// Runs `horizon` rounds. Users arrive uniformly at random; regret is measured
// against env.mus, which the policy never sees.
Trace run_simulation(const Environment& env, Policy& policy, std::size_t horizon, const RunSeeds& seeds,
                     std::size_t replication = 0);

using PolicyFactory = std::function<std::unique_ptr<Policy>(double v, double lambda)>;

struct GridCell {
    double v = 0.0;
    double lambda = 0.0;
    double regret = 0.0;
};

struct GridResult {
    double best_v = 0.0;
    double best_lambda = 0.0;
    std::vector<GridCell> cells;  // in evaluation order: v ascending, then lambda ascending
};

// Each cell runs t0 rounds on its own fresh streams (RunSeeds::derive(seed, "tune", cell)).
// Lowest cumulative regret wins; ties go to the smaller v, then the smaller lambda.
GridResult grid_search(std::vector<double> grid_v, std::vector<double> grid_lambda, std::size_t t0,
                       const PolicyFactory& factory, const Environment& env, std::uint64_t seed,
                       std::size_t jobs = 1);

// Per-user ratio sum |X|_{Gamma^{-1}} / sum |X|_{B^{-1}}; nullopt when the user
// has no rounds with Psi terms or the denominator is zero.
std::vector<std::optional<double>> psi_diagnostic(const Trace& trace, std::size_t users);

struct CoverageResult {
    std::size_t rounds_checked = 0;
    std::size_t violations = 0;
    double frequency() const {
        return rounds_checked == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(rounds_checked);
    }
};

// Fraction of rounds whose estimate leaves the confidence event with radius
// confidence_radius(R = env.noise_sigma, d, t, delta, lambda, |Delta_{j_t}|).
CoverageResult coverage_check(const Trace& trace, const Environment& env, double delta, double lambda);

std::vector<double> oracle_v(const Environment& env, std::size_t horizon, double delta, double lambda);

// Cumulative regret at checkpoints, one row per replication.
struct Summary {
    std::string policy;
    std::vector<std::size_t> checkpoints;
    std::vector<std::vector<double>> values;  // [replication][checkpoint]

    std::size_t replications() const { return values.size(); }
    double mean(std::size_t c) const;
    double stddev(std::size_t c) const;  // sample sd (n-1); 0 for one replication
    double stderr_(std::size_t c) const;
    double half_width(std::size_t c) const { return 1.96 * stderr_(c); }
};

std::vector<std::size_t> checkpoint_schedule(std::size_t horizon, std::size_t count);

Summary summarize(const std::string& policy, const std::vector<Trace>& traces,
                  const std::vector<std::size_t>& checkpoints);

struct TunedParams {
    double v = 0.0;
    double lambda = 0.0;
    std::vector<GridCell> cells;
};

struct BenchResult {
    std::map<std::string, std::vector<Trace>> traces;          // per policy, one per replication
    std::map<std::string, std::vector<TunedParams>> tuning;    // per policy, one per replication
    std::map<std::string, Summary> summaries;
    std::vector<std::uint64_t> replication_seeds;
    std::vector<Environment> environments;
};

PolicyConfig policy_config_for(const ExperimentConfig& config, std::string_view policy, const Environment& env,
                               double v, double lambda);

// Tunes on t0 rounds, evaluates on a fresh horizon-round phase, repeats for each
// replication (seed of replication r is config.seed XOR r).
BenchResult replicate(const ExperimentConfig& config, std::size_t jobs = 1);

// Runs fn(i) for i in [0, count) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace semigraph

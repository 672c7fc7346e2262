#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "semigraph/graph.hpp"
#include "semigraph/rng.hpp"

namespace semigraph {

class EnvironmentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scenario {
    Stationary,          // nu_j(t) = 0
    AdversarialOptimal,  // nu_j(t) = -max_i b_i(t)^T mu_j
};

std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view s);

// Generator settings for a synthetic problem instance.
struct EnvSpec {
    std::size_t users = 10;
    std::size_t arms = 5;
    std::size_t dim = 20;
    double edge_prob = 0.4;
    double gamma = 5.0;
    double noise_sigma = 0.1;
    Scenario scenario = Scenario::AdversarialOptimal;
    double misspecified_fraction = 0.0;
};

// A concrete problem instance. Immutable once built.
struct Environment {
    UserGraph graph;
    Laplacian laplacian;
    Eigen::MatrixXd mus;  // users x dim
    std::size_t arms = 1;
    double noise_sigma = 0.0;
    Scenario scenario = Scenario::Stationary;
    std::uint64_t seed = 0;

    std::size_t users() const { return static_cast<std::size_t>(mus.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(mus.cols()); }
    std::size_t block_size() const { return dim() / arms; }
    Eigen::VectorXd mu(std::size_t j) const { return mus.row(j).transpose(); }
};

// Arm feature vectors for one round; row i is b_i(t).
struct ContextSet {
    std::size_t t = 0;
    Eigen::MatrixXd b;

    std::size_t arms() const { return static_cast<std::size_t>(b.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(b.cols()); }
};

// Minimizer of |mu - mu0|^2 + gamma mu^T (Ls kron I_d) mu with Ls = (L+L^T)/2,
// i.e. the solution of (I + gamma Ls) mu = mu0 row-blockwise. No rescaling.
// Throws EnvironmentError when I + gamma Ls is not positive definite (the
// objective is then unbounded below).
Eigen::MatrixXd smooth_user_params(const Laplacian& L, const Eigen::MatrixXd& mu0, double gamma);

// Draws mu0 ~ N(0, I), smooths it, then rescales so that max_j |mu_j| = 1.
Eigen::MatrixXd generate_user_params(const Laplacian& L, std::size_t dim, double gamma, Rng& rng);

// Negates mu_j for round(fraction * n) users chosen uniformly without replacement.
void misspecify_signs(Eigen::MatrixXd& mus, double fraction, Rng& rng);

// Builds graph (ER + connectivity repair) and parameters from the "env" substream
// of seed. Graphs for which the smoothing system is indefinite are redrawn.
Environment make_environment(const EnvSpec& spec, std::uint64_t seed);

// Block-sphere contexts: row i is zero outside columns [i d', (i+1) d') and
// uniform on the unit sphere inside.
ContextSet sample_contexts(std::size_t arms, std::size_t dim, std::size_t t, Rng& rng);

inline ContextSet sample_contexts(const Environment& env, std::size_t t, Rng& rng) {
    return sample_contexts(env.arms, env.dim(), t, rng);
}

double baseline_reward(Scenario scenario, const Eigen::VectorXd& mu_j, const ContextSet& ctx);

double expected_reward(const Environment& env, std::size_t j, std::size_t arm, const ContextSet& ctx);

double realize_reward(const Environment& env, std::size_t j, std::size_t arm, const ContextSet& ctx, Rng& noise);

// Lowest-index maximizer of b_i^T mu.
std::size_t optimal_arm(const ContextSet& ctx, const Eigen::VectorXd& mu);
std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores);

// Snapshot: a single JSON document with graph, mu, scenario, sigma and seed.
void write_environment(std::ostream& out, const Environment& env);
Environment read_environment(std::istream& in);

}  // namespace semigraph

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "semigraph/graph.hpp"
#include "semigraph/policies.hpp"

namespace semigraph {

struct CheckResult {
    std::string name;
    std::size_t trials = 0;
    std::size_t failures = 0;
    // Largest lhs / rhs seen (inequality checks) or largest error (identity checks).
    double worst = 0.0;
    double seconds = 0.0;

    bool passed() const { return failures == 0 && trials > 0; }
};

// A random multi-user state: connected graph on 2..max_users nodes, its
// Laplacian, and per-user B_k = lambda l_kk I + random PSD increments.
struct RandomGramState {
    UserGraph graph;
    Laplacian laplacian;
    double lambda = 1.0;
    std::vector<UserState> states;
};

RandomGramState random_gram_state(Rng& rng, std::size_t max_users = 6, std::size_t max_dim = 8,
                                  double lambda_lo = 0.01, double lambda_hi = 10.0);

// x^T B_j^{-1} y <= sqrt(2) |x|_{Gamma_j^{-1}} |y|_{B_j^{-1}} + slack
CheckResult check_gamma_inequality(std::size_t trials, std::uint64_t seed, double slack = 1e-9);

// |B_k^{-1} x|_{B_j^{-1}} <= |x|_{B_k^{-1}} / sqrt(lambda^2 l_jj l_kk) + slack
CheckResult check_inverse_inequality(std::size_t trials, std::uint64_t seed, double slack = 1e-9);

// Row sums of random-walk Laplacians of random graphs up to 200 nodes.
CheckResult check_laplacian_rows(std::size_t trials, std::uint64_t seed);

// sum_{k != j} l_jk^2 / (l_jj l_kk) = 1/deg(j) <= 1.
CheckResult check_neighbor_weights(std::size_t trials, std::uint64_t seed);

// Gamma_j - B_j is PSD and |x|_{Gamma^{-1}} <= |x|_{B^{-1}}.
CheckResult check_gram_dominance(std::size_t trials, std::uint64_t seed);

// Monte-Carlo probabilities sum to one, b_bar stays in the convex hull,
// |X| <= 2, and B's smallest eigenvalue never drops below lambda l_jj.
CheckResult check_update_invariants(std::size_t trials, std::uint64_t seed);

std::vector<CheckResult> run_verify_suite(std::uint64_t seed, std::size_t inequality_trials = 1000);

}  // namespace semigraph

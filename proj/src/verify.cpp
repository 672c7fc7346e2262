#include "semigraph/verify.hpp"

#include <chrono>
#include <cmath>

#include "semigraph/environment.hpp"

namespace semigraph {

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

Eigen::VectorXd normal_vector(Rng& rng, std::size_t d, double scale = 1.0) {
    NormalDist normal(0.0, scale);
    Eigen::VectorXd x(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
    return x;
}

template <class Fn>
CheckResult timed(std::string name, Fn&& body) {
    CheckResult r;
    r.name = std::move(name);
    const auto start = std::chrono::steady_clock::now();
    body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

double inv_norm(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::VectorXd& x) {
    return chol.matrixL().solve(x).norm();
}

}  // namespace

RandomGramState random_gram_state(Rng& rng, std::size_t max_users, std::size_t max_dim, double lambda_lo,
                                  double lambda_hi) {
    std::uniform_int_distribution<std::size_t> users(2, max_users);
    std::uniform_int_distribution<std::size_t> dims(1, max_dim);
    std::uniform_real_distribution<double> edge_p(0.2, 1.0);
    RandomGramState s;
    const std::size_t n = users(rng);
    const std::size_t d = dims(rng);
    s.graph = ensure_connected(generate_er_graph(n, edge_p(rng), rng), rng);
    s.laplacian = build_random_walk_laplacian(s.graph);
    s.lambda = log_uniform(rng, lambda_lo, lambda_hi);
    std::uniform_int_distribution<std::size_t> increments(0, 3 * d);
    for (std::size_t k = 0; k < n; ++k) {
        UserState st = UserState::initial(d, s.lambda * s.laplacian(k, k));
        const std::size_t count = increments(rng);
        for (std::size_t r = 0; r < count; ++r) {
            const Eigen::VectorXd u = normal_vector(rng, d, log_uniform(rng, 0.05, 3.0));
            st.B += u * u.transpose();
        }
        st.refresh();
        s.states.push_back(std::move(st));
    }
    return s;
}

CheckResult check_gamma_inequality(std::size_t trials, std::uint64_t seed, double slack) {
    return timed("gamma-inverse inequality (x'B^-1 y <= sqrt2 |x|_G^-1 |y|_B^-1)", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "gamma-inequality"));
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto s = random_gram_state(rng);
            std::uniform_int_distribution<std::size_t> pick(0, s.states.size() - 1);
            const std::size_t j = pick(rng);
            const auto& Bj = s.states[j];
            const auto gamma_chol = factor_spd(exploration_gram(s.states, s.laplacian, s.lambda, j), "Gamma");
            const Eigen::VectorXd x = normal_vector(rng, Bj.dim(), log_uniform(rng, 0.1, 10.0));
            const Eigen::VectorXd y = normal_vector(rng, Bj.dim(), log_uniform(rng, 0.1, 10.0));
            const double lhs = x.dot(Bj.chol.solve(y));
            const double rhs = std::sqrt(2.0) * inv_norm(gamma_chol, x) * inv_norm(Bj.chol, y);
            ++r.trials;
            if (lhs > rhs + slack) ++r.failures;
            if (rhs > 0.0) r.worst = std::max(r.worst, lhs / rhs);
        }
    });
}

CheckResult check_inverse_inequality(std::size_t trials, std::uint64_t seed, double slack) {
    return timed("cross-inverse inequality (|B_k^-1 x|_Bj^-1 <= |x|_Bk^-1 / sqrt(l^2 ljj lkk))", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "inverse-inequality"));
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto s = random_gram_state(rng);
            std::uniform_int_distribution<std::size_t> pick(0, s.states.size() - 1);
            const std::size_t j = pick(rng);
            const std::size_t k = pick(rng);
            const auto& Bj = s.states[j];
            const auto& Bk = s.states[k];
            const Eigen::VectorXd x = normal_vector(rng, Bj.dim(), log_uniform(rng, 0.1, 10.0));
            const double lhs = inv_norm(Bj.chol, Bk.chol.solve(x));
            const double rhs = inv_norm(Bk.chol, x) /
                               std::sqrt(s.lambda * s.lambda * s.laplacian(j, j) * s.laplacian(k, k));
            ++r.trials;
            if (lhs > rhs + slack) ++r.failures;
            if (rhs > 0.0) r.worst = std::max(r.worst, lhs / rhs);
        }
    });
}

CheckResult check_laplacian_rows(std::size_t trials, std::uint64_t seed) {
    return timed("laplacian row sums vanish (n <= 200)", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "laplacian-rows"));
        std::uniform_int_distribution<std::size_t> sizes(2, 200);
        std::uniform_real_distribution<double> edge_p(0.01, 1.0);
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto g = ensure_connected(generate_er_graph(sizes(rng), edge_p(rng), rng), rng);
            const auto L = build_random_walk_laplacian(g);
            const double err = L.dense().rowwise().sum().cwiseAbs().maxCoeff();
            ++r.trials;
            if (err > 1e-12) ++r.failures;
            r.worst = std::max(r.worst, err);
        }
    });
}

CheckResult check_neighbor_weights(std::size_t trials, std::uint64_t seed) {
    return timed("neighbor weight sum equals 1/deg <= 1", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "neighbor-weights"));
        std::uniform_int_distribution<std::size_t> sizes(2, 60);
        std::uniform_real_distribution<double> edge_p(0.05, 1.0);
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto g = ensure_connected(generate_er_graph(sizes(rng), edge_p(rng), rng), rng);
            const auto L = build_random_walk_laplacian(g);
            for (std::size_t j = 0; j < g.size(); ++j) {
                double sum = 0.0;
                for (std::size_t k : L.neighbors(j)) sum += L(j, k) * L(j, k) / (L(j, j) * L(k, k));
                const double err = std::abs(sum - 1.0 / static_cast<double>(g.degree(j)));
                ++r.trials;
                if (err > 1e-12 || sum > 1.0 + 1e-12) ++r.failures;
                r.worst = std::max(r.worst, err);
            }
        }
    });
}

CheckResult check_gram_dominance(std::size_t trials, std::uint64_t seed) {
    return timed("exploration Gram dominates B", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "gram-dominance"));
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const auto s = random_gram_state(rng);
            std::uniform_int_distribution<std::size_t> pick(0, s.states.size() - 1);
            const std::size_t j = pick(rng);
            const Eigen::MatrixXd gamma = exploration_gram(s.states, s.laplacian, s.lambda, j);
            const Eigen::MatrixXd diff = gamma - s.states[j].B;
            const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(diff).eigenvalues().minCoeff();
            const Eigen::VectorXd x = normal_vector(rng, s.states[j].dim());
            const double ng = inv_norm(factor_spd(gamma, "Gamma"), x);
            const double nb = inv_norm(s.states[j].chol, x);
            ++r.trials;
            if (min_eig < -1e-10 || ng > nb * (1.0 + 1e-12)) ++r.failures;
            r.worst = std::max(r.worst, -min_eig);
        }
    });
}

CheckResult check_update_invariants(std::size_t trials, std::uint64_t seed) {
    return timed("update invariants (sum pi = 1, |X| <= 2, B >= lambda I)", [&](CheckResult& r) {
        Rng rng(derive_seed(seed, "update-invariants"));
        std::uniform_int_distribution<std::size_t> arms(1, 6);
        std::uniform_int_distribution<std::size_t> block(1, 3);
        for (std::size_t trial = 0; trial < trials; ++trial) {
            const std::size_t N = arms(rng);
            const std::size_t d = N * block(rng);
            const double lambda = log_uniform(rng, 0.01, 10.0);
            UserState st = UserState::initial(d, lambda);
            bool ok = true;
            for (std::size_t step = 0; step < 20 && ok; ++step) {
                const ContextSet ctx = sample_contexts(N, d, step + 1, rng);
                const Eigen::VectorXd mu_hat = st.mu_bar;
                const ArmProbs probs = estimate_arm_probs_mc(mu_hat, st.B, 1.0, ctx, 64, rng);
                const double sum = probs.pi_hat.sum();
                // b_bar = b^T pi with pi >= 0, sum 1: in the hull iff b_bar matches that combination.
                const double hull_err = (ctx.b.transpose() * probs.pi_hat - probs.b_bar).norm();
                std::uniform_int_distribution<std::size_t> pick(0, N - 1);
                const std::size_t a = pick(rng);
                const double x_norm = (ctx.b.row(static_cast<Eigen::Index>(a)).transpose() - probs.b_bar).norm();
                update_state(st, ctx, probs, a, normal_vector(rng, 1)(0));
                const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(st.B).eigenvalues().minCoeff();
                const bool symmetric = (st.B - st.B.transpose()).cwiseAbs().maxCoeff() == 0.0;
                ok = std::abs(sum - 1.0) < 1e-12 && (probs.pi_hat.array() >= 0.0).all() && hull_err < 1e-12 &&
                     x_norm <= 2.0 + 1e-12 && min_eig >= lambda * (1.0 - 1e-10) && symmetric;
                r.worst = std::max(r.worst, x_norm);
            }
            ++r.trials;
            if (!ok) ++r.failures;
        }
    });
}

std::vector<CheckResult> run_verify_suite(std::uint64_t seed, std::size_t inequality_trials) {
    return {check_gamma_inequality(inequality_trials, seed),
            check_inverse_inequality(inequality_trials, seed),
            check_laplacian_rows(50, seed),
            check_neighbor_weights(200, seed),
            check_gram_dominance(500, seed),
            check_update_invariants(100, seed)};
}

}  // namespace semigraph

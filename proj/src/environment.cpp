#include "semigraph/environment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include <json.hpp>

namespace semigraph {

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::Stationary: return "stationary";
        case Scenario::AdversarialOptimal: return "nonstationary";
    }
    return "unknown";
}

Scenario scenario_from_string(std::string_view s) {
    if (s == "stationary") return Scenario::Stationary;
    if (s == "nonstationary" || s == "adversarial_optimal") return Scenario::AdversarialOptimal;
    throw EnvironmentError("unknown scenario '" + std::string(s) + "' (expected stationary|nonstationary)");
}

Eigen::MatrixXd smooth_user_params(const Laplacian& L, const Eigen::MatrixXd& mu0, double gamma) {
    if (gamma < 0.0) throw EnvironmentError("gamma must be >= 0");
    if (static_cast<std::size_t>(mu0.rows()) != L.size()) {
        throw EnvironmentError("mu0 rows do not match graph size");
    }
    const Eigen::Index n = mu0.rows();
    const Eigen::MatrixXd sym = 0.5 * (L.dense() + L.dense().transpose());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) + gamma * sym;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
        const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(system).eigenvalues().minCoeff();
        throw EnvironmentError("smoothing system I + gamma (L+L^T)/2 is not positive definite (min eigenvalue " +
                               std::to_string(min_eig) + "); objective unbounded for gamma=" + std::to_string(gamma));
    }
    return llt.solve(mu0);
}

Eigen::MatrixXd generate_user_params(const Laplacian& L, std::size_t dim, double gamma, Rng& rng) {
    NormalDist normal;
    Eigen::MatrixXd mu0(L.size(), dim);
    for (Eigen::Index j = 0; j < mu0.rows(); ++j) {
        for (Eigen::Index c = 0; c < mu0.cols(); ++c) mu0(j, c) = normal(rng);
    }
    Eigen::MatrixXd mus = smooth_user_params(L, mu0, gamma);
    const double scale = mus.rowwise().norm().maxCoeff();
    if (scale > 0.0) mus /= scale;
    return mus;
}

void misspecify_signs(Eigen::MatrixXd& mus, double fraction, Rng& rng) {
    if (fraction < 0.0 || fraction > 1.0) throw EnvironmentError("misspecified fraction must lie in [0, 1]");
    const auto n = static_cast<std::size_t>(mus.rows());
    const auto flips = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (flips == 0) return;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < flips; ++i) mus.row(order[i]) *= -1.0;
}

Environment make_environment(const EnvSpec& spec, std::uint64_t seed) {
    if (spec.arms == 0 || spec.dim % spec.arms != 0) {
        throw EnvironmentError("dim (" + std::to_string(spec.dim) + ") must be a positive multiple of arms (" +
                               std::to_string(spec.arms) + ")");
    }
    if (spec.users == 0) throw EnvironmentError("need at least one user");
    if (spec.noise_sigma < 0.0) throw EnvironmentError("noise_sigma must be >= 0");

    Environment env;
    env.arms = spec.arms;
    env.noise_sigma = spec.noise_sigma;
    env.scenario = spec.scenario;
    env.seed = seed;

    constexpr std::uint64_t max_attempts = 1000;
    for (std::uint64_t attempt = 0;; ++attempt) {
        if (attempt == max_attempts) {
            throw EnvironmentError("no graph with a positive-definite smoothing system after " +
                                   std::to_string(max_attempts) + " draws");
        }
        Rng graph_rng = make_rng(seed, "graph", attempt);
        if (spec.users == 1) {
            env.graph = UserGraph(1);
        } else {
            env.graph = ensure_connected(generate_er_graph(spec.users, spec.edge_prob, graph_rng), graph_rng);
        }
        env.laplacian = build_random_walk_laplacian(env.graph);
        Rng mu_rng = make_rng(seed, "mu", attempt);
        try {
            env.mus = generate_user_params(env.laplacian, spec.dim, spec.gamma, mu_rng);
        } catch (const EnvironmentError& e) {
            std::cerr << "warning: redrawing graph (attempt " << attempt + 1 << "): " << e.what() << '\n';
            continue;
        }
        break;
    }
    Rng flip_rng = make_rng(seed, "misspecify");
    misspecify_signs(env.mus, spec.misspecified_fraction, flip_rng);
    return env;
}

ContextSet sample_contexts(std::size_t arms, std::size_t dim, std::size_t t, Rng& rng) {
    if (arms == 0 || dim % arms != 0) {
        throw EnvironmentError("dim (" + std::to_string(dim) + ") not divisible by arms (" + std::to_string(arms) + ")");
    }
    const auto block = static_cast<Eigen::Index>(dim / arms);
    ContextSet ctx{t, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(arms), static_cast<Eigen::Index>(dim))};
    NormalDist normal;
    Eigen::VectorXd z(block);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(arms); ++i) {
        double norm = 0.0;
        do {
            for (Eigen::Index c = 0; c < block; ++c) z(c) = normal(rng);
            norm = z.norm();
        } while (norm == 0.0);
        ctx.b.row(i).segment(i * block, block) = (z / norm).transpose();
    }
    return ctx;
}

std::size_t argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& scores) {
    std::size_t best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
        if (scores(i) > scores(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
    }
    return best;
}

std::size_t optimal_arm(const ContextSet& ctx, const Eigen::VectorXd& mu) {
    return argmax_lowest(ctx.b * mu);
}

double baseline_reward(Scenario scenario, const Eigen::VectorXd& mu_j, const ContextSet& ctx) {
    if (scenario == Scenario::Stationary) return 0.0;
    return -(ctx.b * mu_j).maxCoeff();
}

double expected_reward(const Environment& env, std::size_t j, std::size_t arm, const ContextSet& ctx) {
    const Eigen::VectorXd mu = env.mu(j);
    return baseline_reward(env.scenario, mu, ctx) + ctx.b.row(static_cast<Eigen::Index>(arm)).dot(mu);
}

double realize_reward(const Environment& env, std::size_t j, std::size_t arm, const ContextSet& ctx, Rng& noise) {
    NormalDist eta(0.0, 1.0);
    // One draw per call regardless of sigma keeps the noise stream aligned across policies.
    const double z = eta(noise);
    return expected_reward(env, j, arm, ctx) + env.noise_sigma * z;
}

void write_environment(std::ostream& out, const Environment& env) {
    nlohmann::json doc;
    doc["users"] = env.users();
    doc["arms"] = env.arms;
    doc["dim"] = env.dim();
    doc["noise_sigma"] = env.noise_sigma;
    doc["scenario"] = std::string(to_string(env.scenario));
    doc["seed"] = env.seed;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [j, k] : env.graph.edges()) edges.push_back({j + 1, k + 1});
    doc["edges"] = std::move(edges);
    nlohmann::json mus = nlohmann::json::array();
    for (Eigen::Index j = 0; j < env.mus.rows(); ++j) {
        std::vector<double> row(env.mus.row(j).begin(), env.mus.row(j).end());
        mus.push_back(row);
    }
    doc["mu"] = std::move(mus);
    out << doc.dump(2) << '\n';
}

Environment read_environment(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw EnvironmentError(std::string("environment snapshot: ") + e.what());
    }
    try {
        Environment env;
        const auto users = doc.at("users").get<std::size_t>();
        const auto dim = doc.at("dim").get<std::size_t>();
        env.arms = doc.at("arms").get<std::size_t>();
        env.noise_sigma = doc.at("noise_sigma").get<double>();
        env.scenario = scenario_from_string(doc.at("scenario").get<std::string>());
        env.seed = doc.at("seed").get<std::uint64_t>();
        env.graph = UserGraph(users);
        for (const auto& e : doc.at("edges")) {
            env.graph.add_edge(e.at(0).get<std::size_t>() - 1, e.at(1).get<std::size_t>() - 1);
        }
        env.laplacian = build_random_walk_laplacian(env.graph);
        const auto& mus = doc.at("mu");
        if (mus.size() != users) throw EnvironmentError("mu has wrong number of rows");
        env.mus.resize(static_cast<Eigen::Index>(users), static_cast<Eigen::Index>(dim));
        for (std::size_t j = 0; j < users; ++j) {
            if (mus[j].size() != dim) throw EnvironmentError("mu row " + std::to_string(j + 1) + " has wrong length");
            for (std::size_t c = 0; c < dim; ++c) {
                env.mus(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = mus[j][c].get<double>();
            }
        }
        return env;
    } catch (const nlohmann::json::exception& e) {
        throw EnvironmentError(std::string("environment snapshot: ") + e.what());
    }
}

}  // namespace semigraph

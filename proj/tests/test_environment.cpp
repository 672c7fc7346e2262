#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semigraph/environment.hpp"

using namespace semigraph;

namespace {

ContextSet signed_pair() {
    ContextSet ctx{1, Eigen::MatrixXd(2, 1)};
    ctx.b << 1.0, -1.0;
    return ctx;
}

Environment scalar_env(Scenario scenario, double mu, double sigma) {
    Environment env;
    env.graph = UserGraph(1);
    env.laplacian = build_random_walk_laplacian(env.graph);
    env.mus = Eigen::MatrixXd::Constant(1, 1, mu);
    env.arms = 1;
    env.noise_sigma = sigma;
    env.scenario = scenario;
    return env;
}

}  // namespace

TEST_CASE("smoothing on a single edge") {
    const Laplacian L = build_random_walk_laplacian(UserGraph(2, {{0, 1}}));
    Eigen::MatrixXd mu0(2, 1);
    mu0 << 1.0, 0.0;
    const Eigen::MatrixXd mu = smooth_user_params(L, mu0, 1.0);
    CHECK(mu(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(mu(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(smooth_user_params(L, mu0, 0.0) == mu0);
    CHECK_THROWS_AS(smooth_user_params(L, mu0, -1.0), EnvironmentError);
}

TEST_CASE("indefinite smoothing system is reported") {
    // Star on 5 nodes: the symmetrized random-walk Laplacian has a negative
    // eigenvalue, so I + gamma Ls turns indefinite for large gamma.
    const Laplacian L = build_random_walk_laplacian(UserGraph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    const Eigen::MatrixXd sym = 0.5 * (L.dense() + L.dense().transpose());
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().minCoeff();
    REQUIRE(min_eig < 0.0);
    const Eigen::MatrixXd mu0 = Eigen::MatrixXd::Ones(5, 2);
    CHECK_THROWS_AS(smooth_user_params(L, mu0, 2.0 / -min_eig), EnvironmentError);
    CHECK_NOTHROW(smooth_user_params(L, mu0, 0.5 / -min_eig));
}

TEST_CASE("generated parameters are scaled to unit max norm") {
    Rng rng(4);
    const UserGraph g = ensure_connected(generate_er_graph(10, 0.4, rng), rng);
    const Laplacian L = build_random_walk_laplacian(g);
    const Eigen::MatrixXd mus = generate_user_params(L, 20, 0.0, rng);
    CHECK(mus.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("smoothing shrinks deviations from neighbors") {
    double smooth_total = 0.0;
    double rough_total = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        EnvSpec smooth;
        smooth.gamma = 5.0;
        EnvSpec rough = smooth;
        rough.gamma = 0.0;
        const Environment a = make_environment(smooth, s);
        const Environment b = make_environment(rough, s);
        REQUIRE(a.graph == b.graph);
        for (const auto& d : compute_deltas(a.laplacian, a.mus)) smooth_total += d.norm;
        for (const auto& d : compute_deltas(b.laplacian, b.mus)) rough_total += d.norm;
    }
    CHECK(smooth_total < rough_total);
}

TEST_CASE("make_environment is deterministic and validates its settings") {
    EnvSpec spec;
    const Environment a = make_environment(spec, 42);
    const Environment b = make_environment(spec, 42);
    CHECK(a.graph == b.graph);
    CHECK(a.mus == b.mus);
    CHECK(a.graph.connected());
    CHECK(a.users() == 10);
    CHECK(a.dim() == 20);
    CHECK(a.block_size() == 4);
    CHECK_FALSE(make_environment(spec, 43).mus == a.mus);

    EnvSpec bad = spec;
    bad.dim = 21;
    CHECK_THROWS_AS(make_environment(bad, 1), EnvironmentError);
    bad = spec;
    bad.users = 0;
    CHECK_THROWS_AS(make_environment(bad, 1), EnvironmentError);
    bad = spec;
    bad.misspecified_fraction = 1.5;
    CHECK_THROWS_AS(make_environment(bad, 1), EnvironmentError);
}

TEST_CASE("misspecification negates the requested number of users") {
    EnvSpec spec;
    const Environment clean = make_environment(spec, 8);
    spec.misspecified_fraction = 0.3;
    const Environment flipped = make_environment(spec, 8);
    int negated = 0;
    for (std::size_t j = 0; j < clean.users(); ++j) {
        if (flipped.mu(j) == -clean.mu(j)) {
            ++negated;
        } else {
            CHECK(flipped.mu(j) == clean.mu(j));
        }
    }
    CHECK(negated == 3);
}

TEST_CASE("property: block-sphere contexts") {
    Rng rng(10);
    for (std::size_t arms : {1u, 2u, 5u}) {
        for (std::size_t block : {1u, 3u, 4u}) {
            for (int rep = 0; rep < 50; ++rep) {
                const ContextSet ctx = sample_contexts(arms, arms * block, 7, rng);
                CHECK(ctx.t == 7);
                for (std::size_t i = 0; i < arms; ++i) {
                    CHECK(std::abs(ctx.b.row(i).norm() - 1.0) <= 1e-12);
                    for (std::size_t c = 0; c < arms * block; ++c) {
                        if (c / block != i) CHECK(ctx.b(i, c) == 0.0);
                        if (block == 1 && c == i) CHECK(std::abs(ctx.b(i, c)) == 1.0);
                    }
                    for (std::size_t k = i + 1; k < arms; ++k) CHECK(ctx.b.row(i).dot(ctx.b.row(k)) == 0.0);
                }
            }
        }
    }
    CHECK_THROWS_AS(sample_contexts(3, 7, 1, rng), EnvironmentError);
}

TEST_CASE("baseline reward") {
    const ContextSet ctx = signed_pair();
    Eigen::VectorXd mu(1);
    mu << 0.4;
    CHECK(baseline_reward(Scenario::Stationary, mu, ctx) == 0.0);
    CHECK(baseline_reward(Scenario::AdversarialOptimal, mu, ctx) == doctest::Approx(-0.4));

    const Environment env = make_environment(EnvSpec{}, 5);
    Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        const ContextSet c = sample_contexts(env, 1, rng);
        for (std::size_t j = 0; j < env.users(); ++j) {
            const double nu = baseline_reward(env.scenario, env.mu(j), c);
            CHECK(std::abs(nu) <= 1.0 + 1e-12);
            CHECK(expected_reward(env, j, optimal_arm(c, env.mu(j)), c) == doctest::Approx(0.0));
        }
    }
}

TEST_CASE("reward noise") {
    const ContextSet one{1, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    Rng rng(6);
    const Environment quiet = scalar_env(Scenario::Stationary, 0.25, 0.0);
    CHECK(realize_reward(quiet, 0, 0, one, rng) == 0.25);

    const Environment noisy = scalar_env(Scenario::Stationary, 0.25, 0.1);
    constexpr int draws = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < draws; ++i) {
        const double r = realize_reward(noisy, 0, 0, one, rng) - 0.25;
        sum += r;
        sq += r * r;
    }
    CHECK(std::abs(sum / draws) <= 4.0 * 0.1 / std::sqrt(double(draws)));
    CHECK(std::sqrt(sq / draws) == doctest::Approx(0.1).epsilon(0.01));
}

TEST_CASE("noise stream advances once per reward, independent of sigma") {
    const ContextSet one{1, Eigen::MatrixXd::Constant(1, 1, 1.0)};
    Rng a(12);
    Rng b(12);
    realize_reward(scalar_env(Scenario::Stationary, 0.0, 0.0), 0, 0, one, a);
    realize_reward(scalar_env(Scenario::Stationary, 0.0, 0.5), 0, 0, one, b);
    CHECK(a() == b());
}

TEST_CASE("optimal arm tie-breaking") {
    Eigen::VectorXd mu(1);
    mu << 0.3;
    CHECK(optimal_arm(signed_pair(), mu) == 0);
    mu << -0.3;
    CHECK(optimal_arm(signed_pair(), mu) == 1);
    const ContextSet single{1, Eigen::MatrixXd::Constant(1, 1, -1.0)};
    CHECK(optimal_arm(single, mu) == 0);
    CHECK(argmax_lowest(Eigen::VectorXd::Constant(4, 0.5)) == 0);
}

TEST_CASE("scenario names") {
    CHECK(to_string(Scenario::Stationary) == "stationary");
    CHECK(scenario_from_string("nonstationary") == Scenario::AdversarialOptimal);
    CHECK_THROWS_AS(scenario_from_string("weird"), EnvironmentError);
}

TEST_CASE("environment snapshot round trip") {
    const Environment env = make_environment(EnvSpec{}, 77);
    std::stringstream buf;
    write_environment(buf, env);
    const Environment back = read_environment(buf);
    CHECK(back.graph == env.graph);
    CHECK(back.mus == env.mus);
    CHECK(back.arms == env.arms);
    CHECK(back.scenario == env.scenario);
    CHECK(back.seed == env.seed);
    CHECK(back.laplacian.dense() == env.laplacian.dense());

    std::istringstream broken("{\"users\": 2}");
    CHECK_THROWS_AS(read_environment(broken), EnvironmentError);
}

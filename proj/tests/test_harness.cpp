#include <doctest.h>

#include <cmath>
#include <memory>

#include "semigraph/harness.hpp"

using namespace semigraph;

namespace {

EnvSpec small_spec(Scenario scenario) {
    EnvSpec spec;
    spec.users = 4;
    spec.arms = 4;
    spec.dim = 8;
    spec.scenario = scenario;
    return spec;
}

}  // namespace

TEST_CASE("oracle policy has zero regret") {
    const Environment env = make_environment(small_spec(Scenario::AdversarialOptimal), 1);
    OraclePolicy oracle(env.mus);
    const Trace trace = run_simulation(env, oracle, 500, RunSeeds::derive(1, "oracle"));
    CHECK(trace.final_regret() == 0.0);
    CHECK(trace.rounds.front().t == 1);
    CHECK(trace.rounds.back().t == 500);
}

TEST_CASE("random policy regret grows at the mean arm gap") {
    const Environment env = make_environment(small_spec(Scenario::Stationary), 2);
    // Brute-force oracle for E[max_i b_i'mu_j - mean_i b_i'mu_j], users uniform.
    Rng oracle_rng(99);
    constexpr int samples = 200000;
    double gap_sum = 0.0;
    double gap_sq = 0.0;
    std::uniform_int_distribution<std::size_t> user(0, env.users() - 1);
    for (int s = 0; s < samples; ++s) {
        const ContextSet ctx = sample_contexts(env, 1, oracle_rng);
        const Eigen::VectorXd scores = ctx.b * env.mu(user(oracle_rng));
        const double g = scores.maxCoeff() - scores.mean();
        gap_sum += g;
        gap_sq += g * g;
    }
    const double gap = gap_sum / samples;

    RandomPolicy random;
    constexpr std::size_t T = 40000;
    const Trace trace = run_simulation(env, random, T, RunSeeds::derive(2, "random"));
    double sq = 0.0;
    for (const auto& r : trace.rounds) sq += r.regret * r.regret;
    const double slope = trace.final_regret() / T;
    const double se = std::sqrt((sq / T - slope * slope) / T + (gap_sq / samples - gap * gap) / samples);
    CHECK(std::abs(slope - gap) <= 4.0 * se);
}

TEST_CASE("regret bookkeeping") {
    const Environment env = make_environment(small_spec(Scenario::AdversarialOptimal), 3);
    RandomPolicy random;
    const Trace trace = run_simulation(env, random, 200, RunSeeds::derive(3, "bookkeeping"));
    double cum = 0.0;
    for (const auto& r : trace.rounds) {
        CHECK(r.regret >= 0.0);
        cum += r.regret;
        CHECK(r.cum_regret == doctest::Approx(cum));
        CHECK(r.cum_regret <= r.cum_ceiling + 1e-12);
        CHECK(r.user < env.users());
        CHECK_FALSE(r.psi_num.has_value());
        CHECK_FALSE(r.coverage_ratio.has_value());
    }
}

TEST_CASE("simulation is reproducible and streams are independent of the policy") {
    const Environment env = make_environment(small_spec(Scenario::AdversarialOptimal), 4);
    PolicyConfig config;
    config.mc_samples = 50;
    const RunSeeds seeds = RunSeeds::derive(4, "repro");
    auto a = make_policy("SemiGraphTS", env, config);
    auto b = make_policy("SemiGraphTS", env, config);
    const Trace ta = run_simulation(env, *a, 300, seeds);
    const Trace tb = run_simulation(env, *b, 300, seeds);
    RandomPolicy random;
    const Trace tr = run_simulation(env, random, 300, seeds);
    for (std::size_t i = 0; i < ta.rounds.size(); ++i) {
        CHECK(ta.rounds[i].arm == tb.rounds[i].arm);
        CHECK(ta.rounds[i].reward == tb.rounds[i].reward);
        CHECK(*ta.rounds[i].psi_num == *tb.rounds[i].psi_num);
        // Arrival order and optimal arms depend only on the context and arrival streams.
        CHECK(ta.rounds[i].user == tr.rounds[i].user);
        CHECK(ta.rounds[i].optimal_arm == tr.rounds[i].optimal_arm);
    }
}

TEST_CASE("shape mismatch is rejected") {
    const Environment env = make_environment(small_spec(Scenario::Stationary), 5);
    const Environment other = make_environment(EnvSpec{}, 5);
    auto policy = make_policy("SemiTS-Ind", other, PolicyConfig{});
    CHECK_THROWS_AS(run_simulation(env, *policy, 10, RunSeeds::derive(5, "shape")), HarnessError);
}

TEST_CASE("grid search order, ties and winner") {
    const Environment env = make_environment(small_spec(Scenario::Stationary), 6);
    // The cell (v = 0.1, lambda = 5) plays the oracle; every other cell plays randomly.
    PolicyFactory factory = [&](double v, double lambda) -> std::unique_ptr<Policy> {
        if (v == 0.1 && lambda == 5.0) return std::make_unique<OraclePolicy>(env.mus);
        return std::make_unique<RandomPolicy>();
    };
    const GridResult r = grid_search({10.0, 0.1, 1.0}, {5.0, 1.0}, 100, factory, env, 1);
    REQUIRE(r.cells.size() == 6);
    CHECK(r.cells[0].v == 0.1);
    CHECK(r.cells[0].lambda == 1.0);
    CHECK(r.cells[1].lambda == 5.0);
    CHECK(r.cells[5].v == 10.0);
    CHECK(r.best_v == 0.1);
    CHECK(r.best_lambda == 5.0);
    CHECK(r.cells[1].regret == 0.0);

    // All cells tie at zero regret: the first cell in order wins.
    PolicyFactory oracle = [&](double, double) { return std::make_unique<OraclePolicy>(env.mus); };
    const GridResult tie = grid_search({1.0, 0.01}, {0.2, 0.04}, 50, oracle, env, 1);
    CHECK(tie.best_v == 0.01);
    CHECK(tie.best_lambda == 0.04);

    // No tuning rounds: every cell scores 0 and the first cell wins.
    const GridResult none = grid_search({3.0, 2.0}, {1.0}, 0, factory, env, 1);
    CHECK(none.best_v == 2.0);
    CHECK(none.cells[1].regret == 0.0);

    CHECK_THROWS_AS(grid_search({}, {1.0}, 10, factory, env, 1), HarnessError);
}

TEST_CASE("grid search result does not depend on the number of jobs") {
    const Environment env = make_environment(small_spec(Scenario::AdversarialOptimal), 7);
    PolicyConfig base;
    base.mc_samples = 20;
    PolicyFactory factory = [&](double v, double lambda) {
        PolicyConfig c = base;
        c.v = v;
        c.lambda = lambda;
        return make_policy("SemiTS-Ind", env, c);
    };
    const GridResult serial = grid_search({0.01, 1.0}, {0.2, 1.0}, 100, factory, env, 3, 1);
    const GridResult parallel = grid_search({0.01, 1.0}, {0.2, 1.0}, 100, factory, env, 3, 4);
    for (std::size_t c = 0; c < serial.cells.size(); ++c) CHECK(serial.cells[c].regret == parallel.cells[c].regret);
}

TEST_CASE("psi diagnostic") {
    Trace trace;
    RoundRecord a;
    a.user = 0;
    a.psi_num = 1.0;
    a.psi_den = 2.0;
    RoundRecord b = a;
    b.psi_num = 3.0;
    b.psi_den = 3.0;
    RoundRecord c;
    c.user = 1;
    trace.rounds = {a, b, c};
    const auto psi = psi_diagnostic(trace, 3);
    CHECK(*psi[0] == doctest::Approx(0.8));
    CHECK_FALSE(psi[1].has_value());
    CHECK_FALSE(psi[2].has_value());
    CHECK_THROWS_AS(psi_diagnostic(trace, 1), HarnessError);
}

TEST_CASE("coverage check") {
    const Environment env = make_environment(small_spec(Scenario::AdversarialOptimal), 8);
    PolicyConfig config;
    config.mc_samples = 100;
    config.per_user_v = oracle_v(env, 500, 0.1, 1.0);
    SemiParametricTS policy(Coupling::Graph, env.laplacian, env.dim(), config);
    const Trace trace = run_simulation(env, policy, 500, RunSeeds::derive(8, "coverage"));
    const CoverageResult strict = coverage_check(trace, env, 0.01, 1.0);
    const CoverageResult loose = coverage_check(trace, env, 0.5, 1.0);
    CHECK(strict.rounds_checked == 500);
    CHECK(strict.violations <= loose.violations);

    // First round: estimate 0, so the error is |b_i^c' mu| <= 2, far inside the radius.
    Trace first;
    first.rounds = {trace.rounds.front()};
    CHECK(coverage_check(first, env, 0.1, 1.0).violations == 0);

    Trace empty;
    CHECK(coverage_check(empty, env, 0.1, 1.0).frequency() == 0.0);
}

TEST_CASE("oracle v follows the per-user graph term") {
    const Environment env = make_environment(EnvSpec{}, 9);
    const auto v = oracle_v(env, 1000, 0.1, 1.0);
    const auto deltas = compute_deltas(env.laplacian, env.mus);
    REQUIRE(v.size() == env.users());
    for (std::size_t j = 0; j < v.size(); ++j) {
        CHECK(v[j] == doctest::Approx(v_parameter(env.noise_sigma, env.dim(), 1000, 0.1, 1.0, deltas[j].norm)));
    }
}

TEST_CASE("checkpoint schedule") {
    CHECK(checkpoint_schedule(100, 4) == std::vector<std::size_t>{25, 50, 75, 100});
    CHECK(checkpoint_schedule(10, 3) == std::vector<std::size_t>{3, 6, 9, 10});
    CHECK(checkpoint_schedule(3, 10) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("summary statistics and band") {
    Summary s;
    s.policy = "X";
    s.checkpoints = {10};
    s.values = {{1.0}, {2.0}, {3.0}, {6.0}};
    CHECK(s.mean(0) == doctest::Approx(3.0));
    CHECK(s.stddev(0) == doctest::Approx(std::sqrt(14.0 / 3.0)));
    CHECK(s.stderr_(0) == doctest::Approx(std::sqrt(14.0 / 3.0) / 2.0));
    CHECK(s.half_width(0) == doctest::Approx(1.96 * std::sqrt(14.0 / 3.0) / 2.0));
    s.values = {{4.0}};
    CHECK(s.stddev(0) == 0.0);
}

TEST_CASE("summarize reads cumulative regret at checkpoints") {
    Trace a;
    for (std::size_t t = 1; t <= 4; ++t) {
        RoundRecord r;
        r.t = t;
        r.cum_regret = double(t) * 0.5;
        a.rounds.push_back(r);
    }
    Trace b = a;
    for (auto& r : b.rounds) r.cum_regret *= 2.0;
    const Summary s = summarize("P", {a, b}, {2, 4});
    CHECK(s.values[0] == std::vector<double>{1.0, 2.0});
    CHECK(s.values[1] == std::vector<double>{2.0, 4.0});
    CHECK(s.mean(1) == doctest::Approx(3.0));
}

TEST_CASE("replicate end to end") {
    ExperimentConfig config;
    config.env = small_spec(Scenario::AdversarialOptimal);
    config.policies = {"SemiGraphTS", "LinTS-Ind", "Random"};
    config.grid_v = {0.1, 1.0};
    config.grid_lambda = {1.0};
    config.t0 = 50;
    config.horizon = 120;
    config.replications = 2;
    config.mc_samples = 20;
    config.checkpoint_count = 4;
    const BenchResult r = replicate(config, 2);
    CHECK(r.replication_seeds == std::vector<std::uint64_t>{1, 0});
    REQUIRE(r.traces.at("SemiGraphTS").size() == 2);
    CHECK(r.traces.at("Random")[1].rounds.size() == 120);
    CHECK(r.tuning.at("LinTS-Ind")[0].cells.size() == 2);
    CHECK(r.tuning.at("Random")[0].cells.empty());
    CHECK(r.summaries.at("LinTS-Ind").checkpoints == std::vector<std::size_t>{30, 60, 90, 120});

    const BenchResult again = replicate(config, 1);
    for (const auto& [name, traces] : r.traces) {
        for (std::size_t rep = 0; rep < traces.size(); ++rep) {
            CHECK(traces[rep].final_regret() == again.traces.at(name)[rep].final_regret());
        }
    }

    config.v_mode = VMode::Oracle;
    const BenchResult oracle = replicate(config, 1);
    CHECK(oracle.tuning.at("SemiGraphTS")[0].cells.size() == 1);

    ExperimentConfig bad = config;
    bad.policies = {"Nope"};
    CHECK_THROWS_AS(replicate(bad), HarnessError);
}

TEST_CASE("parallel_for runs every index and forwards failures") {
    std::vector<int> hit(50, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw HarnessError("boom"); }),
                    HarnessError);
}

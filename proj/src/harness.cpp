#include "semigraph/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace semigraph {

void ExperimentConfig::validate() const {
    if (horizon < 1) throw HarnessError("T must be >= 1");
    if (replications < 1) throw HarnessError("replications must be >= 1");
    if (policies.empty()) throw HarnessError("no policies configured");
    for (const auto& p : policies) {
        if (!is_known_policy(p)) throw HarnessError("unknown policy '" + p + "'");
    }
    const bool tunable = std::any_of(policies.begin(), policies.end(), [](const auto& p) { return is_tunable_policy(p); });
    if (tunable && (grid_v.empty() || grid_lambda.empty())) throw HarnessError("grid must be nonempty");
    if (env.arms == 0 || env.dim % env.arms != 0) throw HarnessError("dim must be a multiple of arms");
    if (mc_samples < 1) throw HarnessError("mc_samples must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw HarnessError("delta must lie in (0, 1)");
    if (checkpoint_count < 1) throw HarnessError("checkpoint_count must be >= 1");
}

RunSeeds RunSeeds::derive(std::uint64_t parent, std::string_view phase, std::uint64_t index) {
    const std::uint64_t base = derive_seed(parent, phase, index);
    return RunSeeds{derive_seed(base, "context"), derive_seed(base, "noise"), derive_seed(base, "arrival"),
                    derive_seed(base, "policy")};
}

Trace run_simulation(const Environment& env, Policy& policy, std::size_t horizon, const RunSeeds& seeds,
                     std::size_t replication) {
    if (const auto shape = policy.shape()) {
        if (shape->first != env.users() || shape->second != env.dim()) {
            throw HarnessError("policy " + policy.name() + " expects " + std::to_string(shape->first) + " users x " +
                               std::to_string(shape->second) + " dims; environment has " +
                               std::to_string(env.users()) + " x " + std::to_string(env.dim()));
        }
    }
    Rng context_rng(seeds.context);
    Rng noise_rng(seeds.noise);
    Rng arrival_rng(seeds.arrival);
    Rng policy_rng(seeds.policy);
    std::uniform_int_distribution<std::size_t> arrival(0, env.users() - 1);

    Trace trace;
    trace.policy = policy.name();
    trace.replication = replication;
    trace.rounds.reserve(horizon);
    double cum = 0.0;
    double ceiling = 0.0;
    for (std::size_t t = 1; t <= horizon; ++t) {
        const auto started = std::chrono::steady_clock::now();
        const std::size_t j = arrival(arrival_rng);
        const ContextSet ctx = sample_contexts(env, t, context_rng);
        const Eigen::VectorXd mu = env.mu(j);
        const Eigen::VectorXd scores = ctx.b * mu;

        RoundRecord rec;
        rec.t = t;
        rec.user = j;
        rec.optimal_arm = argmax_lowest(scores);
        Decision decision;
        try {
            decision = policy.choose(j, ctx, policy_rng);
            if (decision.arm >= ctx.arms()) throw PolicyError("chose arm out of range");
            rec.reward = realize_reward(env, j, decision.arm, ctx, noise_rng);
            policy.observe(j, ctx, decision, rec.reward);
        } catch (const std::exception& e) {
            throw HarnessError(policy.name() + " failed at round " + std::to_string(t) + ": " + e.what());
        }
        rec.arm = decision.arm;
        rec.regret = std::max(0.0, scores(static_cast<Eigen::Index>(rec.optimal_arm)) -
                                       scores(static_cast<Eigen::Index>(rec.arm)));
        cum += rec.regret;
        rec.cum_regret = cum;
        ceiling += scores.maxCoeff() - scores.minCoeff();
        rec.cum_ceiling = ceiling;
        if (decision.psi) {
            rec.psi_num = decision.psi->gamma_norm;
            rec.psi_den = decision.psi->b_norm;
        }
        if (decision.estimate) {
            const auto& est = *decision.estimate;
            const Eigen::VectorXd err = est.mu_hat - mu;
            double worst = 0.0;
            for (Eigen::Index i = 0; i < ctx.b.rows(); ++i) {
                const double num = std::abs((ctx.b.row(i).transpose() - est.b_bar).dot(err));
                const double s = est.s_centered(i);
                const double ratio = s > 0.0 ? num / s : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
                worst = std::max(worst, ratio);
            }
            rec.coverage_ratio = worst;
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        trace.rounds.push_back(std::move(rec));
    }
    return trace;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

namespace {

std::vector<GridCell> grid_cells(std::vector<double> grid_v, std::vector<double> grid_lambda) {
    if (grid_v.empty() || grid_lambda.empty()) throw HarnessError("grid must be nonempty");
    std::sort(grid_v.begin(), grid_v.end());
    std::sort(grid_lambda.begin(), grid_lambda.end());
    std::vector<GridCell> cells;
    for (double v : grid_v) {
        for (double lambda : grid_lambda) cells.push_back(GridCell{v, lambda, 0.0});
    }
    return cells;
}

std::size_t best_cell(const std::vector<GridCell>& cells) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cells.size(); ++c) {
        if (cells[c].regret < cells[best].regret) best = c;
    }
    return best;
}

double run_cell(const PolicyFactory& factory, const GridCell& cell, const Environment& env, std::size_t t0,
                std::uint64_t seed, std::size_t index) {
    if (t0 == 0) return 0.0;
    auto policy = factory(cell.v, cell.lambda);
    return run_simulation(env, *policy, t0, RunSeeds::derive(seed, "tune", index)).final_regret();
}

}  // namespace

GridResult grid_search(std::vector<double> grid_v, std::vector<double> grid_lambda, std::size_t t0,
                       const PolicyFactory& factory, const Environment& env, std::uint64_t seed, std::size_t jobs) {
    GridResult out;
    out.cells = grid_cells(std::move(grid_v), std::move(grid_lambda));
    parallel_for(out.cells.size(), jobs, [&](std::size_t c) {
        out.cells[c].regret = run_cell(factory, out.cells[c], env, t0, seed, c);
    });
    const auto& best = out.cells[best_cell(out.cells)];
    out.best_v = best.v;
    out.best_lambda = best.lambda;
    return out;
}

std::vector<std::optional<double>> psi_diagnostic(const Trace& trace, std::size_t users) {
    std::vector<double> num(users, 0.0);
    std::vector<double> den(users, 0.0);
    for (const auto& r : trace.rounds) {
        if (r.user >= users) throw HarnessError("psi_diagnostic: user index out of range");
        if (!r.psi_num || !r.psi_den) continue;
        num[r.user] += *r.psi_num;
        den[r.user] += *r.psi_den;
    }
    std::vector<std::optional<double>> out(users);
    for (std::size_t j = 0; j < users; ++j) {
        if (den[j] > 0.0) out[j] = num[j] / den[j];
    }
    return out;
}

CoverageResult coverage_check(const Trace& trace, const Environment& env, double delta, double lambda) {
    const auto deltas = compute_deltas(env.laplacian, env.mus);
    CoverageResult out;
    for (const auto& r : trace.rounds) {
        if (!r.coverage_ratio) continue;
        const double alpha = confidence_radius(env.noise_sigma, env.dim(), r.t, delta, lambda, deltas[r.user].norm);
        ++out.rounds_checked;
        if (*r.coverage_ratio > alpha) ++out.violations;
    }
    return out;
}

std::vector<double> oracle_v(const Environment& env, std::size_t horizon, double delta, double lambda) {
    const auto deltas = compute_deltas(env.laplacian, env.mus);
    std::vector<double> v(env.users());
    for (std::size_t j = 0; j < env.users(); ++j) {
        v[j] = v_parameter(env.noise_sigma, env.dim(), horizon, delta, lambda, deltas[j].norm);
    }
    return v;
}

double Summary::mean(std::size_t c) const {
    double s = 0.0;
    for (const auto& row : values) s += row.at(c);
    return s / static_cast<double>(values.size());
}

double Summary::stddev(std::size_t c) const {
    if (values.size() < 2) return 0.0;
    const double m = mean(c);
    double ss = 0.0;
    for (const auto& row : values) ss += (row.at(c) - m) * (row.at(c) - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double Summary::stderr_(std::size_t c) const {
    return stddev(c) / std::sqrt(static_cast<double>(values.size()));
}

std::vector<std::size_t> checkpoint_schedule(std::size_t horizon, std::size_t count) {
    const std::size_t step = std::max<std::size_t>(1, horizon / std::max<std::size_t>(1, count));
    std::vector<std::size_t> out;
    for (std::size_t t = step; t <= horizon; t += step) out.push_back(t);
    if (out.empty() || out.back() != horizon) out.push_back(horizon);
    return out;
}

Summary summarize(const std::string& policy, const std::vector<Trace>& traces,
                  const std::vector<std::size_t>& checkpoints) {
    Summary s;
    s.policy = policy;
    s.checkpoints = checkpoints;
    for (const auto& trace : traces) {
        std::vector<double> row;
        row.reserve(checkpoints.size());
        for (std::size_t t : checkpoints) {
            if (t == 0 || t > trace.rounds.size()) throw HarnessError("checkpoint beyond trace length");
            row.push_back(trace.rounds[t - 1].cum_regret);
        }
        s.values.push_back(std::move(row));
    }
    return s;
}

PolicyConfig policy_config_for(const ExperimentConfig& config, std::string_view policy, const Environment& env,
                               double v, double lambda) {
    PolicyConfig pc;
    pc.v = v;
    pc.lambda = lambda;
    pc.mc_samples = config.mc_samples;
    pc.delta = config.delta;
    pc.R = env.noise_sigma;
    if (config.v_mode == VMode::Oracle && policy == "SemiGraphTS") {
        pc.per_user_v = oracle_v(env, config.horizon, config.delta, lambda);
    }
    return pc;
}

BenchResult replicate(const ExperimentConfig& config, std::size_t jobs) {
    config.validate();
    BenchResult out;
    const std::size_t reps = config.replications;
    for (std::size_t r = 0; r < reps; ++r) {
        const std::uint64_t rep_seed = config.seed ^ static_cast<std::uint64_t>(r);
        out.replication_seeds.push_back(rep_seed);
        out.environments.push_back(make_environment(config.env, derive_seed(rep_seed, "env")));
    }

    struct TuneJob {
        std::size_t rep;
        std::size_t policy;
        std::size_t cell;
    };
    const auto& names = config.policies;
    std::vector<std::vector<std::vector<GridCell>>> cells(reps, std::vector<std::vector<GridCell>>(names.size()));
    std::vector<TuneJob> tune_jobs;
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t p = 0; p < names.size(); ++p) {
            if (!is_tunable_policy(names[p])) continue;
            const bool oracle = config.v_mode == VMode::Oracle && names[p] == "SemiGraphTS";
            cells[r][p] = grid_cells(oracle ? std::vector<double>{0.0} : config.grid_v, config.grid_lambda);
            for (std::size_t c = 0; c < cells[r][p].size(); ++c) tune_jobs.push_back(TuneJob{r, p, c});
        }
    }
    parallel_for(tune_jobs.size(), jobs, [&](std::size_t i) {
        const auto& job = tune_jobs[i];
        const Environment& env = out.environments[job.rep];
        const std::string& name = names[job.policy];
        PolicyFactory factory = [&](double v, double lambda) {
            return make_policy(name, env, policy_config_for(config, name, env, v, lambda));
        };
        auto& cell = cells[job.rep][job.policy][job.cell];
        cell.regret = run_cell(factory, cell, env, config.t0, out.replication_seeds[job.rep], job.cell);
    });

    std::vector<std::vector<TunedParams>> tuned(reps, std::vector<TunedParams>(names.size()));
    for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t p = 0; p < names.size(); ++p) {
            if (cells[r][p].empty()) continue;
            const auto& best = cells[r][p][best_cell(cells[r][p])];
            tuned[r][p] = TunedParams{best.v, best.lambda, cells[r][p]};
        }
    }

    std::vector<Trace> eval(reps * names.size());
    parallel_for(eval.size(), jobs, [&](std::size_t i) {
        const std::size_t r = i / names.size();
        const std::size_t p = i % names.size();
        const Environment& env = out.environments[r];
        const auto& params = tuned[r][p];
        auto policy = make_policy(names[p], env, policy_config_for(config, names[p], env, params.v, params.lambda));
        eval[i] = run_simulation(env, *policy, config.horizon, RunSeeds::derive(out.replication_seeds[r], "eval"), r);
    });

    const auto checkpoints = checkpoint_schedule(config.horizon, config.checkpoint_count);
    for (std::size_t p = 0; p < names.size(); ++p) {
        auto& traces = out.traces[names[p]];
        auto& tuning = out.tuning[names[p]];
        for (std::size_t r = 0; r < reps; ++r) {
            traces.push_back(std::move(eval[r * names.size() + p]));
            tuning.push_back(tuned[r][p]);
        }
        out.summaries.emplace(names[p], summarize(names[p], traces, checkpoints));
    }
    return out;
}

}  // namespace semigraph

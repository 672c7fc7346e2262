// semigraph: generate environments, run and benchmark bandit policies, verify
// the matrix inequalities, and compute diagnostics from stored traces.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semigraph/config.hpp"
#include "semigraph/environment.hpp"
#include "semigraph/graph.hpp"
#include "semigraph/harness.hpp"
#include "semigraph/policies.hpp"
#include "semigraph/report.hpp"
#include "semigraph/verify.hpp"

namespace fs = std::filesystem;
using namespace semigraph;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kOutEnv = "SEMIGRAPH_OUT";

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::string> policies;
    std::vector<std::string> traces;
    std::size_t users = 0;
    std::size_t trials = 1000;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

fs::path output_dir(const Options& opt, const std::string& fallback) {
    if (!opt.out.empty()) return opt.out;
    if (const char* root = std::getenv(kOutEnv); root && *root) return fs::path(root) / fallback;
    return fs::path("semigraph-out") / fallback;
}

// Accepts either a plain config or a manifest written by a previous run.
ExperimentConfig resolve_config(const Options& opt) {
    ExperimentConfig config;
    if (!opt.config.empty()) {
        std::ifstream in(opt.config);
        if (!in) throw ConfigError("cannot open config file " + opt.config);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(opt.config + ": " + e.what());
        }
        config = config_from_json(doc.contains("config") && doc.contains("tool") ? doc.at("config") : doc);
    }
    if (opt.seed_set) config.seed = opt.seed;
    if (!opt.policies.empty()) config.policies = opt.policies;
    try {
        config.validate();
    } catch (const HarnessError& e) {
        throw ConfigError(e.what());
    }
    return config;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ReportError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ReportError("write failed: " + path.string());
}

nlohmann::json manifest(const std::string& subcommand, const ExperimentConfig& config,
                        const std::vector<std::uint64_t>& replication_seeds) {
    nlohmann::json doc;
    doc["tool"] = "semigraph";
    doc["version"] = kVersion;
    doc["subcommand"] = subcommand;
    doc["config"] = config_to_json(config);
    nlohmann::json seeds = nlohmann::json::array();
    for (std::uint64_t s : replication_seeds) {
        seeds.push_back({{"replication", s},
                         {"env", derive_seed(s, "env")},
                         {"eval", derive_seed(s, "eval")}});
    }
    doc["resolved_seeds"] = std::move(seeds);
    return doc;
}

void write_environment_files(const fs::path& dir, const Environment& env, const std::string& stem) {
    std::ostringstream snapshot;
    write_environment(snapshot, env);
    write_text(dir / (stem + ".json"), snapshot.str());
    std::ostringstream edges;
    write_edge_list(edges, env.graph);
    write_text(dir / (stem + ".edges"), edges.str());
}

void print_psi(const Trace& trace, std::size_t users) {
    const auto psi = psi_diagnostic(trace, users);
    std::cout << "  psi per user:";
    for (std::size_t j = 0; j < psi.size(); ++j) {
        std::cout << ' ' << j + 1 << '=';
        if (psi[j]) {
            std::cout << std::setprecision(6) << *psi[j];
        } else {
            std::cout << "absent";
        }
    }
    std::cout << '\n';
}

int cmd_gen_env(const Options& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path dir = output_dir(opt, "env");
    fs::create_directories(dir);
    const Environment env = make_environment(config.env, derive_seed(config.seed, "env"));
    write_environment_files(dir, env, "env");
    write_text(dir / "manifest.json", manifest("gen-env", config, {config.seed}).dump(2) + "\n");
    const auto deltas = compute_deltas(env.laplacian, env.mus);
    double mean_delta = 0.0;
    for (const auto& d : deltas) mean_delta += d.norm / static_cast<double>(deltas.size());
    std::cout << "environment: " << env.users() << " users, " << env.graph.edge_count() << " edges, " << env.arms
              << " arms, d=" << env.dim() << ", mean |Delta_j|=" << mean_delta << "\nwrote " << dir.string() << '\n';
    return 0;
}

int cmd_run(const Options& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path dir = output_dir(opt, "run");
    fs::create_directories(dir / "traces");
    const Environment env = make_environment(config.env, derive_seed(config.seed, "env"));
    write_environment_files(dir, env, "env");

    std::vector<Trace> traces(config.policies.size());
    parallel_for(traces.size(), opt.jobs, [&](std::size_t p) {
        const auto& name = config.policies[p];
        auto policy = make_policy(name, env, policy_config_for(config, name, env, config.fixed_v, config.fixed_lambda));
        traces[p] = run_simulation(env, *policy, config.horizon, RunSeeds::derive(config.seed, "eval"));
    });

    const auto checkpoints = checkpoint_schedule(config.horizon, config.checkpoint_count);
    std::vector<Summary> summaries;
    for (const auto& trace : traces) {
        write_trace_csv(trace, dir / "traces" / (trace.policy + ".csv"));
        summaries.push_back(summarize(trace.policy, {trace}, checkpoints));
    }
    std::vector<std::optional<Summary>> normalized(summaries.size());
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        if (summaries[p].policy != "Random") continue;
        for (std::size_t q = 0; q < summaries.size(); ++q) normalized[q] = relative_to_random(summaries[q], summaries[p]).summary;
    }
    std::ostringstream summary_csv;
    write_summary_csv(summary_csv, summaries, normalized);
    write_text(dir / "summary.csv", summary_csv.str());
    write_text(dir / "manifest.json", manifest("run", config, {config.seed}).dump(2) + "\n");

    std::cout << "policy            final cumulative regret\n";
    for (const auto& trace : traces) {
        std::cout << std::left << std::setw(18) << trace.policy << trace.final_regret() << '\n';
        if (trace.policy == "SemiGraphTS") print_psi(trace, env.users());
    }
    std::cout << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_bench(const Options& opt) {
    const ExperimentConfig config = resolve_config(opt);
    const fs::path dir = output_dir(opt, "bench");
    fs::create_directories(dir / "traces");
    const BenchResult result = replicate(config, opt.jobs);

    for (std::size_t r = 0; r < result.environments.size(); ++r) {
        write_environment_files(dir, result.environments[r], "env_rep" + std::to_string(r));
    }
    std::ostringstream tuning;
    tuning << "policy,replication,v,lambda,tuning_regret,selected\n";
    std::vector<Summary> summaries;
    for (const auto& name : config.policies) {
        const auto& traces = result.traces.at(name);
        for (const auto& trace : traces) {
            write_trace_csv(trace, dir / "traces" / (name + "_rep" + std::to_string(trace.replication) + ".csv"));
        }
        const auto& tuned = result.tuning.at(name);
        for (std::size_t r = 0; r < tuned.size(); ++r) {
            for (const auto& cell : tuned[r].cells) {
                const bool selected = cell.v == tuned[r].v && cell.lambda == tuned[r].lambda;
                tuning << csv_field(name) << ',' << r << ',' << format_double(cell.v) << ','
                       << format_double(cell.lambda) << ',' << format_double(cell.regret) << ','
                       << (selected ? "true" : "false") << '\n';
            }
        }
        summaries.push_back(result.summaries.at(name));
    }
    write_text(dir / "tuning.csv", tuning.str());

    const auto random = result.summaries.find("Random");
    std::vector<std::optional<Summary>> normalized(summaries.size());
    std::vector<Summary> finals;
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        if (random != result.summaries.end()) {
            normalized[p] = relative_to_random(summaries[p], random->second).summary;
            finals.push_back(*normalized[p]);
        } else {
            finals.push_back(summaries[p]);
        }
    }
    std::ostringstream summary_csv;
    write_summary_csv(summary_csv, summaries, normalized);
    write_text(dir / "summary.csv", summary_csv.str());

    const FinalTable table = summarize_final(finals, random != result.summaries.end());
    std::ostringstream final_csv, pairwise_csv;
    write_final_csv(final_csv, table);
    write_pairwise_csv(pairwise_csv, table);
    write_text(dir / "final.csv", final_csv.str());
    write_text(dir / "pairwise.csv", pairwise_csv.str());
    write_text(dir / "manifest.json", manifest("bench", config, result.replication_seeds).dump(2) + "\n");

    std::cout << (table.rows.front().normalized ? "final regret relative to Random\n" : "final cumulative regret\n");
    for (const auto& row : table.rows) {
        std::cout << std::left << std::setw(18) << row.policy << row.mean << " +- " << row.half_width << '\n';
    }
    std::cout << "wrote " << dir.string() << '\n';
    return 0;
}

int cmd_verify(const Options& opt) {
    const std::uint64_t seed = opt.seed_set ? opt.seed : 1;
    const auto results = run_verify_suite(seed, opt.trials);
    std::size_t passed = 0;
    for (const auto& r : results) {
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.trials - r.failures << '/' << r.trials
                  << " ok, worst=" << r.worst << " (" << std::fixed << std::setprecision(2) << r.seconds << "s)\n"
                  << std::defaultfloat << std::setprecision(6);
        passed += r.passed() ? 1 : 0;
    }
    std::cout << passed << '/' << results.size() << " checks passed\n";
    return passed == results.size() ? 0 : 1;
}

int cmd_diag(const Options& opt) {
    if (opt.traces.empty()) throw UsageError("diag needs at least one trace CSV");
    for (const auto& path : opt.traces) {
        for (const auto& trace : read_trace_csv(fs::path(path))) {
            std::size_t users = opt.users;
            for (const auto& r : trace.rounds) users = std::max(users, r.user + 1);
            std::cout << path << " [" << trace.policy << ", replication " << trace.replication
                      << "]: rounds=" << trace.rounds.size() << " final cumulative regret=" << trace.final_regret()
                      << '\n';
            const bool has_psi = std::any_of(trace.rounds.begin(), trace.rounds.end(),
                                             [](const RoundRecord& r) { return r.psi_num.has_value(); });
            if (has_psi) {
                print_psi(trace, users);
            } else {
                std::cout << "  psi: absent (policy has no exploration Gram matrix)\n";
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"semigraph: graph-regularized semi-parametric bandit simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment config (JSON) or a manifest.json to replay");
        sub->add_option("--out", opt.out, std::string("output directory (default $") + kOutEnv + "/<subcommand>)");
        sub->add_option("--seed", opt.seed, "master seed override")->each([&](const std::string&) { opt.seed_set = true; });
        sub->add_option("--jobs", opt.jobs, "maximum parallel runs")->check(CLI::PositiveNumber);
        sub->add_option("--policies", opt.policies, "comma-separated policy list")->delimiter(',');
    };

    auto* gen = app.add_subcommand("gen-env", "generate and save a synthetic environment");
    add_common(gen);
    auto* run = app.add_subcommand("run", "one replication with fixed hyperparameters");
    add_common(run);
    auto* bench = app.add_subcommand("bench", "grid-search tuning, evaluation, replication and summaries");
    add_common(bench);
    auto* verify = app.add_subcommand("verify", "randomized checks of the matrix inequalities and invariants");
    verify->add_option("--seed", opt.seed, "seed")->each([&](const std::string&) { opt.seed_set = true; });
    verify->add_option("--trials", opt.trials, "trials per inequality")->check(CLI::PositiveNumber);
    auto* diag = app.add_subcommand("diag", "diagnostics (final regret, per-user psi) from trace CSVs");
    diag->add_option("traces", opt.traces, "trace CSV files")->required();
    diag->add_option("--users", opt.users, "number of users (default: inferred)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const char* module = "cli";
    try {
        if (*gen) return cmd_gen_env(opt);
        if (*run) return cmd_run(opt);
        if (*bench) return cmd_bench(opt);
        if (*verify) return cmd_verify(opt);
        if (*diag) return cmd_diag(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error [config]: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error [cli]: " << e.what() << '\n';
        return 2;
    } catch (const GraphError& e) {
        module = "graph";
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    } catch (const EnvironmentError& e) {
        module = "environment";
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    } catch (const PolicyError& e) {
        module = "policies";
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    } catch (const HarnessError& e) {
        module = "harness";
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    } catch (const ReportError& e) {
        module = "report";
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error [" << module << "]: " << e.what() << '\n';
    }
    return 1;
}

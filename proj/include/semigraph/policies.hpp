#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "semigraph/environment.hpp"
#include "semigraph/graph.hpp"
#include "semigraph/rng.hpp"

namespace semigraph {

class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Per-user sufficient statistics for the centered semi-parametric estimator.
//   B      = ridge I + sum_tau (X X^T + E[X X^T | F])
//   y      = sum_tau 2 X r
//   mu_bar = B^{-1} y
// The Cholesky factor and B^{-1} are cached and refreshed on every update.
struct UserState {
    Eigen::MatrixXd B;
    Eigen::VectorXd y;
    Eigen::VectorXd mu_bar;
    Eigen::MatrixXd B_inv;
    Eigen::LLT<Eigen::MatrixXd> chol;

    static UserState initial(std::size_t dim, double ridge);
    void refresh();
    std::size_t dim() const { return static_cast<std::size_t>(y.size()); }
};

struct PolicyConfig {
    double v = 0.1;        // exploration scale (UCB width for GraphUCB)
    double lambda = 1.0;   // graph strength / ridge
    std::size_t mc_samples = 1000;
    double delta = 0.1;
    double R = 0.1;
    // When non-empty, user j explores with per_user_v[j] instead of v.
    std::vector<double> per_user_v;

    void validate() const;
};

struct ArmProbs {
    Eigen::VectorXd pi_hat;
    Eigen::VectorXd b_bar;
    std::size_t M_used = 0;
};

struct SampledParam {
    Eigen::VectorXd mu_tilde;
    Eigen::VectorXd mu_hat;
    Eigen::MatrixXd Gamma;
};

// Cholesky of a symmetric positive-definite matrix. On failure retries once
// with 1e-10 I added and prints a warning; throws PolicyError if that fails too.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m, std::string_view what);

// mu_hat_j = mu_bar_j - lambda B_j^{-1} sum_{k != j} l_jk mu_bar_k
Eigen::VectorXd graph_adjusted_estimate(std::span<const UserState> states, const Laplacian& L, double lambda,
                                        std::size_t j);

// Gamma_j = B_j + lambda^2 sum_{k != j} l_jk^2 B_k^{-1}
Eigen::MatrixXd exploration_gram(std::span<const UserState> states, const Laplacian& L, double lambda, std::size_t j);

// Theory-level exploration scale:
//   (4R + 12) sqrt(d log((24 T^4 / delta)(1 + 1/lambda))) + sqrt(lambda)(1 + |Delta_j|)
double v_parameter(double R, std::size_t d, std::size_t T, double delta, double lambda, double delta_norm);

// Radius of the estimation-error confidence event at round t:
//   (4R + 12) sqrt(2 d log((24 t^4 / delta)(1 + 1/lambda))) + sqrt(2 lambda)(1 + |Delta_j|)
double confidence_radius(double R, std::size_t d, std::size_t t, double delta, double lambda, double delta_norm);

// One draw from N(mu_hat, v^2 Gamma^{-1}).
SampledParam ts_sample(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Gamma, double v, Rng& rng);

// Empirical argmax frequencies over M draws from N(mu_hat, v^2 Gamma^{-1}).
// Ties inside a draw go to the lowest index.
ArmProbs estimate_arm_probs_mc(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Gamma, double v,
                               const ContextSet& ctx, std::size_t M, Rng& rng);

// Centered rank-one plus conditional-covariance update with X = b_a - b_bar.
void update_state(UserState& state, const ContextSet& ctx, const ArmProbs& probs, std::size_t arm, double reward);

struct RoundResult {
    std::size_t arm = 0;
    ArmProbs probs;
    SampledParam sampled;
    double x_norm_gamma = 0.0;  // |X_t|_{Gamma^{-1}}
    double x_norm_b = 0.0;      // |X_t|_{B^{-1}}
    Eigen::VectorXd s_centered;  // |b_i - b_bar|_{Gamma^{-1}} per arm
};

// Monte-Carlo SemiGraphTS round for user j: estimate, exploration Gram, M draws,
// arm ~ Multinom(pi_hat). The arm is the argmax of a uniformly chosen draw,
// which has exactly the distribution pi_hat; that draw is reported as mu_tilde.
RoundResult semigraphts_round(std::span<const UserState> states, const Laplacian& L, const PolicyConfig& config,
                              double v, std::size_t j, const ContextSet& ctx, Rng& rng, bool use_graph = true);

// ---------------------------------------------------------------------------
// Policy interface used by the harness.

struct PsiTerms {
    double gamma_norm = 0.0;
    double b_norm = 0.0;
};

// Estimator state exposed for the coverage diagnostic.
struct EstimateSnapshot {
    Eigen::VectorXd mu_hat;
    Eigen::VectorXd s_centered;
    Eigen::VectorXd b_bar;
};

struct Decision {
    std::size_t arm = 0;
    std::optional<PsiTerms> psi;
    std::optional<EstimateSnapshot> estimate;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) = 0;
    virtual void observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) = 0;
    // Empty when the policy is not tied to a problem size.
    virtual std::optional<std::pair<std::size_t, std::size_t>> shape() const { return std::nullopt; }
};

enum class Coupling { Graph, Independent, Single };

// SemiGraphTS (Graph), SemiTS-Ind (Independent), SemiTS-Sin (Single).
class SemiParametricTS final : public Policy {
public:
    SemiParametricTS(Coupling coupling, Laplacian L, std::size_t dim, PolicyConfig config);

    std::string name() const override;
    Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) override;
    void observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) override;

    std::optional<std::pair<std::size_t, std::size_t>> shape() const override {
        return std::pair{laplacian_.size(), states_.front().dim()};
    }
    const std::vector<UserState>& states() const { return states_; }
    const RoundResult& last_round() const { return last_; }

private:
    std::size_t slot(std::size_t user) const { return coupling_ == Coupling::Single ? 0 : user; }

    Coupling coupling_;
    Laplacian laplacian_;
    PolicyConfig config_;
    std::vector<UserState> states_;
    RoundResult last_;
};

// Linear Thompson sampling with ridge prior: B = lambda I + sum b b^T, y = sum b r,
// mu ~ N(B^{-1} y, v^2 B^{-1}).
class LinearTS final : public Policy {
public:
    LinearTS(bool shared, std::size_t users, std::size_t dim, PolicyConfig config);

    std::string name() const override { return shared_ ? "LinTS-Sin" : "LinTS-Ind"; }
    Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) override;
    void observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) override;
    std::optional<std::pair<std::size_t, std::size_t>> shape() const override {
        if (shared_) return std::nullopt;
        return std::pair{states_.size(), static_cast<std::size_t>(states_.front().y.size())};
    }

private:
    struct Ridge {
        Eigen::MatrixXd B;
        Eigen::VectorXd y;
        Eigen::LLT<Eigen::MatrixXd> chol;
    };
    bool shared_;
    PolicyConfig config_;
    std::vector<Ridge> states_;
};

// Laplacian-adjusted local ridge estimator with a UCB width:
//   mu_hat_j = mu_bar_j - lambda C_j^{-1} sum_{k != j} l_jk mu_bar_k,
//   arm = argmax b_i^T mu_hat_j + beta |b_i|_{C_j^{-1}}, beta = config.v.
// C_j starts at lambda l_jj I, which carries the k = j term of the Laplacian sum.
class GraphUCB final : public Policy {
public:
    GraphUCB(Laplacian L, std::size_t dim, PolicyConfig config);

    std::string name() const override { return "GraphUCB"; }
    Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) override;
    void observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) override;
    std::optional<std::pair<std::size_t, std::size_t>> shape() const override {
        return std::pair{states_.size(), static_cast<std::size_t>(states_.front().y.size())};
    }

    Eigen::VectorXd estimate(std::size_t user) const;

private:
    struct Ridge {
        Eigen::MatrixXd C;
        Eigen::MatrixXd C_inv;
        Eigen::VectorXd y;
        Eigen::VectorXd mu_bar;
    };
    Laplacian laplacian_;
    PolicyConfig config_;
    std::vector<Ridge> states_;
};

class RandomPolicy final : public Policy {
public:
    std::string name() const override { return "Random"; }
    Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) override;
    void observe(std::size_t, const ContextSet&, const Decision&, double) override {}
};

std::size_t random_round(const ContextSet& ctx, Rng& rng);

// Plays the true optimal arm. Needs environment truth; for sanity checks only.
class OraclePolicy final : public Policy {
public:
    explicit OraclePolicy(Eigen::MatrixXd mus) : mus_(std::move(mus)) {}
    std::string name() const override { return "Oracle"; }
    Decision choose(std::size_t user, const ContextSet& ctx, Rng& rng) override;
    void observe(std::size_t, const ContextSet&, const Decision&, double) override {}

private:
    Eigen::MatrixXd mus_;
};

// Known names: SemiGraphTS, SemiTS-Ind, SemiTS-Sin, LinTS-Ind, LinTS-Sin,
// GraphUCB, Random, Oracle.
std::unique_ptr<Policy> make_policy(std::string_view name, const Environment& env, const PolicyConfig& config);
bool is_known_policy(std::string_view name);
bool is_tunable_policy(std::string_view name);
const std::vector<std::string>& known_policies();

}  // namespace semigraph

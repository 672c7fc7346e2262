#include "semigraph/policies.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace semigraph {

namespace {

void fill_normal(Eigen::MatrixXd& z, Rng& rng) {
    NormalDist normal;
    double* p = z.data();
    for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = normal(rng);
}

// Argmax of each column of the N x M score matrix, ties to the lowest arm.
std::vector<std::size_t> column_winners(const Eigen::MatrixXd& scores) {
    std::vector<std::size_t> winners(static_cast<std::size_t>(scores.cols()));
    for (Eigen::Index m = 0; m < scores.cols(); ++m) winners[static_cast<std::size_t>(m)] = argmax_lowest(scores.col(m));
    return winners;
}

struct McResult {
    ArmProbs probs;
    std::vector<std::size_t> winners;
    Eigen::MatrixXd draws;     // d x M standard normals
    Eigen::MatrixXd whitened;  // L^{-1} b^T, d x N
};

// M draws of b^T mu_tilde with mu_tilde = mu_hat + v L^{-T} z, Gamma = L L^T.
McResult monte_carlo(const Eigen::LLT<Eigen::MatrixXd>& chol, const Eigen::VectorXd& mu_hat, double v,
                     const ContextSet& ctx, std::size_t M, Rng& rng) {
    if (M == 0) throw PolicyError("Monte-Carlo sample count must be >= 1");
    const auto d = static_cast<Eigen::Index>(mu_hat.size());
    McResult out;
    out.whitened = chol.matrixL().solve(ctx.b.transpose());
    out.draws.resize(d, static_cast<Eigen::Index>(M));
    fill_normal(out.draws, rng);
    Eigen::MatrixXd scores = v * (out.whitened.transpose() * out.draws);
    scores.colwise() += ctx.b * mu_hat;
    out.winners = column_winners(scores);

    const auto N = static_cast<Eigen::Index>(ctx.arms());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(N);
    for (std::size_t w : out.winners) counts(static_cast<Eigen::Index>(w)) += 1.0;
    out.probs.pi_hat = counts / static_cast<double>(M);
    out.probs.b_bar = ctx.b.transpose() * out.probs.pi_hat;
    out.probs.M_used = M;
    return out;
}

double effective_v(const PolicyConfig& config, std::size_t user) {
    return config.per_user_v.empty() ? config.v : config.per_user_v.at(user);
}

}  // namespace

UserState UserState::initial(std::size_t dim, double ridge) {
    if (!(ridge > 0.0)) throw PolicyError("ridge term must be > 0");
    const auto d = static_cast<Eigen::Index>(dim);
    UserState s;
    s.B = ridge * Eigen::MatrixXd::Identity(d, d);
    s.y = Eigen::VectorXd::Zero(d);
    s.refresh();
    return s;
}

void UserState::refresh() {
    chol = factor_spd(B, "B");
    mu_bar = chol.solve(y);
    B_inv = chol.solve(Eigen::MatrixXd::Identity(B.rows(), B.cols()));
}

void PolicyConfig::validate() const {
    if (!(v >= 0.0)) throw PolicyError("v must be >= 0");
    if (!(lambda > 0.0)) throw PolicyError("lambda must be > 0");
    if (mc_samples < 1) throw PolicyError("mc_samples must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw PolicyError("delta must lie in (0, 1)");
    if (!(R >= 0.0)) throw PolicyError("R must be >= 0");
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m, std::string_view what) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt;
    std::cerr << "warning: " << what << " is numerically singular; adding 1e-10 I jitter\n";
    llt.compute(m + 1e-10 * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    if (llt.info() != Eigen::Success) throw PolicyError(std::string(what) + ": Cholesky factorization failed");
    return llt;
}

Eigen::VectorXd graph_adjusted_estimate(std::span<const UserState> states, const Laplacian& L, double lambda,
                                        std::size_t j) {
    const UserState& self = states[j];
    if (L.neighbors(j).empty()) return self.mu_bar;
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(self.mu_bar.size());
    for (std::size_t k : L.neighbors(j)) pull += L(j, k) * states[k].mu_bar;
    return self.mu_bar - lambda * self.chol.solve(pull);
}

Eigen::MatrixXd exploration_gram(std::span<const UserState> states, const Laplacian& L, double lambda,
                                 std::size_t j) {
    Eigen::MatrixXd gamma = states[j].B;
    for (std::size_t k : L.neighbors(j)) {
        const double l = L(j, k);
        gamma += (lambda * lambda * l * l) * states[k].B_inv;
    }
    return gamma;
}

double v_parameter(double R, std::size_t d, std::size_t T, double delta, double lambda, double delta_norm) {
    const double log_term = std::log(24.0) + 4.0 * std::log(static_cast<double>(T)) - std::log(delta) +
                            std::log1p(1.0 / lambda);
    return (4.0 * R + 12.0) * std::sqrt(static_cast<double>(d) * log_term) + std::sqrt(lambda) * (1.0 + delta_norm);
}

double confidence_radius(double R, std::size_t d, std::size_t t, double delta, double lambda, double delta_norm) {
    const double log_term = std::log(24.0) + 4.0 * std::log(static_cast<double>(t)) - std::log(delta) +
                            std::log1p(1.0 / lambda);
    return (4.0 * R + 12.0) * std::sqrt(2.0 * static_cast<double>(d) * log_term) +
           std::sqrt(2.0 * lambda) * (1.0 + delta_norm);
}

SampledParam ts_sample(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Gamma, double v, Rng& rng) {
    const auto chol = factor_spd(Gamma, "Gamma");
    Eigen::MatrixXd z(mu_hat.size(), 1);
    fill_normal(z, rng);
    SampledParam out;
    out.mu_hat = mu_hat;
    out.Gamma = Gamma;
    out.mu_tilde = mu_hat + v * chol.matrixU().solve(z.col(0));
    return out;
}

ArmProbs estimate_arm_probs_mc(const Eigen::VectorXd& mu_hat, const Eigen::MatrixXd& Gamma, double v,
                               const ContextSet& ctx, std::size_t M, Rng& rng) {
    return monte_carlo(factor_spd(Gamma, "Gamma"), mu_hat, v, ctx, M, rng).probs;
}

void update_state(UserState& state, const ContextSet& ctx, const ArmProbs& probs, std::size_t arm, double reward) {
    if (arm >= ctx.arms()) throw PolicyError("update_state: arm index out of range");
    const Eigen::VectorXd x = ctx.b.row(static_cast<Eigen::Index>(arm)).transpose() - probs.b_bar;
    const Eigen::MatrixXd centered = ctx.b.rowwise() - probs.b_bar.transpose();
    const Eigen::MatrixXd weighted = centered.array().colwise() * probs.pi_hat.array();
    state.B += x * x.transpose() + weighted.transpose() * centered;
    state.B = 0.5 * (state.B + state.B.transpose()).eval();
    state.y += 2.0 * reward * x;
    state.refresh();
}

RoundResult semigraphts_round(std::span<const UserState> states, const Laplacian& L, const PolicyConfig& config,
                              double v, std::size_t j, const ContextSet& ctx, Rng& rng, bool use_graph) {
    RoundResult out;
    const UserState& self = states[j];
    out.sampled.mu_hat = use_graph ? graph_adjusted_estimate(states, L, config.lambda, j) : self.mu_bar;
    out.sampled.Gamma = use_graph ? exploration_gram(states, L, config.lambda, j) : self.B;
    const auto chol = factor_spd(out.sampled.Gamma, "Gamma");

    McResult mc = monte_carlo(chol, out.sampled.mu_hat, v, ctx, config.mc_samples, rng);
    std::uniform_int_distribution<std::size_t> pick(0, config.mc_samples - 1);
    const std::size_t m = pick(rng);
    out.arm = mc.winners[m];
    out.sampled.mu_tilde = out.sampled.mu_hat + v * chol.matrixU().solve(mc.draws.col(static_cast<Eigen::Index>(m)));
    out.probs = std::move(mc.probs);

    const Eigen::VectorXd x = ctx.b.row(static_cast<Eigen::Index>(out.arm)).transpose() - out.probs.b_bar;
    out.x_norm_gamma = chol.matrixL().solve(x).norm();
    out.x_norm_b = self.chol.matrixL().solve(x).norm();
    const Eigen::VectorXd whitened_bar = chol.matrixL().solve(out.probs.b_bar);
    out.s_centered = (mc.whitened.colwise() - whitened_bar).colwise().norm().transpose();
    return out;
}

// ---------------------------------------------------------------------------

SemiParametricTS::SemiParametricTS(Coupling coupling, Laplacian L, std::size_t dim, PolicyConfig config)
    : coupling_(coupling), laplacian_(std::move(L)), config_(std::move(config)) {
    config_.validate();
    const std::size_t slots = coupling_ == Coupling::Single ? 1 : laplacian_.size();
    states_.reserve(slots);
    for (std::size_t k = 0; k < slots; ++k) {
        const double l_kk = coupling_ == Coupling::Single ? 1.0 : laplacian_(k, k);
        states_.push_back(UserState::initial(dim, config_.lambda * l_kk));
    }
}

std::string SemiParametricTS::name() const {
    switch (coupling_) {
        case Coupling::Graph: return "SemiGraphTS";
        case Coupling::Independent: return "SemiTS-Ind";
        case Coupling::Single: return "SemiTS-Sin";
    }
    return "SemiTS";
}

Decision SemiParametricTS::choose(std::size_t user, const ContextSet& ctx, Rng& rng) {
    const bool graph = coupling_ == Coupling::Graph;
    last_ = semigraphts_round(states_, laplacian_, config_, effective_v(config_, user), slot(user), ctx, rng, graph);
    Decision d;
    d.arm = last_.arm;
    if (graph) {
        d.psi = PsiTerms{last_.x_norm_gamma, last_.x_norm_b};
        d.estimate = EstimateSnapshot{last_.sampled.mu_hat, last_.s_centered, last_.probs.b_bar};
    }
    return d;
}

void SemiParametricTS::observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) {
    update_state(states_[slot(user)], ctx, last_.probs, decision.arm, reward);
}

LinearTS::LinearTS(bool shared, std::size_t users, std::size_t dim, PolicyConfig config)
    : shared_(shared), config_(std::move(config)) {
    config_.validate();
    const auto d = static_cast<Eigen::Index>(dim);
    Ridge init{config_.lambda * Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d), {}};
    init.chol.compute(init.B);
    states_.assign(shared_ ? 1 : users, init);
}

Decision LinearTS::choose(std::size_t user, const ContextSet& ctx, Rng& rng) {
    const Ridge& s = states_[shared_ ? 0 : user];
    Eigen::MatrixXd z(s.y.size(), 1);
    fill_normal(z, rng);
    const Eigen::VectorXd mean = s.chol.solve(s.y);
    const Eigen::VectorXd mu_tilde = mean + effective_v(config_, user) * s.chol.matrixU().solve(z.col(0));
    return Decision{argmax_lowest(ctx.b * mu_tilde), std::nullopt, std::nullopt};
}

void LinearTS::observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) {
    Ridge& s = states_[shared_ ? 0 : user];
    const Eigen::VectorXd b = ctx.b.row(static_cast<Eigen::Index>(decision.arm)).transpose();
    s.B += b * b.transpose();
    s.y += reward * b;
    s.chol = factor_spd(s.B, "LinTS B");
}

GraphUCB::GraphUCB(Laplacian L, std::size_t dim, PolicyConfig config)
    : laplacian_(std::move(L)), config_(std::move(config)) {
    config_.validate();
    const auto d = static_cast<Eigen::Index>(dim);
    states_.reserve(laplacian_.size());
    for (std::size_t k = 0; k < laplacian_.size(); ++k) {
        const double ridge = config_.lambda * laplacian_(k, k);
        states_.push_back(Ridge{ridge * Eigen::MatrixXd::Identity(d, d),
                                Eigen::MatrixXd::Identity(d, d) / ridge,
                                Eigen::VectorXd::Zero(d),
                                Eigen::VectorXd::Zero(d)});
    }
}

Eigen::VectorXd GraphUCB::estimate(std::size_t user) const {
    const Ridge& s = states_[user];
    if (laplacian_.neighbors(user).empty()) return s.mu_bar;
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(s.mu_bar.size());
    for (std::size_t k : laplacian_.neighbors(user)) pull += laplacian_(user, k) * states_[k].mu_bar;
    return s.mu_bar - config_.lambda * (s.C_inv * pull);
}

Decision GraphUCB::choose(std::size_t user, const ContextSet& ctx, Rng&) {
    const Eigen::VectorXd mu_hat = estimate(user);
    const Eigen::MatrixXd& C_inv = states_[user].C_inv;
    const double beta = effective_v(config_, user);
    Eigen::VectorXd score = ctx.b * mu_hat;
    for (Eigen::Index i = 0; i < score.size(); ++i) {
        const auto b = ctx.b.row(i);
        score(i) += beta * std::sqrt(std::max(0.0, b.dot(C_inv * b.transpose())));
    }
    return Decision{argmax_lowest(score), std::nullopt, std::nullopt};
}

void GraphUCB::observe(std::size_t user, const ContextSet& ctx, const Decision& decision, double reward) {
    Ridge& s = states_[user];
    const Eigen::VectorXd b = ctx.b.row(static_cast<Eigen::Index>(decision.arm)).transpose();
    s.C += b * b.transpose();
    s.y += reward * b;
    const auto chol = factor_spd(s.C, "GraphUCB C");
    s.C_inv = chol.solve(Eigen::MatrixXd::Identity(s.C.rows(), s.C.cols()));
    s.mu_bar = chol.solve(s.y);
}

std::size_t random_round(const ContextSet& ctx, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, ctx.arms() - 1);
    return pick(rng);
}

Decision RandomPolicy::choose(std::size_t, const ContextSet& ctx, Rng& rng) {
    return Decision{random_round(ctx, rng), std::nullopt, std::nullopt};
}

Decision OraclePolicy::choose(std::size_t user, const ContextSet& ctx, Rng&) {
    return Decision{optimal_arm(ctx, mus_.row(static_cast<Eigen::Index>(user)).transpose()), std::nullopt,
                    std::nullopt};
}

const std::vector<std::string>& known_policies() {
    static const std::vector<std::string> names{"SemiGraphTS", "SemiTS-Ind", "SemiTS-Sin", "LinTS-Ind",
                                                "LinTS-Sin",   "GraphUCB",   "Random",     "Oracle"};
    return names;
}

bool is_known_policy(std::string_view name) {
    const auto& names = known_policies();
    return std::find(names.begin(), names.end(), name) != names.end();
}

bool is_tunable_policy(std::string_view name) {
    return is_known_policy(name) && name != "Random" && name != "Oracle";
}

std::unique_ptr<Policy> make_policy(std::string_view name, const Environment& env, const PolicyConfig& config) {
    if (name == "SemiGraphTS") return std::make_unique<SemiParametricTS>(Coupling::Graph, env.laplacian, env.dim(), config);
    if (name == "SemiTS-Ind") {
        return std::make_unique<SemiParametricTS>(Coupling::Independent, env.laplacian, env.dim(), config);
    }
    if (name == "SemiTS-Sin") return std::make_unique<SemiParametricTS>(Coupling::Single, env.laplacian, env.dim(), config);
    if (name == "LinTS-Ind") return std::make_unique<LinearTS>(false, env.users(), env.dim(), config);
    if (name == "LinTS-Sin") return std::make_unique<LinearTS>(true, env.users(), env.dim(), config);
    if (name == "GraphUCB") return std::make_unique<GraphUCB>(env.laplacian, env.dim(), config);
    if (name == "Random") return std::make_unique<RandomPolicy>();
    if (name == "Oracle") return std::make_unique<OraclePolicy>(env.mus);
    throw PolicyError("unknown policy '" + std::string(name) + "'");
}

}  // namespace semigraph

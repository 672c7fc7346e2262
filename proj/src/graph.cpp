#include "semigraph/graph.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace semigraph {

UserGraph::UserGraph(std::size_t n) : adjacency_(n) {}

UserGraph::UserGraph(std::size_t n, const std::vector<Edge>& edges) : adjacency_(n) {
    for (const auto& [j, k] : edges) {
        if (!add_edge(j, k)) {
            throw GraphError("duplicate edge {" + std::to_string(j + 1) + "," + std::to_string(k + 1) + "}");
        }
    }
}

bool UserGraph::add_edge(std::size_t j, std::size_t k) {
    if (j >= size() || k >= size()) {
        throw GraphError("edge endpoint out of range: {" + std::to_string(j + 1) + "," +
                         std::to_string(k + 1) + "} with n=" + std::to_string(size()));
    }
    if (j == k) {
        throw GraphError("self-loop at node " + std::to_string(j + 1));
    }
    if (has_edge(j, k)) return false;
    Edge e{std::min(j, k), std::max(j, k)};
    edges_.insert(std::lower_bound(edges_.begin(), edges_.end(), e), e);
    auto insert_sorted = [](std::vector<std::size_t>& v, std::size_t x) {
        v.insert(std::lower_bound(v.begin(), v.end(), x), x);
    };
    insert_sorted(adjacency_[j], k);
    insert_sorted(adjacency_[k], j);
    return true;
}

bool UserGraph::has_edge(std::size_t j, std::size_t k) const {
    const auto& nb = adjacency_.at(j);
    return std::binary_search(nb.begin(), nb.end(), k);
}

std::vector<std::size_t> UserGraph::components() const {
    constexpr auto unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> label(size(), unset);
    std::size_t next = 0;
    std::vector<std::size_t> stack;
    for (std::size_t s = 0; s < size(); ++s) {
        if (label[s] != unset) continue;
        label[s] = next;
        stack.push_back(s);
        while (!stack.empty()) {
            std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t w : adjacency_[u]) {
                if (label[w] == unset) {
                    label[w] = next;
                    stack.push_back(w);
                }
            }
        }
        ++next;
    }
    return label;
}

bool UserGraph::connected() const {
    const auto label = components();
    return std::all_of(label.begin(), label.end(), [](std::size_t c) { return c == 0; });
}

Laplacian build_random_walk_laplacian(const UserGraph& g) {
    const std::size_t n = g.size();
    if (n == 0) throw GraphError("empty graph");
    Laplacian L;
    L.dense_ = Eigen::MatrixXd::Identity(n, n);
    L.neighbors_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& nb = g.neighbors(j);
        if (nb.empty() && n > 1) {
            throw GraphError("isolated node " + std::to_string(j + 1) + " has no neighbors");
        }
        const double w = nb.empty() ? 0.0 : -1.0 / static_cast<double>(nb.size());
        for (std::size_t k : nb) L.dense_(j, k) = w;
        L.neighbors_[j] = nb;
    }
    return L;
}

UserGraph generate_er_graph(std::size_t n, double p, Rng& rng) {
    if (n < 2) throw GraphError("Erdos-Renyi graph needs n >= 2");
    if (!(p > 0.0 && p <= 1.0)) throw GraphError("edge probability must lie in (0, 1]");
    UserGraph g(n);
    std::bernoulli_distribution coin(p);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = j + 1; k < n; ++k) {
            if (coin(rng)) g.add_edge(j, k);
        }
    }
    return g;
}

UserGraph ensure_connected(UserGraph g, Rng& rng) {
    if (g.size() < 2) throw GraphError("connectivity repair needs n >= 2");
    std::vector<UserGraph::Edge> candidates;
    for (;;) {
        const auto label = g.components();
        const std::size_t count = *std::max_element(label.begin(), label.end()) + 1;
        if (count == 1) return g;
        candidates.clear();
        for (std::size_t j = 0; j < g.size(); ++j) {
            for (std::size_t k = j + 1; k < g.size(); ++k) {
                if (label[j] != label[k]) candidates.emplace_back(j, k);
            }
        }
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        const auto [j, k] = candidates[pick(rng)];
        g.add_edge(j, k);
    }
}

std::vector<DeltaVector> compute_deltas(const Laplacian& L, const Eigen::MatrixXd& mus) {
    if (static_cast<std::size_t>(mus.rows()) != L.size()) {
        throw GraphError("compute_deltas: mus has " + std::to_string(mus.rows()) + " rows but the graph has " +
                         std::to_string(L.size()) + " nodes");
    }
    std::vector<DeltaVector> out(L.size());
    for (std::size_t j = 0; j < L.size(); ++j) {
        Eigen::VectorXd delta = L(j, j) * mus.row(j).transpose();
        for (std::size_t k : L.neighbors(j)) delta += L(j, k) * mus.row(k).transpose();
        out[j].norm = delta.norm();
        out[j].delta = std::move(delta);
    }
    return out;
}

void write_edge_list(std::ostream& out, const UserGraph& g) {
    out << "# n " << g.size() << '\n';
    for (const auto& [j, k] : g.edges()) out << j + 1 << ' ' << k + 1 << '\n';
}

UserGraph read_edge_list(std::istream& in) {
    std::size_t declared = 0;
    std::size_t max_node = 0;
    std::vector<UserGraph::Edge> edges;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, tag;
            std::size_t n = 0;
            if (ls >> hash >> tag >> n && tag == "n") declared = n;
            continue;
        }
        long long j = 0, k = 0;
        if (!(ls >> j >> k) || j < 1 || k < 1) {
            throw GraphError("edge list line " + std::to_string(lineno) + ": expected two 1-indexed node ids");
        }
        edges.emplace_back(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(k - 1));
        max_node = std::max({max_node, static_cast<std::size_t>(j), static_cast<std::size_t>(k)});
    }
    if (declared > 0 && max_node > declared) {
        throw GraphError("edge list references node " + std::to_string(max_node) + " but declares n = " +
                         std::to_string(declared));
    }
    return UserGraph(std::max(declared, max_node), edges);
}

}  // namespace semigraph

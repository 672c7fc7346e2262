#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "semigraph/rng.hpp"

namespace semigraph {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Undirected simple graph on nodes 0..n-1. Edges are stored with first < second
// and kept sorted, so two graphs with the same edge set compare equal.
class UserGraph {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    UserGraph() = default;
    explicit UserGraph(std::size_t n);
    UserGraph(std::size_t n, const std::vector<Edge>& edges);

    // Returns false if the edge already existed. Throws on self-loops or
    // out-of-range endpoints.
    bool add_edge(std::size_t j, std::size_t k);
    bool has_edge(std::size_t j, std::size_t k) const;

    std::size_t size() const { return adjacency_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t j) const { return adjacency_.at(j); }
    std::size_t degree(std::size_t j) const { return adjacency_.at(j).size(); }

    // Component label per node, labels numbered in order of first appearance.
    std::vector<std::size_t> components() const;
    bool connected() const;

    bool operator==(const UserGraph& other) const { return edges_ == other.edges_ && size() == other.size(); }

private:
    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<Edge> edges_;
};

// Random-walk normalized Laplacian: l_jj = 1, l_jk = -1/deg(j) on edges.
// Dense storage plus neighbor lists so per-user sums only visit neighbors.
class Laplacian {
public:
    Laplacian() = default;

    std::size_t size() const { return static_cast<std::size_t>(dense_.rows()); }
    double operator()(std::size_t j, std::size_t k) const { return dense_(j, k); }
    const Eigen::MatrixXd& dense() const { return dense_; }
    const std::vector<std::size_t>& neighbors(std::size_t j) const { return neighbors_.at(j); }

    friend Laplacian build_random_walk_laplacian(const UserGraph& g);

private:
    Eigen::MatrixXd dense_;
    std::vector<std::vector<std::size_t>> neighbors_;
};

struct DeltaVector {
    Eigen::VectorXd delta;
    double norm = 0.0;
};

// A single isolated node is accepted (the one-user problem has L = [1]);
// any isolated node in a graph with n >= 2 is an error.
Laplacian build_random_walk_laplacian(const UserGraph& g);

UserGraph generate_er_graph(std::size_t n, double p, Rng& rng);

// Adds uniformly random edges between distinct components until connected.
UserGraph ensure_connected(UserGraph g, Rng& rng);

// mus is n x d, one row per user.
std::vector<DeltaVector> compute_deltas(const Laplacian& L, const Eigen::MatrixXd& mus);

// Edge list text: one "j k" pair per line, 1-indexed. A leading "# n <count>"
// line records the node count so trailing isolated nodes survive a round trip.
void write_edge_list(std::ostream& out, const UserGraph& g);
UserGraph read_edge_list(std::istream& in);

}  // namespace semigraph

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "semigraph/graph.hpp"

using namespace semigraph;

TEST_CASE("path graph laplacian") {
    // 1 - 2 - 3: the middle node splits its weight between both ends.
    const UserGraph g(3, {{0, 1}, {1, 2}});
    const Laplacian L = build_random_walk_laplacian(g);
    Eigen::Matrix3d expected;
    expected << 1.0, -1.0, 0.0, -0.5, 1.0, -0.5, 0.0, -1.0, 1.0;
    CHECK((L.dense() - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(L.neighbors(1) == std::vector<std::size_t>{0, 2});
}

TEST_CASE("complete graph laplacian") {
    UserGraph g(4);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t k = j + 1; k < 4; ++k) g.add_edge(j, k);
    }
    const Laplacian L = build_random_walk_laplacian(g);
    for (std::size_t j = 0; j < 4; ++j) {
        for (std::size_t k = 0; k < 4; ++k) CHECK(L(j, k) == doctest::Approx(j == k ? 1.0 : -1.0 / 3.0));
    }
}

TEST_CASE("laplacian is not symmetric for unequal degrees") {
    const UserGraph star(4, {{0, 1}, {0, 2}, {0, 3}});
    const Laplacian L = build_random_walk_laplacian(star);
    CHECK(L(0, 1) == doctest::Approx(-1.0 / 3.0));
    CHECK(L(1, 0) == -1.0);
}

TEST_CASE("isolated node is rejected, single node is accepted") {
    const UserGraph g(3, {{0, 1}});
    CHECK_THROWS_AS(build_random_walk_laplacian(g), GraphError);
    const Laplacian one = build_random_walk_laplacian(UserGraph(1));
    REQUIRE(one.size() == 1);
    CHECK(one(0, 0) == 1.0);
    CHECK(one.neighbors(0).empty());
}

TEST_CASE("edge validation") {
    UserGraph g(3);
    CHECK_THROWS_AS(g.add_edge(1, 1), GraphError);
    CHECK_THROWS_AS(g.add_edge(0, 3), GraphError);
    CHECK(g.add_edge(2, 0));
    CHECK_FALSE(g.add_edge(0, 2));
    CHECK(g.edge_count() == 1);
    CHECK(g.has_edge(0, 2));
    CHECK(g.has_edge(2, 0));
    CHECK(g.edges().front() == UserGraph::Edge{0, 2});
}

TEST_CASE("components and connectivity") {
    const UserGraph g(5, {{0, 1}, {3, 4}});
    CHECK(g.components() == std::vector<std::size_t>{0, 0, 1, 2, 2});
    CHECK_FALSE(g.connected());
    CHECK(UserGraph(1).connected());
}

TEST_CASE("ER generator argument checks") {
    Rng rng(1);
    CHECK_THROWS_AS(generate_er_graph(1, 0.5, rng), GraphError);
    CHECK_THROWS_AS(generate_er_graph(5, 0.0, rng), GraphError);
    CHECK_THROWS_AS(generate_er_graph(5, 1.5, rng), GraphError);
    CHECK(generate_er_graph(6, 1.0, rng).edge_count() == 15);
}

TEST_CASE("ER edge count stays in the binomial band") {
    // n = 30, p = 0.4: 435 pairs, mean 174, sd 10.22.
    constexpr double mean = 174.0;
    constexpr double sd = 10.21763181955584;
    double total = 0.0;
    constexpr int graphs = 50;
    for (int s = 0; s < graphs; ++s) {
        Rng rng = make_rng(7, "er-band", static_cast<std::uint64_t>(s));
        const auto count = static_cast<double>(generate_er_graph(30, 0.4, rng).edge_count());
        CHECK(std::abs(count - mean) <= 5.0 * sd);
        total += count;
    }
    CHECK(std::abs(total / graphs - mean) <= 4.0 * sd / std::sqrt(double(graphs)));
}

TEST_CASE("ensure_connected joins components and keeps existing edges") {
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng = make_rng(11, "connect", s);
        const UserGraph sparse = generate_er_graph(20, 0.05, rng);
        const UserGraph joined = ensure_connected(sparse, rng);
        CHECK(joined.connected());
        for (const auto& [j, k] : sparse.edges()) CHECK(joined.has_edge(j, k));
        // A spanning forest needs exactly (#components - 1) extra edges.
        const auto comps = sparse.components();
        const std::size_t count = *std::max_element(comps.begin(), comps.end()) + 1;
        CHECK(joined.edge_count() == sparse.edge_count() + count - 1);
    }
}

TEST_CASE("property: random-walk laplacian rows") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rng rng = make_rng(3, "rows", s);
        std::uniform_int_distribution<std::size_t> size(2, 40);
        std::uniform_real_distribution<double> p(0.02, 1.0);
        const UserGraph g = ensure_connected(generate_er_graph(size(rng), p(rng), rng), rng);
        const Laplacian L = build_random_walk_laplacian(g);
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(L(j, j) == 1.0);
            CHECK(std::abs(L.dense().row(j).sum()) <= 1e-12);
            double weights = 0.0;
            for (std::size_t k : L.neighbors(j)) {
                CHECK(L(j, k) < 0.0);
                weights += L(j, k) * L(j, k);
            }
            CHECK(weights == doctest::Approx(1.0 / static_cast<double>(g.degree(j))));
            CHECK(weights <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("deltas vanish for identical users") {
    const UserGraph g(3, {{0, 1}, {1, 2}});
    const Laplacian L = build_random_walk_laplacian(g);
    Eigen::MatrixXd mus(3, 2);
    mus << 0.3, -0.4, 0.3, -0.4, 0.3, -0.4;
    for (const auto& d : compute_deltas(L, mus)) CHECK(d.norm <= 1e-15);

    mus.row(0) << 1.0, 0.0;
    const auto deltas = compute_deltas(L, mus);
    CHECK(deltas[0].delta(0) == doctest::Approx(0.7));
    CHECK(deltas[1].delta(0) == doctest::Approx(0.3 - 0.5 * 1.3));
    CHECK(deltas[2].norm == doctest::Approx(0.0));
}

TEST_CASE("edge list round trip") {
    Rng rng(5);
    const UserGraph g = ensure_connected(generate_er_graph(12, 0.3, rng), rng);
    std::stringstream buf;
    write_edge_list(buf, g);
    CHECK(buf.str().rfind("# n 12\n", 0) == 0);
    CHECK(read_edge_list(buf) == g);

    std::istringstream bad("# n 3\n1 4\n");
    CHECK_THROWS_AS(read_edge_list(bad), GraphError);
}

TEST_CASE("small fixed graphs") {
    const Laplacian edge = build_random_walk_laplacian(UserGraph(2, {{0, 1}}));
    CHECK(edge.dense() == (Eigen::Matrix2d() << 1, -1, -1, 1).finished());
    const Laplacian tri = build_random_walk_laplacian(UserGraph(3, {{0, 1}, {0, 2}, {1, 2}}));
    CHECK(tri.dense() == (Eigen::Matrix3d() << 1, -0.5, -0.5, -0.5, 1, -0.5, -0.5, -0.5, 1).finished());

    Rng rng(2);
    CHECK(generate_er_graph(2, 1.0, rng) == UserGraph(2, {{0, 1}}));
    CHECK(generate_er_graph(5, 1.0, rng).edge_count() == 10);
}

TEST_CASE("ensure_connected fixed cases") {
    Rng rng(9);
    const UserGraph path(3, {{0, 1}, {1, 2}});
    CHECK(ensure_connected(path, rng) == path);
    const UserGraph two = ensure_connected(UserGraph(4, {{0, 1}, {2, 3}}), rng);
    CHECK(two.connected());
    CHECK(two.edge_count() >= 3);
    const UserGraph empty = ensure_connected(UserGraph(3), rng);
    CHECK(empty.connected());
    CHECK(empty.edge_count() >= 2);
    CHECK_THROWS_AS(ensure_connected(UserGraph(1), rng), GraphError);
}

TEST_CASE("deltas on an edge and a star") {
    const Laplacian edge = build_random_walk_laplacian(UserGraph(2, {{0, 1}}));
    Eigen::MatrixXd mus(2, 1);
    mus << 1.0, 0.0;
    const auto d = compute_deltas(edge, mus);
    CHECK(d[0].delta(0) == 1.0);
    CHECK(d[1].delta(0) == -1.0);

    const Laplacian star = build_random_walk_laplacian(UserGraph(4, {{0, 1}, {0, 2}, {0, 3}}));
    Eigen::MatrixXd m(4, 2);
    m << 0.9, 0.1, 0.2, -0.3, 0.2, -0.3, 0.2, -0.3;
    const auto s = compute_deltas(star, m);
    CHECK(s[0].delta(0) == doctest::Approx(0.7));
    CHECK(s[0].delta(1) == doctest::Approx(0.4));
}

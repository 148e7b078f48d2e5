#include <doctest.h>

#include <random>
#include <sstream>
#include <stdexcept>

#include "hazardnet/graph.hpp"
#include "oracles.hpp"

using namespace hazardnet;

namespace {

const char* kBibSchema = R"({"node_types": ["A", "P"],
  "link_types": [{"name": "write", "src": "A", "dst": "P"}, {"name": "cite", "src": "P", "dst": "P"}]})";

TemporalGraph load(const std::string& edges) {
    std::istringstream in(edges);
    return load_graph(kBibSchema, in);
}

SparseCountMatrix random_sparse(std::mt19937_64& rng, std::size_t r, std::size_t c, double p) {
    std::bernoulli_distribution on(p);
    std::uniform_int_distribution<Count> value(1, 3);
    std::vector<SparseCountMatrix::Triplet> t;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            if (on(rng))
                t.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), value(rng)});
    return SparseCountMatrix::from_triplets(r, c, t);
}

}  // namespace

TEST_CASE("schema validation") {
    CHECK_THROWS_AS(Schema({"A", "A"}, {}), std::invalid_argument);
    CHECK_THROWS_AS(Schema({"A"}, {{"x", "A", "B"}}), std::invalid_argument);
    CHECK_THROWS_AS(Schema({"A"}, {{"x", "A", "A"}, {"x", "A", "A"}}), std::invalid_argument);
    CHECK_THROWS_AS(Schema::from_json("{"), std::invalid_argument);
    const auto s = Schema::from_json(kBibSchema);
    CHECK(s.node_type("P") == 1);
    CHECK(s.link_src(s.link_type("write")) == 0);
    CHECK_FALSE(s.find_link_type("coauthor").has_value());
}

TEST_CASE("load_graph") {
    SUBCASE("single edge") {
        const auto g = load("write\ta1\tp1\t2001\t\n");
        CHECK(g.node_count(0) == 1);
        CHECK(g.node_count(1) == 1);
        CHECK(g.links().size() == 1);
        CHECK_FALSE(g.links()[0].death.has_value());
    }
    SUBCASE("empty stream") {
        const auto g = load("");
        CHECK(g.node_count(0) == 0);
        CHECK(g.links().empty());
        CHECK_FALSE(g.time_span().has_value());
    }
    SUBCASE("comments, four-field lines and CRLF") {
        const auto g = load("# header\n\nwrite\ta1\tp1\t2001\r\ncite\tp1\tp2\t2002\t2004\n");
        CHECK(g.links().size() == 2);
        CHECK(g.links()[1].death == 2004.0);
        CHECK(g.node_count(1) == 2);
        CHECK(g.time_span()->first == 2001.0);
        CHECK(g.time_span()->second == 2004.0);
    }
    SUBCASE("duplicates kept as parallel links, insertion-ordered ids") {
        const auto g = load("write\ta2\tp1\t1\t\nwrite\ta1\tp1\t1\t\nwrite\ta2\tp1\t1\t\n");
        CHECK(g.links().size() == 3);
        CHECK(g.node_id(0, 0) == "a2");
        CHECK(g.node_id(0, 1) == "a1");
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(load("coauthor\ta1\ta2\t2001\t\n"), std::invalid_argument);
        CHECK_THROWS_AS(load("write\ta1\tp1\tyesterday\t\n"), std::invalid_argument);
        CHECK_THROWS_AS(load("write\ta1\tp1\t2001\t2001\n"), std::invalid_argument);
        CHECK_THROWS_AS(load("write\ta1\tp1\t2001\t2000\n"), std::invalid_argument);
        CHECK_THROWS_AS(load("write\ta1\tp1\tnan\t\n"), std::invalid_argument);
        CHECK_THROWS_AS(load("write\ta1\n"), std::invalid_argument);
    }
}

TEST_CASE("time_aware_adjacency boundaries") {
    const auto g = load("write\ta1\tp1\t2001\t\nwrite\ta1\tp2\t2000\t2003\n"
                        "write\ta2\tp3\t1999\t\nwrite\ta2\tp3\t1999\t\n");
    const auto at = [&](double tau, std::size_t r, std::size_t c) {
        return time_aware_adjacency(g, "write", tau).at(r, c);
    };
    CHECK(at(2001, 0, 0) == 0);  // born exactly at tau
    CHECK(at(2001.5, 0, 0) == 1);
    CHECK(at(2003, 0, 1) == 1);  // tau == death
    CHECK(at(2003.5, 0, 1) == 0);
    CHECK(at(2000, 1, 2) == 2);  // parallel links
    const auto m = time_aware_adjacency(g, "write", 1000);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m.nonzeros() == 0);
    CHECK_THROWS_AS(time_aware_adjacency(g, "coauthor", 1), std::invalid_argument);
}

TEST_CASE("time_aware_adjacency matches a literal scan") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> tau(-1.0, 22.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto g = oracle::random_graph(rng, 12, 100);
        for (int q = 0; q < 50; ++q) {
            const double t = q % 5 == 0 ? std::round(tau(rng) * 2) / 2 : tau(rng);
            for (TypeIndex lt = 0; lt < 3; ++lt)
                REQUIRE(oracle::dense(time_aware_adjacency(g, lt, t)) == oracle::adjacency(g, lt, t));
        }
    }
}

TEST_CASE("sparse matrix construction") {
    const auto m = SparseCountMatrix::from_triplets(2, 3, {{1, 2, 4}, {0, 1, 1}, {1, 2, 1}, {0, 0, 0}});
    CHECK(m.nonzeros() == 2);
    CHECK(m.at(1, 2) == 5);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.row(1).size() == 1);
    CHECK_THROWS(SparseCountMatrix::from_triplets(2, 2, {{2, 0, 1}}));
    CHECK(m.binarized().at(1, 2) == 1);
}

TEST_CASE("transpose") {
    const auto m = SparseCountMatrix::from_triplets(1, 2, {{0, 1, 3}});
    const auto t = transpose(m);
    CHECK(t.rows() == 2);
    CHECK(t.cols() == 1);
    CHECK(t.at(1, 0) == 3);
    const SparseCountMatrix empty(3, 5);
    CHECK(transpose(empty).rows() == 5);
    CHECK(transpose(empty).nonzeros() == 0);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto r = random_sparse(rng, 7, 11, 0.2);
        CHECK(transpose(transpose(r)) == r);
    }
}

TEST_CASE("spmm") {
    const auto row = SparseCountMatrix::from_triplets(1, 2, {{0, 0, 1}, {0, 1, 1}});
    const auto col = transpose(row);
    CHECK(spmm(row, col).at(0, 0) == 2);
    CHECK_THROWS_AS(spmm(row, row), std::invalid_argument);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        const auto a = random_sparse(rng, 20, 20, 0.3).binarized();
        const auto b = random_sparse(rng, 20, 20, 0.3).binarized();
        CHECK(spmm(SparseCountMatrix::identity(20), a) == a);
        CHECK(oracle::dense(spmm(a, b)) == oracle::matmul(oracle::dense(a), oracle::dense(b), 20, 20));
    }
    // Results never hold explicit zeros.
    const auto c = spmm(SparseCountMatrix::from_triplets(2, 2, {{0, 0, 1}}),
                        SparseCountMatrix::from_triplets(2, 2, {{1, 1, 1}}));
    CHECK(c.nonzeros() == 0);
}

TEST_CASE("spmm is associative") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 50; ++i) {
        const auto a = random_sparse(rng, 6, 8, 0.3);
        const auto b = random_sparse(rng, 8, 5, 0.3);
        const auto c = random_sparse(rng, 5, 7, 0.3);
        CHECK(spmm(spmm(a, b), c) == spmm(a, spmm(b, c)));
    }
}

TEST_CASE("spmm overflow is an error") {
    const Count big = Count{1} << 40;
    const auto a = SparseCountMatrix::from_triplets(1, 1, {{0, 0, big}});
    CHECK_THROWS_AS(spmm(a, a), std::overflow_error);
    const auto row = SparseCountMatrix::from_triplets(1, 2, {{0, 0, ~Count{0}}, {0, 1, 1}});
    const auto col = SparseCountMatrix::from_triplets(2, 1, {{0, 0, 1}, {1, 0, 1}});
    CHECK_THROWS_AS(spmm(row, col), std::overflow_error);
}

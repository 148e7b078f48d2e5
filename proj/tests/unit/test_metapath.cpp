#include <doctest.h>

#include <random>
#include <sstream>
#include <stdexcept>

#include "hazardnet/metapath.hpp"
#include "oracles.hpp"

using namespace hazardnet;

namespace {

const Schema& dblp() {
    static const Schema s({"A", "P", "V"},
                          {{"write", "A", "P"}, {"cite", "P", "P"}, {"publish", "P", "V"}});
    return s;
}

TemporalGraph citation_graph() {
    TemporalGraph g(dblp());
    g.add_link("write", "a1", "p1", 2000, std::nullopt);
    g.add_link("cite", "p1", "p2", 2002, std::nullopt);
    g.add_link("write", "a2", "p2", 2001, std::nullopt);
    return g;
}

}  // namespace

TEST_CASE("parse_metapath") {
    const auto& s = dblp();
    const auto citation = parse_metapath("write> cite> <write", s);
    CHECK(citation.length() == 3);
    CHECK(citation.node_types() == std::vector<TypeIndex>{0, 1, 1, 0});
    CHECK(citation.steps()[2].direction == Direction::Backward);
    CHECK(citation.to_string(s) == "write> cite> <write");

    const auto coauthor = parse_metapath("  write>\t<write ", s);
    CHECK(coauthor.source_type() == 0);
    CHECK(coauthor.target_type() == 0);
    CHECK(coauthor.is_symmetric());
    CHECK_FALSE(citation.is_symmetric());
    CHECK(parse_metapath("write> publish> <publish <write", s).is_symmetric());
    CHECK_FALSE(parse_metapath("cite> cite>", s).is_symmetric());
    CHECK(parse_metapath("cite> <cite", s).is_symmetric());

    CHECK_THROWS_AS(parse_metapath("cite> write>", s), std::invalid_argument);
    CHECK_THROWS_AS(parse_metapath("", s), std::invalid_argument);
    CHECK_THROWS_AS(parse_metapath("write", s), std::invalid_argument);
    CHECK_THROWS_AS(parse_metapath("<write>", s), std::invalid_argument);
    CHECK_THROWS_AS(parse_metapath("coauthor>", s), std::invalid_argument);
}

TEST_CASE("parse_metapath_list") {
    const auto& s = dblp();
    const auto list = parse_metapath_list("# comment\ntarget: write> cite> <write\n\nwrite> <write\n", s);
    REQUIRE(list.target.has_value());
    CHECK(list.target->length() == 3);
    CHECK(list.features.size() == 1);
    CHECK_FALSE(parse_metapath_list("write> <write\n", s).target.has_value());
    CHECK_THROWS_AS(parse_metapath_list("write> <write\ntarget: write> <write\n", s),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_metapath_list("cite> write>\n", s), std::invalid_argument);
}

TEST_CASE("metapath_matrix on a citation example") {
    const auto g = citation_graph();
    const auto path = parse_metapath("write> cite> <write", g.schema());
    const auto late = metapath_matrix(g, path, 2010);
    CHECK(late.nonzeros() == 1);
    CHECK(late.at(0, 1) == 1);
    CHECK(metapath_matrix(g, path, 2001.5).nonzeros() == 0);  // before the cite link
}

TEST_CASE("metapath_matrix matches path enumeration") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> tau(0.0, 22.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = oracle::random_graph(rng, 4 + rng() % 27, 10 + rng() % 60);
        const auto path = oracle::random_path(rng, g.schema(), 1 + rng() % 4);
        const double t = tau(rng);
        ProductCache cache;
        const auto expected = oracle::path_instances(g, path, t);
        REQUIRE(oracle::dense(metapath_matrix(g, path, t)) == expected);
        REQUIRE(oracle::dense(metapath_matrix(g, path, t, &cache)) == expected);
        ProductOptions no_symmetry;
        no_symmetry.use_symmetry = false;
        REQUIRE(oracle::dense(metapath_matrix(g, path, t, nullptr, no_symmetry)) == expected);
    }
}

TEST_CASE("symmetric paths") {
    std::mt19937_64 rng(77);
    const auto g0 = oracle::random_graph(rng, 10, 10);
    const auto& s = g0.schema();
    for (const char* expr : {"ab> <ab", "ab> bb> <bb <ab", "aa> <aa", "<ab ab>", "ab> bb> <ab"}) {
        const auto path = parse_metapath(expr, s);
        for (int trial = 0; trial < 20; ++trial) {
            const auto g = oracle::random_graph(rng, 16, 60);
            ProductOptions full;
            full.use_symmetry = false;
            CHECK(metapath_matrix(g, path, 11) == metapath_matrix(g, path, 11, nullptr, full));
        }
    }
}

TEST_CASE("binary products count distinct neighbours") {
    TemporalGraph g(dblp());
    g.add_link("write", "a1", "p1", 0, std::nullopt);
    g.add_link("write", "a1", "p1", 0, std::nullopt);
    g.add_link("write", "a2", "p1", 0, std::nullopt);
    const auto path = parse_metapath("write> <write", g.schema());
    CHECK(metapath_matrix(g, path, 1).at(0, 1) == 2);
    ProductOptions binary;
    binary.binary = true;
    CHECK(metapath_matrix(g, path, 1, nullptr, binary).at(0, 1) == 1);
}

TEST_CASE("prefix cache shares work and is transparent") {
    std::mt19937_64 rng(8);
    const auto g = oracle::random_graph(rng, 20, 120);
    const auto& s = g.schema();
    const std::vector<MetaPath> paths{parse_metapath("ab> bb> <ab", s),
                                      parse_metapath("ab> bb> bb>", s),
                                      parse_metapath("ab> bb>", s)};
    ProductCache cache;
    std::vector<SparseCountMatrix> cached;
    for (const auto& p : paths) cached.push_back(metapath_matrix(g, p, 7, &cache));
    for (std::size_t i = 0; i < paths.size(); ++i)
        CHECK(cached[i] == metapath_matrix(g, paths[i], 7));
    const auto before = cache.computed();
    metapath_matrix(g, paths[0], 7, &cache);
    metapath_matrix(g, paths[2], 7, &cache);
    CHECK(cache.computed() == before);

    ProductCache fresh;
    metapath_matrix(g, paths[0], 7, &fresh);
    const auto after_first = fresh.computed();
    metapath_matrix(g, paths[2], 7, &fresh);  // a prefix of paths[0]
    CHECK(fresh.computed() == after_first);
    metapath_matrix(g, paths[0], 8, &cache);
    CHECK(cache.computed() > before);  // tau is part of the key
    cache.clear();
    CHECK(cache.size() == 0);
}

TEST_CASE("parallel evaluation equals sequential") {
    std::mt19937_64 rng(21);
    const auto g = oracle::random_graph(rng, 24, 200);
    std::vector<MetaPath> paths;
    for (int i = 0; i < 12; ++i) paths.push_back(oracle::random_path(rng, g.schema(), 1 + i % 4));
    const auto seq = metapath_matrices(g, paths, 9, nullptr, {}, 1);
    ProductCache cache;
    const auto par = metapath_matrices(g, paths, 9, &cache, {}, 4);
    CHECK(seq == par);
}

TEST_CASE("snapshot plan") {
    CHECK_THROWS_AS(SnapshotPlan(0, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(SnapshotPlan(0, 1, 0), std::invalid_argument);
    const SnapshotPlan p(2000, 0.5, 4);
    CHECK(p.phi() == 2.0);
    CHECK(p.boundary(4) == 2002.0);
}

TEST_CASE("dynamic_series") {
    TemporalGraph g(dblp());
    // f(a1, a2) over write> <write is 0 at 0, 2 at 1, 5 at 2.
    for (int i = 0; i < 2; ++i) {
        const auto p = "p" + std::to_string(i);
        g.add_link("write", "a1", p, 0.5, std::nullopt);
        g.add_link("write", "a2", p, 0.5, std::nullopt);
    }
    for (int i = 2; i < 5; ++i) {
        const auto p = "p" + std::to_string(i);
        g.add_link("write", "a1", p, 1.5, std::nullopt);
        g.add_link("write", "a2", p, 1.5, std::nullopt);
    }
    const auto path = parse_metapath("write> <write", g.schema());
    const auto s = dynamic_series(g, {path}, SnapshotPlan(0, 1, 2), {{0, 1}});
    REQUIRE(s.size() == 1);
    CHECK(s[0].series == std::vector<std::vector<std::int64_t>>{{2}, {3}});
    CHECK(s[0].baseline == std::vector<std::int64_t>{0});

    const auto one = dynamic_series(g, {path}, SnapshotPlan(0.7, 1, 1), {{0, 1}});
    CHECK(one[0].series[0][0] == 3);
    CHECK(one[0].baseline[0] == 2);

    const auto wrong = parse_metapath("write> cite>", g.schema());
    CHECK_THROWS_AS(dynamic_series(g, {path, wrong}, SnapshotPlan(0, 1, 2), {{0, 0}}),
                    std::invalid_argument);
    CHECK_THROWS(dynamic_series(g, {path}, SnapshotPlan(0, 1, 2), {{0, 9}}));

    const auto csv = series_to_csv(g, path, s);
    CHECK(csv == "src,dst,snapshot,feat_0\na1,a2,1,2\na1,a2,2,3\n");
}

TEST_CASE("series sums telescope and deaths give negative steps") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = oracle::random_graph(rng, 14, 80);
        const auto& s = g.schema();
        const std::vector<MetaPath> paths{parse_metapath("ab> <ab", s),
                                          parse_metapath("aa> ab> bb> <ab", s)};
        const SnapshotPlan plan(1.25, 1.5, 5);
        std::vector<NodePair> pairs;
        for (NodeIndex a = 0; a < g.node_count(0); ++a)
            for (NodeIndex b = 0; b < g.node_count(0); ++b) pairs.push_back({a, b});
        ProductCache cache;
        const auto series = dynamic_series(g, paths, plan, pairs, &cache, {}, 2);
        for (std::size_t j = 0; j < paths.size(); ++j) {
            const auto start = oracle::path_instances(g, paths[j], plan.boundary(0));
            const auto end = oracle::path_instances(g, paths[j], plan.boundary(plan.k));
            for (const auto& ps : series) {
                std::int64_t sum = 0;
                for (const auto& row : ps.series) sum += row[j];
                REQUIRE(ps.baseline[j] == static_cast<std::int64_t>(start[ps.pair.src][ps.pair.dst]));
                REQUIRE(sum == static_cast<std::int64_t>(end[ps.pair.src][ps.pair.dst]) -
                                   static_cast<std::int64_t>(start[ps.pair.src][ps.pair.dst]));
            }
        }
    }
}

#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "medrep/description.hpp"
#include "medrep/error.hpp"
#include "medrep/io.hpp"
#include "medrep/neighbors.hpp"
#include "medrep/subgraph.hpp"
#include "medrep/trainer.hpp"

using namespace medrep;
using namespace medrep::graph;

TEST_CASE("subgraph sampling") {
    Rng rng(1);
    SUBCASE("chain with unit fanouts walks one hop at a time") {
        const std::vector<std::pair<DenseIndex, DenseIndex>> chain{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
        const auto g = RelationGraph::from_pairs(5, chain);
        const std::vector<DenseIndex> seeds{0};
        const std::vector<int> fan{1, 1, 1};
        const auto s = sample_subgraph(g, seeds, fan, rng);
        CHECK(s.nodes == std::vector<DenseIndex>{0, 1, 2, 3});
        CHECK(s.num_seeds == 1);
        CHECK(s.edges == EdgeList{{0, 1}, {1, 2}, {2, 3}});
    }
    SUBCASE("fanout caps but never pads") {
        const std::vector<std::pair<DenseIndex, DenseIndex>> star{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}};
        const auto g = RelationGraph::from_pairs(6, star);
        const std::vector<DenseIndex> seeds{0};
        const std::vector<int> fan{30, 20, 10};
        const auto s = sample_subgraph(g, seeds, fan, rng);
        CHECK(s.nodes.size() == 6);
        CHECK(s.edges.size() == 5);
    }
    SUBCASE("induced edges and mapping are consistent") {
        const auto toy = fixture::two_cluster_toy(3);
        const std::vector<DenseIndex> seeds{4, 30};
        const std::vector<int> fan{3, 2, 1};
        const auto s = sample_subgraph(toy.graph, seeds, fan, rng);
        CHECK(s.nodes.size() <= 2 + 2 * 3 + 6 * 2 + 12);
        for (std::size_t i = 0; i < s.nodes.size(); ++i) CHECK(s.local_of.at(s.nodes[i]) == i);
        std::size_t induced = 0;
        for (auto [a, b] : toy.graph.edges()) induced += s.local_of.count(a) && s.local_of.count(b);
        CHECK(s.edges.size() == induced);
        for (auto [a, b] : s.edges) {
            CHECK(a < b);
            const auto nb = toy.graph.neighbors(s.nodes[a]);
            CHECK(std::find(nb.begin(), nb.end(), s.nodes[b]) != nb.end());
        }
    }
    SUBCASE("empty seed set") {
        const auto g = RelationGraph::from_pairs(2, std::vector<std::pair<DenseIndex, DenseIndex>>{{0, 1}});
        const std::vector<int> fan{1};
        CHECK_THROWS_AS(sample_subgraph(g, std::vector<DenseIndex>{}, fan, rng), Error);
    }
}

namespace {

TrainConfig toy_config(std::uint64_t seed) {
    TrainConfig c;
    c.batch_size = 16;
    c.learning_rate = 5e-3;
    c.max_iterations = 200;
    c.patience = 50;
    c.hop_fanouts = {10, 5, 5};
    c.rng_seed = seed;
    return c;
}

}  // namespace

TEST_CASE("training") {
    const auto toy = fixture::two_cluster_toy(11);

    SUBCASE("zero iterations returns the untrained forward pass") {
        auto c = toy_config(2);
        c.max_iterations = 0;
        const auto res = train_representations(toy.text, toy.graph, c);
        CHECK(res.iterations_run == 0);
        CHECK(res.log.empty());
        CHECK(res.representations.kind == RepresentationKind::Graph);
        CHECK((res.representations.values - gcn_forward(res.encoder, toy.text.values, toy.graph.edges()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
    }
    SUBCASE("same seed, same result") {
        auto c = toy_config(5);
        c.max_iterations = 30;
        const auto a = train_representations(toy.text, toy.graph, c);
        const auto b = train_representations(toy.text, toy.graph, c);
        CHECK(a.representations.values == b.representations.values);
        CHECK(format_train_log(a.log) == format_train_log(b.log));
        c.rng_seed = 6;
        CHECK(train_representations(toy.text, toy.graph, c).representations.values != a.representations.values);
    }
    SUBCASE("phases alternate") {
        auto c = toy_config(7);
        c.max_iterations = 6;
        const auto res = train_representations(toy.text, toy.graph, c);
        REQUIRE(res.log.size() == 6);
        for (std::size_t i = 0; i < 6; ++i)
            CHECK(res.log[i].phase == (i % 2 == 0 ? Phase::Contrastive : Phase::Distill));
    }
    SUBCASE("two clusters separate") {
        const auto res = train_representations(toy.text, toy.graph, toy_config(1));
        const auto [intra, inter] = fixture::cluster_cosines(res.representations.values, toy.cluster);
        CHECK(intra > inter);
    }
    SUBCASE("bad inputs") {
        auto graph_kind = toy.text;
        graph_kind.kind = RepresentationKind::Graph;
        CHECK_THROWS_AS(train_representations(graph_kind, toy.graph, toy_config(1)), Error);
        auto c = toy_config(1);
        c.tau = 0;
        CHECK_THROWS_AS(c.validate(), Error);
        c = toy_config(1);
        c.hop_fanouts = {1, 0, 1};
        CHECK_THROWS_AS(c.validate(), Error);
    }
}

TEST_CASE("checkpoint round trip") {
    fixture::TempDir dir("ckpt");
    const auto toy = fixture::two_cluster_toy(4);
    auto c = toy_config(3);
    c.max_iterations = 10;
    const auto res = train_representations(toy.text, toy.graph, c);
    save_checkpoint(dir / "r.mrep", res, {{"seed", 3}});
    const auto ck = load_checkpoint(dir / "r.mrep");
    CHECK(ck.representations.values == res.representations.values);
    CHECK(ck.encoder.w1 == res.encoder.w1);
    CHECK(ck.encoder.slope2 == res.encoder.slope2);
    CHECK(ck.iteration == res.iterations_run);
    CHECK(ck.rng == res.rng);
    // A checkpoint is also a plain embedding file.
    CHECK(read_embedding_file(dir / "r.mrep").matrix.values == res.representations.values);
}

TEST_CASE("neighbor index") {
    Matrix line = Matrix::Zero(8, 1);
    line(4, 0) = 0;
    line(5, 0) = 1;
    line(6, 0) = 3;
    line(7, 0) = 7;
    const std::vector<DenseIndex> eligible{4, 5, 6, 7};

    SUBCASE("1-D example") {
        const auto s = build_neighbor_sets(line, 1, eligible);
        CHECK(s.query(4)[0] == 5);
        CHECK(s.query(5)[0] == 4);
        CHECK(s.query(6)[0] == 5);
        CHECK(s.query(7)[0] == 6);
        CHECK(!s.indexed(0));
        try {
            s.query(2);
            FAIL("expected NotIndexed");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NotIndexed);
        }
    }
    SUBCASE("ties go to the lower index") {
        Matrix r = Matrix::Zero(7, 1);
        r(4, 0) = -1;
        r(5, 0) = 0;
        r(6, 0) = 1;
        const std::vector<DenseIndex> el{4, 5, 6};
        const auto s = build_neighbor_sets(r, 2, el);
        CHECK(s.query(5)[0] == 4);
        CHECK(s.query(5)[1] == 6);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(build_neighbor_sets(line, 4, eligible), Error);
        try {
            build_neighbor_sets(line, 4, eligible);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TooFewConcepts);
        }
        const std::vector<DenseIndex> with_special{0, 4, 5};
        CHECK_THROWS_AS(build_neighbor_sets(line, 1, with_special), Error);
    }
    SUBCASE("matches brute force") {
        Rng rng(21);
        for (int rep = 0; rep < 10; ++rep) {
            const auto n = 4 + static_cast<Eigen::Index>(uniform_index(rng, 120)) + 10;
            const int h = 1 + static_cast<int>(uniform_index(rng, 8));
            Matrix r(n, h);
            for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = standard_normal(rng);
            std::vector<DenseIndex> el;
            for (DenseIndex k = 4; k < n; ++k) el.push_back(k);
            const std::size_t m = 1 + uniform_index(rng, 8);
            const auto s = build_neighbor_sets(r, m, el);
            const auto want = oracle::brute_knn(r, m, el);
            for (auto k : el) {
                const auto got = s.query(k);
                CHECK(std::vector<DenseIndex>(got.begin(), got.end()) == want[k]);
            }
        }
    }
    SUBCASE("same-domain filter") {
        std::vector<Domain> domains(8, Domain::Special);
        domains[4] = domains[6] = Domain::Drug;
        domains[5] = domains[7] = Domain::Condition;
        NeighborOptions opt;
        opt.same_domain = true;
        const auto s = build_neighbor_sets(line, 1, eligible, opt, domains);
        CHECK(s.query(4)[0] == 6);
        CHECK(s.query(5)[0] == 7);
    }
    SUBCASE("container round trip and corruption") {
        fixture::TempDir dir("mnbr");
        const auto s = build_neighbor_sets(line, 2, eligible);
        save_neighbor_sets(dir / "n.mnbr", s, {{"m", 2}});
        const auto back = load_neighbor_sets(dir / "n.mnbr");
        CHECK(back.sets.table() == s.table());
        CHECK(back.sets.checksum() == s.checksum());
        CHECK(back.provenance["m"] == 2);
        auto bytes = io::read_file(dir / "n.mnbr");
        bytes[0] = 'X';
        io::write_file(dir / "bad.mnbr", bytes);
        try {
            load_neighbor_sets(dir / "bad.mnbr");
            FAIL("expected ArtifactError");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ArtifactError);
        }
        io::write_file(dir / "short.mnbr", bytes.substr(0, 20));
        CHECK_THROWS_AS(load_neighbor_sets(dir / "short.mnbr"), Error);
    }
}

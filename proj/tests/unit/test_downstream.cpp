#include <doctest.h>

#include <algorithm>
#include <memory>

#include "medrep/augment.hpp"
#include "medrep/benchmark.hpp"
#include "medrep/classifier.hpp"
#include "medrep/error.hpp"
#include "medrep/metrics.hpp"
#include "medrep/neighbors.hpp"
#include "oracles.hpp"

using namespace medrep;

namespace {

PatientTrajectory make_traj(const std::vector<std::uint32_t>& body, std::uint32_t domain = 1) {
    PatientTrajectory t;
    t.patient_id = "p";
    t.push(special::kCls, 30, 1, 1, 0);
    for (std::size_t i = 0; i < body.size(); ++i) t.push(body[i], 30, 1, static_cast<std::uint32_t>(i + 1), domain);
    t.push(special::kSep, 30, 1, static_cast<std::uint32_t>(body.size()), 0);
    return t;
}

// Eight rows: specials 0..3, concepts 4..7; each concept's single neighbor
// is the next one around the ring.
NeighborSets ring() { return NeighborSets(8, 1, {NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor,
                                                 NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor, 5, 6, 7, 4}); }

const std::vector<Domain> kRingDomains{Domain::Special,   Domain::Special, Domain::Special, Domain::Special,
                                       Domain::Condition, Domain::Drug,    Domain::Measurement, Domain::Procedure};

}  // namespace

TEST_CASE("augmentation") {
    const auto sets = ring();
    const auto t = make_traj(std::vector<std::uint32_t>(1000, 4));
    Rng rng(3);

    SUBCASE("p = 0 is the identity") {
        AugmentStats st;
        CHECK(augment_trajectory(t, sets, kRingDomains, 0.0, rng, &st) == t);
        CHECK(st.eligible == 1000);
        CHECK(st.replaced == 0);
    }
    SUBCASE("p = 1 with one neighbor replaces every concept deterministically") {
        const auto a = augment_trajectory(t, sets, kRingDomains, 1.0, rng);
        CHECK(a.concept_idx.front() == special::kCls);
        CHECK(a.concept_idx.back() == special::kSep);
        CHECK(std::count(a.concept_idx.begin(), a.concept_idx.end(), 5u) == 1000);
        CHECK(std::count(a.domain_idx.begin(), a.domain_idx.end(), 2u) == 1000);
        CHECK(a.age_idx == t.age_idx);
        CHECK(a.visit_idx == t.visit_idx);
        CHECK(a.record_idx == t.record_idx);
    }
    SUBCASE("replaced count within the binomial 99% interval") {
        int inside = 0;
        for (int rep = 0; rep < 20; ++rep) {
            AugmentStats st;
            augment_trajectory(t, sets, kRingDomains, 0.5, rng, &st);
            inside += st.replaced >= 459 && st.replaced <= 541;
        }
        CHECK(inside >= 18);
    }
    SUBCASE("unindexed concepts fall back to themselves") {
        const NeighborSets partial(8, 1, {NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor,
                                          NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor, 6, 7, 4});
        AugmentStats st;
        CHECK(augment_trajectory(t, partial, kRingDomains, 1.0, rng, &st) == t);
        CHECK(st.fallbacks == 1000);
    }
    SUBCASE("dataset factor and determinism") {
        std::vector<PatientTrajectory> in{make_traj({4, 5, 6}), make_traj({7, 7}), make_traj({4})};
        AugmentConfig cfg;
        cfg.factor = 5;
        cfg.replace_prob = 0.5;
        cfg.rng_seed = 9;
        const auto out = augment_dataset(in, sets, kRingDomains, cfg);
        REQUIRE(out.size() == 15);
        for (std::size_t i = 0; i < in.size(); ++i) {
            CHECK(out[i * 5] == in[i]);
            for (int c = 1; c < 5; ++c) CHECK(out[i * 5 + c].size() == in[i].size());
        }
        CHECK(augment_dataset(in, sets, kRingDomains, cfg) == out);
        cfg.factor = 0;
        CHECK_THROWS_AS(augment_dataset(in, sets, kRingDomains, cfg), Error);
    }
}

TEST_CASE("metrics") {
    const std::vector<int> y{0, 0, 1, 1};
    SUBCASE("examples") {
        const std::vector<double> s{0.1, 0.2, 0.7, 0.9};
        CHECK(auroc(s, y) == 1.0);
        CHECK(auroc(std::vector<double>(4, 0.3), y) == 0.5);
        const auto yr = youden_threshold(s, y);
        CHECK(yr.threshold == 0.7);
        CHECK(yr.f1 == 1.0);
        const std::vector<double> inverted{0.9, 0.7, 0.2, 0.1};
        const auto inv = youden_threshold(inverted, y);
        CHECK(inv.threshold == 0.1);  // J = 0 plateau, lowest threshold
        CHECK(inv.f1 == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("single class is undefined") {
        const std::vector<double> s{0.1, 0.2};
        const std::vector<int> one{1, 1};
        CHECK_THROWS_AS(auroc(s, one), Error);
        CHECK_THROWS_AS(youden_threshold(s, one), Error);
    }
    SUBCASE("random instances match the oracles") {
        Rng rng(31);
        for (int rep = 0; rep < 200; ++rep) {
            std::vector<double> s(50);
            std::vector<int> lab(50);
            for (int i = 0; i < 50; ++i) {
                s[i] = std::round(standard_normal(rng) * 4) / 4;  // plenty of ties
                lab[i] = bernoulli(rng, 0.3);
            }
            lab[0] = 0;
            lab[1] = 1;
            CHECK(std::abs(auroc(s, lab) - oracle::pair_auroc(s, lab)) < 1e-9);
            const auto want = oracle::exhaustive_youden(s, lab);
            const auto got = youden_threshold(s, lab);
            CHECK(got.threshold == want.threshold);
            CHECK(got.f1 == doctest::Approx(want.f1).epsilon(1e-12));
            std::vector<double> mono(s);
            for (auto& v : mono) v = std::exp(3 * v) - 7;
            CHECK(std::abs(auroc(mono, lab) - auroc(s, lab)) < 1e-12);
        }
    }
}

namespace {

// Concept 4 marks positives and 5 negatives; 6..9 are shared noise.
LabeledSet separable(std::size_t n, Rng& rng) {
    LabeledSet set;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = bernoulli(rng, 0.2);
        std::vector<std::uint32_t> body{y ? 4u : 5u};
        for (int j = 0; j < 4; ++j) body.push_back(6 + static_cast<std::uint32_t>(uniform_index(rng, 4)));
        set.trajectories.push_back(make_traj(body));
        set.labels.push_back(y);
    }
    return set;
}

LabeledSet noise(std::size_t n, Rng& rng) {
    LabeledSet set;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint32_t> body;
        for (int j = 0; j < 6; ++j) body.push_back(4 + static_cast<std::uint32_t>(uniform_index(rng, 40)));
        set.trajectories.push_back(make_traj(body));
        set.labels.push_back(bernoulli(rng, 0.5));
    }
    return set;
}

std::shared_ptr<const Matrix> random_r(Eigen::Index n, Eigen::Index h, Rng& rng) {
    auto r = std::make_shared<Matrix>(n, h);
    for (Eigen::Index i = 0; i < r->size(); ++i) r->data()[i] = standard_normal(rng);
    return r;
}

ClassifierConfig fast() {
    ClassifierConfig c;
    c.learning_rate = 1e-2;
    c.max_epochs = 20;
    c.seed = 4;
    return c;
}

}  // namespace

TEST_CASE("oversampled batches") {
    Rng rng(2);
    std::vector<int> labels(500, 0);
    for (int i = 0; i < 500; i += 50) labels[i] = 1;
    const auto batches = make_oversampled_batches(labels, ClassifierConfig{}, rng);
    std::vector<bool> seen(500, false);
    for (const auto& b : batches) {
        std::size_t pos = 0;
        for (auto i : b) {
            pos += labels[i];
            seen[i] = true;
        }
        CHECK(pos >= 3);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](bool s) { return s; }));
    std::vector<int> two(100, 0);
    two[3] = two[70] = 1;
    for (const auto& b : make_oversampled_batches(two, ClassifierConfig{}, rng))
        CHECK(std::count_if(b.begin(), b.end(), [&](auto i) { return two[i] == 1; }) >= 2);
}

TEST_CASE("frozen classifier") {
    Rng rng(5);
    SUBCASE("separable encodings") {
        auto r = random_r(10, 8, rng);
        const auto train = separable(400, rng), val = separable(100, rng), test = separable(200, rng);
        const auto clf = train_classifier(r, train, val, fast());
        CHECK(auroc(clf.score_all(test.trajectories), test.labels) > 0.99);
        CHECK(clf.representation_checksum == matrix_checksum(*r));
    }
    SUBCASE("label-independent encodings stay near chance") {
        auto r = random_r(44, 8, rng);
        const auto train = noise(1000, rng), val = noise(300, rng), test = noise(3000, rng);
        const auto clf = train_classifier(r, train, val, fast());
        CHECK(std::abs(auroc(clf.score_all(test.trajectories), test.labels) - 0.5) < 0.05);
    }
    SUBCASE("deterministic") {
        auto r = random_r(10, 4, rng);
        const auto train = separable(200, rng), val = separable(50, rng);
        const auto a = train_classifier(r, train, val, fast());
        const auto b = train_classifier(r, train, val, fast());
        CHECK(a.weights == b.weights);
        CHECK(a.bias == b.bias);
    }
    SUBCASE("errors") {
        auto r = random_r(10, 4, rng);
        auto train = separable(50, rng);
        std::fill(train.labels.begin(), train.labels.end(), 0);
        try {
            train_classifier(r, train, separable(20, rng), fast());
            FAIL("expected DegenerateLabels");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateLabels);
        }
        PatientTrajectory empty;
        empty.push(0, 0, 0, 0, 0);
        CHECK_THROWS_AS(encode_trajectory(empty, *r), Error);
        CHECK_THROWS_AS(encode_trajectory(make_traj({99}), *r), Error);
    }
}

TEST_CASE("trainable-index baseline") {
    Rng rng(6);
    const auto train = separable(400, rng), val = separable(100, rng), test = separable(200, rng);
    const auto clf = train_trainable_index(10, 8, train, val, fast());
    CHECK(clf.table.rows() == 10);
    CHECK(auroc(clf.score_all(test.trajectories), test.labels) > 0.95);
}

TEST_CASE("benchmark harness") {
    Rng rng(7);
    auto to_task = [](LabeledSet s, Task task) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            s.trajectories[i].patient_id = "p" + std::to_string(i);
            s.trajectories[i].labels = {{task, s.trajectories[i].patient_id, s.labels[i], {}}};
        }
        return s.trajectories;
    };
    std::vector<TaskData> tasks;
    for (Task task : {Task::MT, Task::RA}) {
        TaskData d;
        d.task = task;
        d.internal = to_task(separable(300, rng), task);
        d.externals = {{"ext_a", to_task(separable(100, rng), task)}, {"ext_b", to_task(separable(80, rng), task)}};
        tasks.push_back(std::move(d));
    }
    auto r = random_r(10, 6, rng);
    BenchmarkConfig cfg;
    cfg.classifier = fast();
    cfg.seed = 3;

    SUBCASE("one row per task and dataset") {
        const auto rep = run_benchmark(tasks, r, nullptr, {}, cfg);
        REQUIRE(rep.rows.size() == 6);
        CHECK(rep.rows[0].dataset == "internal");
        CHECK(rep.rows[1].dataset == "ext_a");
        CHECK(rep.rows[2].n == 80);
        for (const auto& row : rep.rows) {
            CHECK(row.factor == 1);
            CHECK(row.auroc >= 0.0);
            CHECK(row.auroc <= 1.0);
            CHECK(row.incidence > 0.0);
        }
        const auto tsv = format_report_tsv(rep);
        CHECK(tsv.rfind("task\tdataset\tmodel\tfactor\tvalidation_auroc\tauroc\tf1\tthreshold\tn\tincidence\n", 0) == 0);
        CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 7);
        CHECK(report_json(rep)["rows"].size() == 6);
    }
    SUBCASE("factors above one need neighbor sets") {
        cfg.factors = {1, 5};
        CHECK_THROWS_AS(run_benchmark(tasks, r, nullptr, {}, cfg), Error);
        const auto sets = ring();
        const std::vector<Domain> doms{Domain::Special, Domain::Special, Domain::Special, Domain::Special,
                                       Domain::Condition, Domain::Condition, Domain::Condition, Domain::Condition,
                                       Domain::Condition, Domain::Condition};
        const NeighborSets wide(10, 1, {NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor, NeighborSets::kNoNeighbor,
                                        NeighborSets::kNoNeighbor, 5, 4, 7, 8, 9, 6});
        const auto rep = run_benchmark(tasks, r, &wide, doms, cfg);
        CHECK(rep.rows.size() == 6);
        for (const auto& row : rep.rows) CHECK((row.factor == 1 || row.factor == 5));
    }
    SUBCASE("stratified split keeps class proportions") {
        std::vector<int> labels(1000, 0);
        for (int i = 0; i < 100; ++i) labels[i * 10] = 1;
        const auto s = stratified_split(labels, 1);
        CHECK(s.train.size() + s.validation.size() + s.test.size() == 1000);
        auto pos = [&](const std::vector<std::size_t>& idx) {
            return std::count_if(idx.begin(), idx.end(), [&](auto i) { return labels[i] == 1; });
        };
        CHECK(pos(s.train) == 70);
        CHECK(pos(s.validation) == 15);
        CHECK(pos(s.test) == 15);
        CHECK(stratified_split(labels, 1).test == s.test);
    }
}

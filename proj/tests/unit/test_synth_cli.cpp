#include <doctest.h>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <map>

#include "fixtures.hpp"
#include "medrep/benchmark.hpp"
#include "medrep/cli.hpp"
#include "medrep/config.hpp"
#include "medrep/error.hpp"
#include "medrep/io.hpp"
#include "medrep/metrics.hpp"
#include "medrep/neighbors.hpp"
#include "medrep/synth.hpp"
#include "medrep/trainer.hpp"

using namespace medrep;
namespace fs = std::filesystem;

TEST_CASE("synthetic vocabulary") {
    synth::SynthSpec spec;
    spec.seed = 3;
    const auto v = synth::generate_vocabulary(spec);
    CHECK(v.catalog.size() == 204);
    CHECK(v.text.rows() == 204);
    CHECK(v.graph.num_nodes() == 204);
    CHECK(std::count(v.held_out.begin(), v.held_out.end(), true) == 40);

    double intra = 0, inter = 0, intra_pairs = 0, inter_pairs = 0;
    for (DenseIndex i = special::kCount; i < 204; ++i)
        for (DenseIndex j = i + 1; j < 204; ++j) (v.cluster_of[i] == v.cluster_of[j] ? intra_pairs : inter_pairs) += 1;
    for (auto [a, b] : v.graph.edges()) (v.cluster_of[a] == v.cluster_of[b] ? intra : inter) += 1;
    CHECK(intra / intra_pairs > 0.25);
    CHECK(intra / intra_pairs < 0.35);
    CHECK(inter / inter_pairs < 0.02);

    const auto again = synth::generate_vocabulary(spec);
    CHECK(format_catalog(again.catalog) == format_catalog(v.catalog));
    CHECK(again.graph.edges() == v.graph.edges());
    CHECK(again.text.values == v.text.values);

    spec.intra_edge_prob = 0.005;
    CHECK_THROWS_AS(spec.validate(), Error);
}

TEST_CASE("synthetic cohort") {
    synth::SynthSpec spec;
    spec.seed = 5;
    const auto v = synth::generate_vocabulary(spec);
    const auto c = synth::generate_cohort(spec, v, 0, "i");
    CHECK(c.patients.size() == 5000);
    for (Task task : kAllTasks) {
        const auto& labels = c.labels[static_cast<int>(task)];
        REQUIRE(labels.size() == 5000);
        const double rate = std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.label == 1; }) / 5000.0;
        CHECK(std::abs(rate - spec.incidence[static_cast<int>(task)]) <= 0.005);
        CHECK(derive_labels(c.visits, task) == labels);
    }
    CHECK(std::is_sorted(c.records.begin(), c.records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.patient_id, a.time) < std::tie(b.patient_id, b.time);
    }));
    for (const auto& r : c.records) CHECK(!v.held_out[*v.catalog.find(r.concept_id)]);

    const auto again = synth::generate_cohort(spec, v, 0, "i");
    CHECK(again.records == c.records);
    CHECK(synth::generate_cohort(spec, v, 1, "e").records != c.records);
}

TEST_CASE("vocabulary shift") {
    synth::SynthSpec spec;
    spec.num_patients = 20000;
    spec.seed = 8;
    const auto v = synth::generate_vocabulary(spec);
    const auto c = synth::generate_cohort(spec, v, 1, "e");
    REQUIRE(c.records.size() >= 100000);
    Rng rng(1);

    synth::ShiftStats st;
    const auto shifted = synth::apply_vocabulary_shift(c.records, v, 0.36, rng, &st);
    CHECK(std::abs(static_cast<double>(st.replaced) / st.records - 0.36) < 0.01);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < shifted.size(); ++i) {
        const auto& a = c.records[i];
        const auto& b = shifted[i];
        CHECK(a.time == b.time);
        CHECK(a.visit_id == b.visit_id);
        CHECK(a.patient_id == b.patient_id);
        if (a.concept_id != b.concept_id) {
            ++changed;
            const auto ka = *v.catalog.find(a.concept_id), kb = *v.catalog.find(b.concept_id);
            CHECK(v.held_out[kb]);
            CHECK(v.cluster_of[ka] == v.cluster_of[kb]);
        }
    }
    CHECK(changed == st.replaced);
    CHECK(synth::apply_vocabulary_shift(c.records, v, 0.0, rng) == c.records);
}

TEST_CASE("no signal at beta 0") {
    synth::SynthSpec spec;
    spec.beta = 0.0;
    spec.num_patients = 4000;
    spec.seed = 2;
    spec.incidence = {0.3, 0.3, 0.3};
    const auto v = synth::generate_vocabulary(spec);
    const auto c = synth::generate_cohort(spec, v, 0, "i");
    const auto bins = fit_decile_bins(c.records);
    const auto traj = build_task_cohort(c.records, c.patients, c.visits, v.catalog, bins, Task::MT);
    const auto labels = labeled_all(traj, Task::MT).labels;
    const auto split = stratified_split(labels, 1);
    auto r = std::make_shared<const Matrix>(v.text.values);
    ClassifierConfig cfg;
    cfg.learning_rate = 1e-2;
    const auto clf = train_classifier(r, labeled_subset(traj, Task::MT, split.train),
                                      labeled_subset(traj, Task::MT, split.validation), cfg);
    const auto test = labeled_subset(traj, Task::MT, split.test);
    CHECK(std::abs(auroc(clf.score_all(test.trajectories), test.labels) - 0.5) < 0.07);
}

TEST_CASE("config files") {
    const auto c = ConfigFile::parse(
        "seed = 7  # top level\n[a]\nname = \"x # not a comment\"\nlist = [1, 2, 3]\nflag = true\nrate = 1e-3\n");
    CHECK(c.get_uint("seed", 0) == 7);
    CHECK(c.get_string("a.name") == "x # not a comment");
    CHECK(c.get_list("a.list") == std::vector<std::string>{"1", "2", "3"});
    CHECK(c.get_bool("a.flag", false));
    CHECK(c.get_double("a.rate") == 1e-3);
    CHECK(c.get_int("a.missing", 4) == 4);
    CHECK(c.section("a").size() == 4);
    CHECK_THROWS_AS(c.get_int("a.missing"), Error);
    CHECK_THROWS_AS(c.get_int("a.name"), Error);
    CHECK_THROWS_AS(ConfigFile::parse("[open\n"), Error);
    CHECK_THROWS_AS(ConfigFile::parse("novalue\n"), Error);
    CHECK(c.hash({"a"}) == ConfigFile::parse("[a]\nflag=true\nlist=[1, 2, 3]\nname=\"x # not a comment\"\nrate=1e-3\n").hash({"a"}));
}

namespace {

std::string small_config(const std::string& extra = {}) {
    return "seed = 4\n[paths]\noutput_dir = \"out\"\nexternal = [\"external\"]\n"
           "[synth]\nnum_clusters = 3\nconcepts_per_cluster = 12\nintra_edge_prob = 0.4\ninter_edge_prob = 0.02\n"
           "num_patients = 300\nmin_visits = 1\nmax_visits = 2\nbeta = 3.0\nshift_rate = 0.36\ntext_dim = 8\n"
           "incidence = [0.1, 0.3, 0.1]\n"
           "[train]\nbatch_size = 16\nmax_iterations = 10\nhop_fanouts = [5, 5, 5]\n"
           "[neighbors]\nm = 3\n[augment]\nfactor = 2\n"
           "[classifier]\nlearning_rate = 1e-2\nmax_epochs = 3\n"
           "[benchmark]\ntasks = [\"LLOS\"]\nfactors = [1, 2]\nmodels = [\"frozen\"]\n" +
           extra;
}

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "-q");
    return cli::run_cli(args);
}

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = io::read_file(e.path());
    return files;
}

}  // namespace

TEST_CASE("cli") {
    spdlog::set_level(spdlog::level::warn);
    fixture::TempDir dir("cli");
    const auto cfg = (dir / "cfg.toml").string();
    io::write_file(cfg, small_config());

    SUBCASE("missing required field is an input error") {
        auto text = small_config();
        text.erase(text.find("num_patients = 300\n"), 19);
        io::write_file(cfg, text);
        CHECK(run({"synth", "-c", cfg}) == cli::kExitInput);
        CHECK(run({"synth", "-c", (dir / "absent.toml").string()}) == cli::kExitInput);
        CHECK(run({"no-such-command"}) == cli::kExitInput);
    }
    SUBCASE("missing edges file") {
        REQUIRE(run({"synth", "-c", cfg}) == 0);
        fs::remove(dir / "out" / "edges.tsv");
        CHECK(run({"train-reps", "-c", cfg}) == cli::kExitInput);
    }
    SUBCASE("zero iterations writes the untrained forward pass") {
        io::write_file(cfg, small_config() + "");
        auto text = small_config();
        text.replace(text.find("max_iterations = 10"), 19, "max_iterations = 0");
        io::write_file(cfg, text);
        REQUIRE(run({"synth", "-c", cfg}) == 0);
        REQUIRE(run({"train-reps", "-c", cfg}) == 0);
        const auto ck = graph::load_checkpoint(dir / "out" / "representations.mrep");
        const auto catalog = load_catalog(dir / "out" / "concepts.tsv");
        const auto g = load_graph(dir / "out" / "edges.tsv", catalog);
        const auto text_r = read_embedding_file(dir / "out" / "text_embeddings.mrep").matrix.values;
        CHECK(ck.iteration == 0);
        CHECK((ck.representations.values - graph::gcn_forward(ck.encoder, text_r, g.edges())).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("corrupt neighbor file is an artifact error") {
        REQUIRE(run({"synth", "-c", cfg}) == 0);
        REQUIRE(run({"train-reps", "-c", cfg}) == 0);
        REQUIRE(run({"neighbors", "-c", cfg}) == 0);
        REQUIRE(run({"build-trajectories", "-c", cfg}) == 0);
        auto bytes = io::read_file(dir / "out" / "neighbors.mnbr");
        bytes.replace(0, 4, "JUNK");
        io::write_file(dir / "out" / "neighbors.mnbr", bytes);
        CHECK(run({"augment", "-c", cfg}) == cli::kExitArtifact);
    }
    SUBCASE("stale upstream artifacts are rejected") {
        REQUIRE(run({"synth", "-c", cfg}) == 0);
        REQUIRE(run({"train-reps", "-c", cfg}) == 0);
        REQUIRE(run({"synth", "-c", cfg, "--seed", "99"}) == 0);
        CHECK(run({"neighbors", "-c", cfg}) == cli::kExitArtifact);
    }
    SUBCASE("full pipeline is reproducible byte for byte") {
        REQUIRE(run({"run", "-c", cfg}) == 0);
        const auto first = tree(dir / "out");
        CHECK(first.count("report/report.tsv") == 1);
        CHECK(first.count("neighbors.mnbr") == 1);
        fs::remove_all(dir / "out");
        REQUIRE(run({"run", "-c", cfg}) == 0);
        CHECK(tree(dir / "out") == first);
    }
}

#include "medrep/cli.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "medrep/augment.hpp"
#include "medrep/benchmark.hpp"
#include "medrep/config.hpp"
#include "medrep/description.hpp"
#include "medrep/io.hpp"
#include "medrep/neighbors.hpp"
#include "medrep/synth.hpp"
#include "medrep/trainer.hpp"
#include "medrep/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace medrep::cli {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::DivergedError:
        case ErrorCode::DegenerateEmbedding:
            return kExitNumeric;
        case ErrorCode::ArtifactError:
        case ErrorCode::ShapeError:
            return kExitArtifact;
        default:
            return kExitInput;
    }
}

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> report_dir;
    std::vector<int> factors;
    std::optional<double> replace_prob;
};

class Pipeline {
public:
    Pipeline(const fs::path& config_path, const Overrides& o) : cfg_(ConfigFile::load(config_path)) {
        base_ = config_path.parent_path();
        if (o.seed) cfg_.set("seed", std::to_string(*o.seed));
        if (o.report_dir) cfg_.set("paths.report_dir", fs::absolute(*o.report_dir).string());
        if (!o.factors.empty()) {
            std::string list = "[";
            for (std::size_t i = 0; i < o.factors.size(); ++i) list += (i ? ", " : "") + std::to_string(o.factors[i]);
            cfg_.set("benchmark.factors", list + "]");
            cfg_.set("augment.factor", std::to_string(o.factors.back()));
        }
        if (o.replace_prob) cfg_.set("augment.replace_prob", std::to_string(*o.replace_prob));
        if (!cfg_.has("seed")) throw Error(ErrorCode::ConfigError, "missing config key 'seed'");
        seed_ = cfg_.get_uint("seed", 0);
        config_hash_ = io::hex64(cfg_.hash());
        out_ = resolve(cfg_.get_string("paths.output_dir", "."));
    }

    const ConfigFile& cfg() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }

    fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : base_ / path;
    }
    fs::path path(const std::string& key, const std::string& default_name) const {
        return cfg_.has("paths." + key) ? resolve(cfg_.get_string("paths." + key)) : out_ / default_name;
    }
    fs::path output_dir() const { return out_; }
    std::vector<std::string> externals() const {
        return cfg_.has("paths.external") ? cfg_.get_list("paths.external") : std::vector<std::string>{};
    }
    fs::path external_dir(const std::string& name) const { return resolve_under_out(name); }

    json provenance(const std::string& stage) const {
        return {{"stage", stage}, {"config_hash", config_hash_}, {"seed", seed_}};
    }

    std::vector<Task> tasks() const {
        std::vector<Task> out;
        if (!cfg_.has("benchmark.tasks")) return {std::begin(kAllTasks), std::end(kAllTasks)};
        for (const auto& t : cfg_.get_list("benchmark.tasks")) out.push_back(parse_task(t));
        return out;
    }

private:
    fs::path resolve_under_out(const std::string& p) const {
        const fs::path path(p);
        return path.is_absolute() ? path : out_ / path;
    }

    ConfigFile cfg_;
    fs::path base_, out_;
    std::uint64_t seed_ = 0;
    std::string config_hash_;
};

std::string checksum_hex(std::uint64_t v) { return io::hex64(v); }

void write_tsv(const fs::path& path, const json& prov, const std::string& body) {
    io::write_file(path, io::comment_lines(prov) + body);
}

// Upstream artifacts must carry the same value for `key`; a mismatch
// means a stale or foreign file.
void expect_same(const json& prov, const std::string& key, const std::string& expected, const fs::path& file) {
    if (!prov.contains(key)) {
        spdlog::warn("{} carries no {}; consistency not checked", file.string(), key);
        return;
    }
    if (prov[key].get<std::string>() != expected)
        throw Error(ErrorCode::ArtifactError, file.string() + ": " + key + " " + prov[key].get<std::string>() +
                                                  " does not match " + expected + " (stale artifact?)");
}

synth::SynthSpec synth_spec(const Pipeline& p) {
    const auto& c = p.cfg();
    synth::SynthSpec s;
    s.num_clusters = static_cast<int>(c.get_int("synth.num_clusters"));
    s.concepts_per_cluster = static_cast<int>(c.get_int("synth.concepts_per_cluster"));
    s.intra_edge_prob = c.get_double("synth.intra_edge_prob");
    s.inter_edge_prob = c.get_double("synth.inter_edge_prob");
    s.num_patients = static_cast<int>(c.get_int("synth.num_patients"));
    s.min_visits = static_cast<int>(c.get_int("synth.min_visits"));
    s.max_visits = static_cast<int>(c.get_int("synth.max_visits"));
    s.beta = c.get_double("synth.beta");
    s.shift_rate = c.get_double("synth.shift_rate");
    s.min_events_per_visit = static_cast<int>(c.get_int("synth.min_events_per_visit", s.min_events_per_visit));
    s.max_events_per_visit = static_cast<int>(c.get_int("synth.max_events_per_visit", s.max_events_per_visit));
    s.propensity_spread = c.get_double("synth.propensity_spread", s.propensity_spread);
    s.holdout_fraction = c.get_double("synth.holdout_fraction", s.holdout_fraction);
    s.text_dim = static_cast<int>(c.get_int("synth.text_dim", s.text_dim));
    s.core_tokens = static_cast<int>(c.get_int("synth.core_tokens", s.core_tokens));
    s.core_per_concept = static_cast<int>(c.get_int("synth.core_per_concept", s.core_per_concept));
    s.noise_tokens = static_cast<int>(c.get_int("synth.noise_tokens", s.noise_tokens));
    s.incidence[0] = c.get_double("synth.incidence_mt", s.incidence[0]);
    s.incidence[1] = c.get_double("synth.incidence_llos", s.incidence[1]);
    s.incidence[2] = c.get_double("synth.incidence_ra", s.incidence[2]);
    s.seed = p.seed();
    s.validate();
    return s;
}

void write_cohort(const fs::path& dir, const synth::SynthCohort& cohort, const std::vector<ClinicalRecord>& records,
                  const json& prov) {
    write_tsv(dir / "records.tsv", prov, format_records(records));
    write_tsv(dir / "patients.tsv", prov, format_patients(cohort.patients));
    write_tsv(dir / "visits.tsv", prov, format_visits(cohort.visits));
}

json incidence_summary(const synth::SynthCohort& cohort) {
    json out = json::object();
    for (Task t : kAllTasks) {
        const auto& labels = cohort.labels[static_cast<std::size_t>(t)];
        std::size_t pos = 0;
        for (const auto& l : labels) pos += l.label != 0;
        out[std::string(to_string(t))] = labels.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(labels.size());
    }
    return out;
}

void cmd_synth(const Pipeline& p) {
    const auto spec = synth_spec(p);
    const auto external_n = p.cfg().get_int("synth.external_patients", spec.num_patients);
    const auto vocab = synth::generate_vocabulary(spec);
    const auto cat_sum = checksum_hex(catalog_checksum(vocab.catalog));
    auto prov = p.provenance("synth");
    prov["catalog_checksum"] = cat_sum;

    save_catalog(vocab.catalog, p.path("catalog", "concepts.tsv"), io::comment_lines(prov));
    write_tsv(p.path("edges", "edges.tsv"), prov, format_graph(vocab.graph, vocab.catalog));
    write_tsv(p.path("descriptions", "descriptions.tsv"), prov, format_descriptions(vocab.descriptions));
    save_embedding_matrix(p.path("embeddings", "text_embeddings.mrep"), vocab.text, EmbeddingDType::F64, prov);

    const auto internal = synth::generate_cohort(spec, vocab, 0, "P");
    write_tsv(p.path("records", "records.tsv"), prov, format_records(internal.records));
    write_tsv(p.path("patients", "patients.tsv"), prov, format_patients(internal.patients));
    write_tsv(p.path("visits", "visits.tsv"), prov, format_visits(internal.visits));
    json summary = {{"internal", {{"patients", internal.patients.size()},
                                  {"records", internal.records.size()},
                                  {"incidence", incidence_summary(internal)}}}};

    const auto externals = p.externals();
    if (!externals.empty() && external_n > 0) {
        if (externals.size() > 1) throw Error(ErrorCode::ConfigError, "synth writes a single external cohort");
        auto ext_spec = spec;
        ext_spec.num_patients = static_cast<int>(external_n);
        const auto ext = synth::generate_cohort(ext_spec, vocab, 1, "E");
        Rng rng(derive_seed(p.seed(), 0x5417));
        synth::ShiftStats stats;
        const auto shifted = synth::apply_vocabulary_shift(ext.records, vocab, spec.shift_rate, rng, &stats);
        auto ext_prov = prov;
        ext_prov["shift_rate"] = spec.shift_rate;
        write_cohort(p.external_dir(externals.front()), ext, shifted, ext_prov);
        summary["external"] = {{"name", externals.front()},
                               {"patients", ext.patients.size()},
                               {"records", shifted.size()},
                               {"replaced", stats.replaced},
                               {"fallbacks", stats.fallbacks},
                               {"incidence", incidence_summary(ext)}};
    }
    summary["provenance"] = prov;
    io::write_file(p.output_dir() / "synth_summary.json", summary.dump(2) + "\n");
    spdlog::info("synth: {} concepts, {} edges, {} internal records", vocab.catalog.size(), vocab.graph.num_edges(),
                 internal.records.size());
}

graph::TrainConfig train_config(const Pipeline& p) {
    const auto& c = p.cfg();
    graph::TrainConfig t;
    t.batch_size = static_cast<std::size_t>(c.get_int("train.batch_size", static_cast<std::int64_t>(t.batch_size)));
    t.learning_rate = c.get_double("train.learning_rate", t.learning_rate);
    t.feature_mask_rate = c.get_double("train.feature_mask_rate", t.feature_mask_rate);
    t.edge_drop_rate = c.get_double("train.edge_drop_rate", t.edge_drop_rate);
    t.tau = c.get_double("train.tau", t.tau);
    t.max_iterations = static_cast<int>(c.get_int("train.max_iterations", t.max_iterations));
    t.patience = static_cast<int>(c.get_int("train.patience", t.patience));
    t.weight_decay = c.get_double("train.weight_decay", t.weight_decay);
    t.contrastive_steps_per_kd = static_cast<int>(c.get_int("train.contrastive_steps_per_kd", t.contrastive_steps_per_kd));
    if (c.has("train.hop_fanouts")) {
        const auto f = c.get_list("train.hop_fanouts");
        if (f.size() != 3) throw Error(ErrorCode::ConfigError, "train.hop_fanouts needs three entries");
        for (std::size_t i = 0; i < 3; ++i) t.hop_fanouts[i] = std::stoi(f[i]);
    }
    t.rng_seed = derive_seed(p.seed(), 0x7a1);
    t.validate();
    return t;
}

ConceptCatalog load_catalog_checked(const Pipeline& p) { return load_catalog(p.path("catalog", "concepts.tsv")); }

void cmd_train_reps(const Pipeline& p) {
    const auto config = train_config(p);
    const auto catalog = load_catalog_checked(p);
    const auto cat_sum = checksum_hex(catalog_checksum(catalog));
    const auto graph = load_graph(p.path("edges", "edges.tsv"), catalog);
    const auto emb_path = p.path("embeddings", "text_embeddings.mrep");
    const auto stored = read_embedding_file(emb_path);
    expect_same(stored.provenance, "catalog_checksum", cat_sum, emb_path);
    const auto text = load_embedding_matrix(emb_path, catalog);

    const auto result = graph::train_representations(text, graph, config);
    auto prov = p.provenance("train-reps");
    prov["catalog_checksum"] = cat_sum;
    prov["text_checksum"] = checksum_hex(matrix_checksum(text.values));
    prov["representations_checksum"] = checksum_hex(matrix_checksum(result.representations.values));
    prov["iterations"] = result.iterations_run;
    prov["stopped_early"] = result.stopped_early;
    graph::save_checkpoint(p.path("representations", "representations.mrep"), result, prov);
    write_tsv(p.path("train_log", "train_log.tsv"), prov, graph::format_train_log(result.log));
    spdlog::info("train-reps: {} iterations{}", result.iterations_run, result.stopped_early ? " (early stop)" : "");
}

// Representation matrix used downstream: the trained graph matrix or the
// text matrix it started from.
StoredMatrix load_representations(const Pipeline& p, const std::string& which, const std::string& cat_sum) {
    fs::path path;
    if (which == "graph") path = p.path("representations", "representations.mrep");
    else if (which == "text") path = p.path("embeddings", "text_embeddings.mrep");
    else throw Error(ErrorCode::ConfigError, "representation must be 'graph' or 'text', got '" + which + "'");
    auto stored = read_embedding_file(path);
    expect_same(stored.provenance, "catalog_checksum", cat_sum, path);
    return stored;
}

void cmd_neighbors(const Pipeline& p) {
    const auto catalog = load_catalog_checked(p);
    const auto cat_sum = checksum_hex(catalog_checksum(catalog));
    const auto which = p.cfg().get_string("neighbors.representation", "graph");
    const auto stored = load_representations(p, which, cat_sum);
    const auto& r = stored.matrix.values;
    if (static_cast<std::size_t>(r.rows()) != catalog.size())
        throw Error(ErrorCode::ShapeError, "representation rows do not match the catalog");
    const auto m = static_cast<std::size_t>(p.cfg().get_int("neighbors.m", 30));
    NeighborOptions options;
    options.same_domain = p.cfg().get_bool("neighbors.same_domain", false);
    const auto domains = catalog_domains(catalog);
    const auto sets = build_neighbor_sets(r, m, default_eligible(catalog), options, domains);
    auto prov = p.provenance("neighbors");
    prov["catalog_checksum"] = cat_sum;
    prov["representation"] = which;
    prov["representations_checksum"] = checksum_hex(matrix_checksum(r));
    prov["m"] = m;
    prov["same_domain"] = options.same_domain;
    save_neighbor_sets(p.path("neighbors", "neighbors.mnbr"), sets, prov);
    spdlog::info("neighbors: M={} over {} concepts", m, catalog.size());
}

fs::path trajectory_path(const Pipeline& p, const std::string& cohort, Task task) {
    return p.path("trajectories", "trajectories") / (cohort + "_" + std::string(to_string(task)) + ".mtrj");
}

void cmd_build_trajectories(const Pipeline& p) {
    const auto catalog = load_catalog_checked(p);
    const auto cat_sum = checksum_hex(catalog_checksum(catalog));
    const auto max_len = static_cast<std::size_t>(p.cfg().get_int("trajectory.max_len", kMaxTrajectoryLength));

    auto load_cohort = [](const fs::path& records, const fs::path& patients, const fs::path& visits) {
        auto recs = dedup_hourly_measurements(load_records(records));
        sort_records(recs);
        return std::make_tuple(std::move(recs), load_patients(patients), load_visits(visits));
    };
    auto [records, patients, visits] =
        load_cohort(p.path("records", "records.tsv"), p.path("patients", "patients.tsv"), p.path("visits", "visits.tsv"));
    const auto bins = fit_decile_bins(records);

    std::vector<std::pair<std::string, std::tuple<std::vector<ClinicalRecord>, std::vector<PatientInfo>, std::vector<VisitRecord>>>>
        cohorts;
    cohorts.emplace_back("internal", std::make_tuple(std::move(records), std::move(patients), std::move(visits)));
    for (const auto& name : p.externals()) {
        const auto dir = p.external_dir(name);
        cohorts.emplace_back(fs::path(name).filename().string(),
                             load_cohort(dir / "records.tsv", dir / "patients.tsv", dir / "visits.tsv"));
    }
    for (const auto& [name, data] : cohorts) {
        const auto& [recs, pats, vis] = data;
        for (Task task : p.tasks()) {
            TrajectoryDataset ds;
            ds.max_len = max_len;
            ds.trajectories = build_task_cohort(recs, pats, vis, catalog, bins, task, max_len);
            ds.provenance = p.provenance("build-trajectories");
            ds.provenance["catalog_checksum"] = cat_sum;
            ds.provenance["cohort"] = name;
            ds.provenance["task"] = to_string(task);
            save_dataset(trajectory_path(p, name, task), ds);
            spdlog::info("build-trajectories: {} {} -> {} patients", name, to_string(task), ds.trajectories.size());
        }
    }
}

AugmentConfig augment_config(const Pipeline& p) {
    AugmentConfig a;
    a.replace_prob = p.cfg().get_double("augment.replace_prob", a.replace_prob);
    a.factor = static_cast<int>(p.cfg().get_int("augment.factor", a.factor));
    a.rng_seed = derive_seed(p.seed(), 0xa06);
    a.validate();
    return a;
}

StoredNeighbors load_neighbors_checked(const Pipeline& p, const std::string& cat_sum) {
    const auto path = p.path("neighbors", "neighbors.mnbr");
    auto stored = load_neighbor_sets(path);
    expect_same(stored.provenance, "catalog_checksum", cat_sum, path);
    return stored;
}

TrajectoryDataset load_trajectories_checked(const fs::path& path, const std::string& cat_sum) {
    auto ds = load_dataset(path);
    expect_same(ds.provenance, "catalog_checksum", cat_sum, path);
    return ds;
}

void cmd_augment(const Pipeline& p) {
    const auto config = augment_config(p);
    const auto catalog = load_catalog_checked(p);
    const auto cat_sum = checksum_hex(catalog_checksum(catalog));
    const auto neighbors = load_neighbors_checked(p, cat_sum);
    const auto domains = catalog_domains(catalog);
    if (neighbors.sets.num_concepts() != catalog.size())
        throw Error(ErrorCode::ArtifactError, "neighbor table does not cover the catalog");
    for (Task task : p.tasks()) {
        const auto source = trajectory_path(p, "internal", task);
        const auto in = load_trajectories_checked(source, cat_sum);
        AugmentStats stats;
        TrajectoryDataset out;
        out.max_len = in.max_len;
        out.trajectories = augment_dataset(in.trajectories, neighbors.sets, domains, config, &stats);
        out.provenance = p.provenance("augment");
        out.provenance["catalog_checksum"] = cat_sum;
        out.provenance["task"] = to_string(task);
        out.provenance["factor"] = config.factor;
        out.provenance["replace_prob"] = config.replace_prob;
        out.provenance["neighbor_checksum"] = checksum_hex(neighbors.sets.checksum());
        out.provenance["source_checksum"] = checksum_hex(io::fnv1a64(io::read_file(source)));
        out.provenance["replaced"] = stats.replaced;
        out.provenance["eligible"] = stats.eligible;
        save_dataset(p.path("augmented", "augmented") / ("internal_" + std::string(to_string(task)) + ".mtrj"), out);
        spdlog::info("augment: {} x{} replaced {} of {} tokens", to_string(task), config.factor, stats.replaced,
                     stats.eligible);
    }
}

BenchmarkConfig benchmark_config(const Pipeline& p, ModelKind model) {
    const auto& c = p.cfg();
    BenchmarkConfig b;
    b.model = model;
    if (c.has("benchmark.factors")) {
        b.factors.clear();
        for (const auto& f : c.get_list("benchmark.factors")) b.factors.push_back(std::stoi(f));
    }
    if (model == ModelKind::TrainableIndex && c.has("benchmark.baseline_factors")) {
        b.factors.clear();
        for (const auto& f : c.get_list("benchmark.baseline_factors")) b.factors.push_back(std::stoi(f));
    }
    b.replace_prob = c.get_double("augment.replace_prob", b.replace_prob);
    b.classifier.batch_size = static_cast<std::size_t>(c.get_int("classifier.batch_size", 32));
    b.classifier.learning_rate = c.get_double("classifier.learning_rate", b.classifier.learning_rate);
    b.classifier.weight_decay = c.get_double("classifier.weight_decay", b.classifier.weight_decay);
    b.classifier.max_epochs = static_cast<int>(c.get_int("classifier.max_epochs", b.classifier.max_epochs));
    b.classifier.patience = static_cast<int>(c.get_int("classifier.patience", b.classifier.patience));
    b.seed = derive_seed(p.seed(), 0xbe7c);
    b.validate();
    return b;
}

void cmd_benchmark(const Pipeline& p) {
    const auto catalog = load_catalog_checked(p);
    const auto cat_sum = checksum_hex(catalog_checksum(catalog));
    const auto which = p.cfg().get_string("benchmark.representation", "graph");
    const auto stored = load_representations(p, which, cat_sum);
    if (static_cast<std::size_t>(stored.matrix.rows()) != catalog.size())
        throw Error(ErrorCode::ShapeError, "representation rows do not match the catalog");
    auto r = std::make_shared<const Matrix>(stored.matrix.values);
    const auto domains = catalog_domains(catalog);

    std::vector<ModelKind> models;
    for (const auto& m : p.cfg().has("benchmark.models") ? p.cfg().get_list("benchmark.models")
                                                         : std::vector<std::string>{"frozen"})
        models.push_back(parse_model_kind(m));

    std::optional<StoredNeighbors> neighbors;
    std::vector<BenchmarkConfig> configs;
    for (auto m : models) {
        configs.push_back(benchmark_config(p, m));
        for (int f : configs.back().factors)
            if (f > 1 && !neighbors) {
                neighbors = load_neighbors_checked(p, cat_sum);
                const auto& np = neighbors->provenance;
                if (np.value("representation", which) == which)
                    expect_same(np, "representations_checksum", checksum_hex(matrix_checksum(*r)),
                                p.path("neighbors", "neighbors.mnbr"));
            }
    }

    std::vector<TaskData> tasks;
    for (Task task : p.tasks()) {
        TaskData data;
        data.task = task;
        data.internal = load_trajectories_checked(trajectory_path(p, "internal", task), cat_sum).trajectories;
        for (const auto& name : p.externals()) {
            const auto cohort = fs::path(name).filename().string();
            data.externals.push_back({cohort, load_trajectories_checked(trajectory_path(p, cohort, task), cat_sum).trajectories});
        }
        tasks.push_back(std::move(data));
    }

    EvalReport report;
    report.provenance = p.provenance("benchmark");
    report.provenance["catalog_checksum"] = cat_sum;
    report.provenance["representation"] = which;
    report.provenance["representations_checksum"] = checksum_hex(matrix_checksum(*r));
    if (neighbors) report.provenance["neighbor_checksum"] = checksum_hex(neighbors->sets.checksum());
    for (const auto& config : configs) {
        const auto part = run_benchmark(tasks, r, neighbors ? &neighbors->sets : nullptr, domains, config);
        report.rows.insert(report.rows.end(), part.rows.begin(), part.rows.end());
    }
    const auto dir = p.path("report_dir", "report");
    io::write_file(dir / "report.tsv", format_report_tsv(report));
    io::write_file(dir / "report.json", report_json(report).dump(2) + "\n");
    for (const auto& row : report.rows)
        spdlog::info("{} {:<16} {:<15} factor {} AUROC {:.4f} F1 {:.4f}", to_string(row.task), row.dataset,
                     to_string(row.model), row.factor, row.auroc, row.f1);
}

void add_common(CLI::App* sub, std::string& config, Overrides& o) {
    sub->add_option("-c,--config", config, "pipeline config file")->required();
    sub->add_option("--seed", o.seed, "override the config seed");
    sub->add_option("--report-dir", o.report_dir, "benchmark report directory");
    sub->add_option("--factor", o.factors, "augmentation factor(s)");
    sub->add_option("--replace-prob", o.replace_prob, "augmentation replacement probability");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"medical concept representations and trajectory augmentation"};
    app.name("medrep");
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_flag("-q,--quiet", quiet, "warnings and errors only");

    std::string config;
    Overrides overrides;
    using Stage = void (*)(const Pipeline&);
    const std::vector<std::pair<std::string, Stage>> stages = {
        {"synth", cmd_synth},
        {"train-reps", cmd_train_reps},
        {"neighbors", cmd_neighbors},
        {"build-trajectories", cmd_build_trajectories},
        {"augment", cmd_augment},
        {"benchmark", cmd_benchmark},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, fn] : stages) subs[name] = app.add_subcommand(name, "run the " + name + " stage");
    subs["run"] = app.add_subcommand("run", "run every stage in order");
    for (auto& [name, sub] : subs) add_common(sub, config, overrides);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        const Pipeline pipeline(config, overrides);
        for (const auto& [name, fn] : stages) {
            if (subs.at(name)->parsed() || (subs.at("run")->parsed() && (name != "synth" || pipeline.cfg().has("synth.num_clusters"))))
                fn(pipeline);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        spdlog::error("malformed provenance: {}", e.what());
        return kExitArtifact;
    } catch (const std::invalid_argument& e) {
        spdlog::error("invalid number in config: {}", e.what());
        return kExitInput;
    } catch (const std::out_of_range& e) {
        spdlog::error("number out of range in config: {}", e.what());
        return kExitInput;
    }
    return kExitOk;
}

}  // namespace medrep::cli

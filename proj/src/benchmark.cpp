#include "medrep/benchmark.hpp"

#include <algorithm>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "medrep/error.hpp"
#include "medrep/io.hpp"
#include "medrep/metrics.hpp"

namespace medrep {

std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::Frozen ? "frozen" : "trainable_index";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "frozen") return ModelKind::Frozen;
    if (text == "trainable_index") return ModelKind::TrainableIndex;
    throw Error(ErrorCode::ConfigError, "unknown model kind '" + std::string(text) + "'");
}

DataSplit stratified_split(std::span<const int> labels, std::uint64_t seed) {
    Rng rng(seed);
    DataSplit split;
    for (int cls : {1, 0}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if ((labels[i] != 0) == (cls == 1)) members.push_back(i);
        shuffle(members, rng);
        const std::size_t n = members.size();
        const std::size_t n_train = (n * 70 + 50) / 100;
        const std::size_t n_val = std::min(n - n_train, (n * 15 + 50) / 100);
        for (std::size_t j = 0; j < n; ++j) {
            auto& dest = j < n_train ? split.train : j < n_train + n_val ? split.validation : split.test;
            dest.push_back(members[j]);
        }
    }
    for (auto* part : {&split.train, &split.validation, &split.test}) std::sort(part->begin(), part->end());
    return split;
}

int task_label(const PatientTrajectory& t, Task task) {
    for (const auto& l : t.labels)
        if (l.task == task) return l.label;
    throw Error(ErrorCode::ConfigError,
                "trajectory of patient " + t.patient_id + " has no " + std::string(to_string(task)) + " label");
}

LabeledSet labeled_subset(std::span<const PatientTrajectory> trajectories, Task task,
                          std::span<const std::size_t> indices) {
    LabeledSet out;
    out.trajectories.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        out.trajectories.push_back(trajectories[i]);
        out.labels.push_back(task_label(trajectories[i], task));
    }
    return out;
}

LabeledSet labeled_all(std::span<const PatientTrajectory> trajectories, Task task) {
    std::vector<std::size_t> all(trajectories.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return labeled_subset(trajectories, task, all);
}

void BenchmarkConfig::validate() const {
    classifier.validate();
    if (factors.empty()) throw Error(ErrorCode::ConfigError, "factor list is empty");
    for (int f : factors)
        if (f < 1) throw Error(ErrorCode::ConfigError, "augmentation factor must be >= 1");
    if (!(replace_prob >= 0.0 && replace_prob <= 1.0))
        throw Error(ErrorCode::ConfigError, "replace_prob must lie in [0, 1]");
}

namespace {

// Both model kinds behind one scoring interface.
struct Trained {
    std::optional<FrozenClassifier> frozen;
    std::optional<TrainableIndexClassifier> trainable;

    std::vector<double> scores(std::span<const PatientTrajectory> ts) const {
        return frozen ? frozen->score_all(ts) : trainable->score_all(ts);
    }
    double validation() const { return frozen ? frozen->best_validation_auroc : trainable->best_validation_auroc; }
};

EvalRow evaluate(const Trained& model, const LabeledSet& set, Task task, std::string dataset,
                 const BenchmarkConfig& config, int factor) {
    EvalRow row;
    row.task = task;
    row.dataset = std::move(dataset);
    row.model = config.model;
    row.factor = factor;
    row.validation_auroc = model.validation();
    row.n = set.size();
    row.incidence = set.size() ? static_cast<double>(set.positives()) / static_cast<double>(set.size()) : 0.0;
    const auto scores = model.scores(set.trajectories);
    row.auroc = auroc(scores, set.labels);
    const auto y = youden_threshold(scores, set.labels);
    row.threshold = y.threshold;
    row.f1 = y.f1;
    return row;
}

}  // namespace

EvalReport run_benchmark(std::span<const TaskData> tasks, std::shared_ptr<const Matrix> representations,
                         const NeighborSets* sets, std::span<const Domain> domains,
                         const BenchmarkConfig& config) {
    config.validate();
    if (!representations) throw Error(ErrorCode::ConfigError, "missing representation matrix");
    const bool augmenting = std::any_of(config.factors.begin(), config.factors.end(), [](int f) { return f > 1; });
    if (augmenting && !sets) throw Error(ErrorCode::ConfigError, "augmentation factors > 1 need neighbor sets");
    const auto checksum_before = matrix_checksum(*representations);

    EvalReport report;
    for (const auto& data : tasks) {
        const auto task_seed = derive_seed(config.seed, static_cast<std::uint64_t>(data.task));
        std::vector<int> labels;
        labels.reserve(data.internal.size());
        for (const auto& t : data.internal) labels.push_back(task_label(t, data.task));
        const auto split = stratified_split(labels, task_seed);
        const auto train = labeled_subset(data.internal, data.task, split.train);
        const auto validation = labeled_subset(data.internal, data.task, split.validation);
        const auto test = labeled_subset(data.internal, data.task, split.test);

        std::optional<Trained> best;
        int best_factor = 0;
        for (int factor : config.factors) {
            LabeledSet augmented;
            if (factor == 1) {
                augmented = train;
            } else {
                AugmentConfig ac{config.replace_prob, factor, derive_seed(task_seed, static_cast<std::uint64_t>(factor))};
                AugmentStats stats;
                augmented.trajectories = augment_dataset(train.trajectories, *sets, domains, ac, &stats);
                for (int l : train.labels)
                    for (int c = 0; c < factor; ++c) augmented.labels.push_back(l);
                spdlog::debug("{} factor {}: {} of {} eligible tokens replaced", to_string(data.task), factor,
                              stats.replaced, stats.eligible);
            }
            auto cc = config.classifier;
            cc.seed = derive_seed(task_seed, 1000 + static_cast<std::uint64_t>(factor));
            Trained trained;
            if (config.model == ModelKind::Frozen) {
                trained.frozen = train_classifier(representations, augmented, validation, cc);
            } else {
                const int h = config.trainable_width > 0 ? config.trainable_width : static_cast<int>(representations->cols());
                trained.trainable = train_trainable_index(static_cast<std::size_t>(representations->rows()), h,
                                                          augmented, validation, cc);
            }
            spdlog::info("{} {} factor {}: validation AUROC {:.4f}", to_string(data.task), to_string(config.model),
                         factor, trained.validation());
            if (!best || trained.validation() > best->validation()) {
                best = std::move(trained);
                best_factor = factor;
            }
        }

        report.rows.push_back(evaluate(*best, test, data.task, "internal", config, best_factor));
        for (const auto& ext : data.externals)
            report.rows.push_back(
                evaluate(*best, labeled_all(ext.trajectories, data.task), data.task, ext.name, config, best_factor));
    }
    if (matrix_checksum(*representations) != checksum_before)
        throw Error(ErrorCode::ArtifactError, "representation matrix changed during evaluation");
    return report;
}

std::string format_report_tsv(const EvalReport& report) {
    std::string out = io::comment_lines(report.provenance);
    out += "task\tdataset\tmodel\tfactor\tvalidation_auroc\tauroc\tf1\tthreshold\tn\tincidence\n";
    char buf[512];
    for (const auto& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%s\t%s\t%s\t%d\t%.17g\t%.17g\t%.17g\t%.17g\t%zu\t%.17g\n",
                      std::string(to_string(r.task)).c_str(), io::escape_field(r.dataset).c_str(),
                      std::string(to_string(r.model)).c_str(), r.factor, r.validation_auroc, r.auroc, r.f1,
                      r.threshold, r.n, r.incidence);
        out += buf;
    }
    return out;
}

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"task", to_string(r.task)},
                        {"dataset", r.dataset},
                        {"model", to_string(r.model)},
                        {"factor", r.factor},
                        {"validation_auroc", r.validation_auroc},
                        {"auroc", r.auroc},
                        {"f1", r.f1},
                        {"threshold", r.threshold},
                        {"n", r.n},
                        {"incidence", r.incidence}});
    return {{"provenance", report.provenance}, {"rows", rows}};
}

}  // namespace medrep

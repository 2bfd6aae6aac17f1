#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "medrep/augment.hpp"
#include "medrep/classifier.hpp"
#include "medrep/labels.hpp"

namespace medrep {

enum class ModelKind : std::uint8_t { Frozen = 0, TrainableIndex = 1 };
std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);  // throws ConfigError

struct DataSplit {
    std::vector<std::size_t> train, validation, test;
};

// Per-class shuffle, then 70/15/15 of each class.
DataSplit stratified_split(std::span<const int> labels, std::uint64_t seed);

// Label of `task` carried by the trajectory; ConfigError when absent.
int task_label(const PatientTrajectory& t, Task task);
LabeledSet labeled_subset(std::span<const PatientTrajectory> trajectories, Task task,
                          std::span<const std::size_t> indices);
LabeledSet labeled_all(std::span<const PatientTrajectory> trajectories, Task task);

struct ExternalSet {
    std::string name;
    std::vector<PatientTrajectory> trajectories;
};

// Trajectories were built at the task's own prediction time, so each task
// brings its own internal and external sets.
struct TaskData {
    Task task = Task::MT;
    std::vector<PatientTrajectory> internal;
    std::vector<ExternalSet> externals;
};

struct BenchmarkConfig {
    ModelKind model = ModelKind::Frozen;
    std::vector<int> factors = {1};
    double replace_prob = 0.15;
    ClassifierConfig classifier;
    std::uint64_t seed = 0;
    // Width of the trainable-index table; 0 means the width of R.
    int trainable_width = 0;

    void validate() const;
};

struct EvalRow {
    Task task = Task::MT;
    std::string dataset;  // "internal" or the external set name
    ModelKind model = ModelKind::Frozen;
    int factor = 1;
    double validation_auroc = 0.0;
    double auroc = 0.0;
    double f1 = 0.0;
    double threshold = 0.0;
    std::size_t n = 0;
    double incidence = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    nlohmann::json provenance = nlohmann::json::object();
};

// For each task: train once per factor on the (augmented) training split,
// keep the factor with the best validation AUROC (smallest factor on
// ties) and evaluate it on the internal test split and every external set.
// `sets` may be null when every factor is 1.
EvalReport run_benchmark(std::span<const TaskData> tasks, std::shared_ptr<const Matrix> representations,
                         const NeighborSets* sets, std::span<const Domain> domains,
                         const BenchmarkConfig& config);

std::string format_report_tsv(const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);

}  // namespace medrep

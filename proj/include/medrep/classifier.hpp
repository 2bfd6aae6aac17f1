#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "medrep/linalg.hpp"
#include "medrep/rng.hpp"
#include "medrep/trajectory.hpp"

namespace medrep {

struct LabeledSet {
    std::vector<PatientTrajectory> trajectories;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::size_t positives() const;
};

// Mean of representation rows over the non-[PAD] positions.
Vector encode_trajectory(const PatientTrajectory& t, const Matrix& r);

struct ClassifierConfig {
    std::size_t batch_size = 32;
    double learning_rate = 5e-5;
    double weight_decay = 0.01;
    int max_epochs = 50;
    std::size_t min_positives_per_batch = 3;
    int checks_per_epoch = 5;  // validation every 20% of an epoch's batches
    int patience = 10;         // non-improving checks before stopping
    std::uint64_t seed = 0;

    void validate() const;
};

// One epoch of batches. Every batch holds at least
// min(min_positives, #positives) positive examples; short batches are
// topped up from a reshuffled positive pool.
std::vector<std::vector<std::size_t>> make_oversampled_batches(std::span<const int> labels,
                                                               const ClassifierConfig& config, Rng& rng);

std::uint64_t matrix_checksum(const Matrix& m);

// Logistic head over mean-pooled rows of a frozen representation matrix.
struct FrozenClassifier {
    std::shared_ptr<const Matrix> representations;
    Vector center;  // mean training encoding, subtracted before the head
    Vector weights;
    double bias = 0.0;
    std::uint64_t representation_checksum = 0;
    int epochs_run = 0;
    double best_validation_auroc = 0.0;

    double score(const PatientTrajectory& t) const;
    std::vector<double> score_all(std::span<const PatientTrajectory> ts) const;
};

FrozenClassifier train_classifier(std::shared_ptr<const Matrix> representations, const LabeledSet& train,
                                  const LabeledSet& validation, const ClassifierConfig& config);

// Baseline: identically shaped embedding table, randomly initialized and
// trained jointly with the head.
struct TrainableIndexClassifier {
    Matrix table;
    Vector weights;
    double bias = 0.0;
    int epochs_run = 0;
    double best_validation_auroc = 0.0;

    double score(const PatientTrajectory& t) const;
    std::vector<double> score_all(std::span<const PatientTrajectory> ts) const;
};

TrainableIndexClassifier train_trainable_index(std::size_t num_concepts, int h, const LabeledSet& train,
                                               const LabeledSet& validation, const ClassifierConfig& config);

}  // namespace medrep

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "medrep/contrastive.hpp"
#include "medrep/subgraph.hpp"

namespace medrep::graph {

struct TrainConfig {
    std::size_t batch_size = 2048;
    double learning_rate = 5e-4;
    double feature_mask_rate = 0.2;
    double edge_drop_rate = 0.2;
    double tau = 0.5;
    int max_iterations = 200;
    int patience = 20;
    std::array<int, 3> hop_fanouts = {30, 20, 10};
    std::uint64_t rng_seed = 0;
    double weight_decay = 0.01;
    // Contrastive steps per distillation step; 1 is strict alternation.
    int contrastive_steps_per_kd = 1;
    std::size_t inference_batch_size = 2048;

    void validate() const;  // throws ConfigError
};

enum class Phase { Contrastive, Distill };

struct TrainLogEntry {
    int iteration = 0;
    Phase phase = Phase::Contrastive;
    double loss = 0.0;
    double best_contrastive = 0.0;
    int patience_left = 0;
};

std::string format_train_log(const std::vector<TrainLogEntry>& log);

struct TrainResult {
    GcnEncoder encoder;
    RepresentationMatrix representations;  // kind = Graph
    std::vector<TrainLogEntry> log;
    int iterations_run = 0;
    bool stopped_early = false;
    Rng rng;
};

// Alternating contrastive / distillation updates over sampled subgraph
// batches, then a full-coverage forward pass. Throws DivergedError on a
// non-finite loss.
TrainResult train_representations(const RepresentationMatrix& text, const RelationGraph& graph,
                                  const TrainConfig& config);

// Adam with decoupled weight decay on the weight matrices.
class AdamW {
public:
    AdamW(int h, double learning_rate, double weight_decay);
    void step(GcnEncoder& encoder, const GcnGradients& grad);

private:
    double lr_, wd_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    GcnGradients m_, v_;
};

// MREP container of R followed by a CKPT block: encoder weights, slopes,
// iteration count and RNG state.
void save_checkpoint(const std::filesystem::path& path, const TrainResult& result,
                     const nlohmann::json& provenance);

struct Checkpoint {
    RepresentationMatrix representations;
    GcnEncoder encoder;
    int iteration = 0;
    Rng rng;
    nlohmann::json provenance;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace medrep::graph

#include "medrep/trainer.hpp"

#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "medrep/description.hpp"
#include "medrep/error.hpp"
#include "medrep/io.hpp"

namespace medrep::graph {

namespace {

constexpr double kNormFloor = 1e-12;

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

Matrix gather_rows(const Matrix& m, std::span<const DenseIndex> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

void encode_square(io::ByteWriter& out, const Matrix& m) {
    out.u32(static_cast<std::uint32_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.size(); ++i) out.f64(m.data()[i]);
}

Matrix decode_square(io::ByteReader& in) {
    const auto h = static_cast<Eigen::Index>(in.u32());
    Matrix m(h, h);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = in.f64();
    return m;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size == 0) throw Error(ErrorCode::ConfigError, "batch_size must be positive");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::ConfigError, "learning_rate must be positive");
    if (!in_unit(feature_mask_rate) || !in_unit(edge_drop_rate))
        throw Error(ErrorCode::ConfigError, "mask/drop rates must lie in [0, 1]");
    if (!(tau > 0.0)) throw Error(ErrorCode::ConfigError, "tau must be positive");
    if (max_iterations < 0) throw Error(ErrorCode::ConfigError, "max_iterations must be >= 0");
    if (patience <= 0) throw Error(ErrorCode::ConfigError, "patience must be positive");
    for (int f : hop_fanouts)
        if (f <= 0) throw Error(ErrorCode::ConfigError, "fanouts must be positive");
    if (contrastive_steps_per_kd <= 0)
        throw Error(ErrorCode::ConfigError, "contrastive_steps_per_kd must be positive");
    if (weight_decay < 0.0) throw Error(ErrorCode::ConfigError, "weight_decay must be >= 0");
}

std::string format_train_log(const std::vector<TrainLogEntry>& log) {
    std::string out = "iter\tphase\tloss\tbest_G\tpatience_left\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%d\t%s\t%.17g\t%.17g\t%d\n", e.iteration,
                      e.phase == Phase::Contrastive ? "G" : "KD", e.loss, e.best_contrastive,
                      e.patience_left);
        out += buf;
    }
    return out;
}

AdamW::AdamW(int h, double learning_rate, double weight_decay)
    : lr_(learning_rate), wd_(weight_decay), m_(GcnGradients::zeros(h)), v_(GcnGradients::zeros(h)) {}

void AdamW::step(GcnEncoder& encoder, const GcnGradients& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update_matrix = [&](Matrix& p, const Matrix& g, Matrix& m, Matrix& v) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        p *= (1.0 - lr_ * wd_);
        p.array() -= lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
    };
    auto update_scalar = [&](double& p, double g, double& m, double& v) {
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        p -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
    };
    update_matrix(encoder.w1, grad.w1, m_.w1, v_.w1);
    update_matrix(encoder.w2, grad.w2, m_.w2, v_.w2);
    update_scalar(encoder.slope1, grad.slope1, m_.slope1, v_.slope1);
    update_scalar(encoder.slope2, grad.slope2, m_.slope2, v_.slope2);
}

TrainResult train_representations(const RepresentationMatrix& text, const RelationGraph& graph,
                                  const TrainConfig& config) {
    config.validate();
    if (text.kind != RepresentationKind::Text)
        throw Error(ErrorCode::ConfigError, "training input must be text-based representations");
    if (static_cast<std::size_t>(text.rows()) != graph.num_nodes())
        throw Error(ErrorCode::ShapeError, "representation rows != graph nodes");
    const Matrix& x = text.values;
    const int h = static_cast<int>(x.cols());

    TrainResult result{};
    result.rng = Rng(config.rng_seed);
    Rng& rng = result.rng;
    result.encoder = GcnEncoder::init(h, rng);
    AdamW optimizer(h, config.learning_rate, config.weight_decay);

    std::vector<DenseIndex> order;
    for (DenseIndex k = special::kCount; k < graph.num_nodes(); ++k) order.push_back(k);
    std::size_t cursor = order.size();  // forces a shuffle before the first batch

    const ViewRates rates{config.feature_mask_rate, config.edge_drop_rate};
    double best = std::numeric_limits<double>::infinity();
    int patience_left = config.patience;
    SubgraphSample batch;
    bool have_batch = false;
    const int cycle = config.contrastive_steps_per_kd + 1;

    for (int iter = 1; iter <= config.max_iterations && !order.empty(); ++iter) {
        const bool contrastive = (iter - 1) % cycle != cycle - 1;
        if (contrastive || !have_batch) {
            std::vector<DenseIndex> seeds;
            const std::size_t want = std::min(config.batch_size, order.size());
            while (seeds.size() < want) {
                if (cursor >= order.size()) {
                    shuffle(order, rng);
                    cursor = 0;
                }
                seeds.push_back(order[cursor++]);
            }
            batch = sample_subgraph(graph, seeds, config.hop_fanouts, rng);
            have_batch = true;
        }
        const Matrix xs = gather_rows(x, batch.nodes);
        const auto n_local = batch.nodes.size();
        const auto n_seed = static_cast<Eigen::Index>(batch.num_seeds);

        TrainLogEntry entry;
        entry.iteration = iter;
        GcnGradients grad;
        if (contrastive) {
            entry.phase = Phase::Contrastive;
            const auto view1 = generate_view(batch.edges, xs, rates, rng);
            const auto view2 = generate_view(batch.edges, xs, rates, rng);
            const auto tape1 = gcn_forward_tape(result.encoder, view1.masked_features,
                                                normalized_adjacency(n_local, view1.kept_edges));
            const auto tape2 = gcn_forward_tape(result.encoder, view2.masked_features,
                                                normalized_adjacency(n_local, view2.kept_edges));
            const auto cg = contrastive_loss_grad(tape1.out.topRows(n_seed), tape2.out.topRows(n_seed),
                                                  config.tau, kNormFloor);
            entry.loss = cg.loss;
            if (!std::isfinite(cg.loss)) throw DivergedError(iter, "contrastive loss is not finite");
            Matrix d1 = Matrix::Zero(tape1.out.rows(), tape1.out.cols());
            Matrix d2 = Matrix::Zero(tape2.out.rows(), tape2.out.cols());
            d1.topRows(n_seed) = cg.d_u;
            d2.topRows(n_seed) = cg.d_v;
            grad = gcn_backward(result.encoder, tape1, d1);
            grad += gcn_backward(result.encoder, tape2, d2);
            if (cg.loss < best) {
                best = cg.loss;
                patience_left = config.patience;
            } else {
                --patience_left;
            }
        } else {
            entry.phase = Phase::Distill;
            const auto tape = gcn_forward_tape(result.encoder, xs, normalized_adjacency(n_local, batch.edges));
            const auto kd = kd_loss_grad(xs.topRows(n_seed), tape.out.topRows(n_seed));
            entry.loss = kd.loss;
            if (!std::isfinite(kd.loss)) throw DivergedError(iter, "distillation loss is not finite");
            Matrix d = Matrix::Zero(tape.out.rows(), tape.out.cols());
            d.topRows(n_seed) = kd.d_graph;
            grad = gcn_backward(result.encoder, tape, d);
        }
        optimizer.step(result.encoder, grad);
        if (!result.encoder.finite()) throw DivergedError(iter, "encoder parameters are not finite");
        entry.best_contrastive = best;
        entry.patience_left = patience_left;
        result.log.push_back(entry);
        result.iterations_run = iter;
        if (patience_left <= 0) {
            result.stopped_early = true;
            spdlog::debug("early stop at iteration {} (best L_G {:.6f})", iter, best);
            break;
        }
    }

    result.representations.kind = RepresentationKind::Graph;
    result.representations.values = encode_all(result.encoder, x, graph, config.inference_batch_size);
    if (!result.representations.values.allFinite())
        throw DivergedError(result.iterations_run, "final representations are not finite");
    return result;
}

void save_checkpoint(const std::filesystem::path& path, const TrainResult& result,
                     const nlohmann::json& provenance) {
    io::ByteWriter out;
    encode_matrix(out, result.representations.values, EmbeddingDType::F64);
    io::ByteWriter ckpt;
    encode_square(ckpt, result.encoder.w1);
    encode_square(ckpt, result.encoder.w2);
    ckpt.f64(result.encoder.slope1);
    ckpt.f64(result.encoder.slope2);
    ckpt.u32(static_cast<std::uint32_t>(result.iterations_run));
    ckpt.str(serialize_rng(result.rng));
    out.magic("CKPT");
    out.u64(ckpt.bytes().size());
    for (char c : ckpt.bytes()) out.u8(static_cast<std::uint8_t>(c));
    auto prov = provenance;
    prov["kind"] = "graph";
    io::append_provenance(out, prov);
    io::write_file(path, out.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    io::ByteReader in(bytes);
    Checkpoint c;
    c.representations.values = decode_matrix(in);
    c.representations.kind = RepresentationKind::Graph;
    in.expect_magic("CKPT");
    const auto len = in.u64();
    const auto start = in.offset();
    c.encoder.w1 = decode_square(in);
    c.encoder.w2 = decode_square(in);
    c.encoder.slope1 = in.f64();
    c.encoder.slope2 = in.f64();
    c.iteration = static_cast<int>(in.u32());
    c.rng = deserialize_rng(in.str());
    if (in.offset() - start != len) throw Error(ErrorCode::ArtifactError, "CKPT length mismatch");
    c.provenance = io::read_provenance(in);
    return c;
}

}  // namespace medrep::graph

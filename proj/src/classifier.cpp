#include "medrep/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "medrep/error.hpp"
#include "medrep/io.hpp"
#include "medrep/metrics.hpp"

namespace medrep {

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct Adam {
    double lr, wd;
    double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long t = 0;

    template <typename P, typename G, typename S>
    void update(P& p, const G& g, S& m, S& v, bool decay, double bc1, double bc2) const {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        if (decay) p *= (1.0 - lr * wd);
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
};

// Validation metric: AUROC when both classes are present, otherwise the
// negative mean log-loss.
double validation_metric(const std::vector<double>& logits, std::span<const int> labels) {
    std::size_t pos = 0;
    for (int l : labels) pos += l != 0;
    if (pos > 0 && pos < labels.size()) return auroc(logits, labels);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = std::clamp(sigmoid(logits[i]), 1e-12, 1.0 - 1e-12);
        loss -= labels[i] ? std::log(p) : std::log(1.0 - p);
    }
    return logits.empty() ? 0.0 : -loss / static_cast<double>(logits.size());
}

void check_training_set(const LabeledSet& train) {
    if (train.trajectories.size() != train.labels.size())
        throw Error(ErrorCode::ShapeError, "trajectory/label count mismatch");
    const auto pos = train.positives();
    if (pos == 0 || pos == train.size())
        throw Error(ErrorCode::DegenerateLabels, "training data must contain both classes");
}

// Shared mini-batch loop. `Model` provides step(batch) and scores(set);
// snapshot()/restore() keep the best-validation parameters.
template <typename Model>
void fit(Model& model, const LabeledSet& train, const LabeledSet& validation, const ClassifierConfig& config,
         Rng& rng, int& epochs_run, double& best_metric) {
    best_metric = -std::numeric_limits<double>::infinity();
    auto best = model.snapshot();
    int stale = 0;
    bool stop = false;
    for (int epoch = 0; epoch < config.max_epochs && !stop; ++epoch) {
        const auto batches = make_oversampled_batches(train.labels, config, rng);
        const std::size_t nb = batches.size();
        std::vector<std::size_t> checkpoints;
        for (int j = 1; j <= config.checks_per_epoch; ++j)
            checkpoints.push_back(std::max<std::size_t>(1, (nb * static_cast<std::size_t>(j) +
                                                            static_cast<std::size_t>(config.checks_per_epoch) - 1) /
                                                               static_cast<std::size_t>(config.checks_per_epoch)));
        checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
        std::size_t next_check = 0;
        for (std::size_t b = 0; b < nb && !stop; ++b) {
            model.step(batches[b]);
            if (next_check < checkpoints.size() && b + 1 == checkpoints[next_check]) {
                ++next_check;
                const auto metric = validation_metric(model.scores(validation.trajectories), validation.labels);
                if (metric > best_metric) {
                    best_metric = metric;
                    best = model.snapshot();
                    stale = 0;
                } else if (++stale >= config.patience) {
                    stop = true;
                }
            }
        }
        epochs_run = epoch + 1;
    }
    model.restore(best);
}

// Zero start: at lr 5e-5 a random head would barely leave its initial
// direction before early stopping, and AUROC depends only on direction.
Vector init_head(int h) { return Vector::Zero(h); }

class FrozenModel {
public:
    FrozenModel(const Matrix& r, const LabeledSet& train, const ClassifierConfig& config)
        : train_(train), adam_{config.learning_rate, config.weight_decay} {
        const int h = static_cast<int>(r.cols());
        encodings_.resize(static_cast<Eigen::Index>(train.size()), h);
        for (std::size_t i = 0; i < train.size(); ++i)
            encodings_.row(static_cast<Eigen::Index>(i)) = encode_trajectory(train.trajectories[i], r).transpose();
        center_ = encodings_.colwise().mean().transpose();
        encodings_.rowwise() -= center_.transpose();
        r_ = &r;
        w_ = init_head(h);
        mw_ = vw_ = Vector::Zero(h);
    }

    void step(const std::vector<std::size_t>& batch) {
        Vector gw = Vector::Zero(w_.size());
        double gb = 0.0;
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (auto i : batch) {
            const auto x = encodings_.row(static_cast<Eigen::Index>(i));
            const double dz = (sigmoid(x.dot(w_) + b_) - train_.labels[i]) * inv;
            gw += dz * x.transpose();
            gb += dz;
        }
        ++adam_.t;
        const double bc1 = 1.0 - std::pow(adam_.b1, static_cast<double>(adam_.t));
        const double bc2 = 1.0 - std::pow(adam_.b2, static_cast<double>(adam_.t));
        adam_.update(w_, gw, mw_, vw_, true, bc1, bc2);
        Eigen::Matrix<double, 1, 1> b{b_}, g{gb};
        adam_.update(b, g, mb_, vb_, false, bc1, bc2);
        b_ = b(0);
    }

    std::vector<double> scores(std::span<const PatientTrajectory> ts) const {
        std::vector<double> out;
        out.reserve(ts.size());
        for (const auto& t : ts) out.push_back((encode_trajectory(t, *r_) - center_).dot(w_) + b_);
        return out;
    }

    const Vector& center() const { return center_; }
    std::pair<Vector, double> snapshot() const { return {w_, b_}; }
    void restore(const std::pair<Vector, double>& s) { std::tie(w_, b_) = s; }

private:
    const LabeledSet& train_;
    const Matrix* r_ = nullptr;
    Matrix encodings_;
    Vector center_;
    Adam adam_;
    Vector w_, mw_, vw_;
    double b_ = 0.0;
    Eigen::Matrix<double, 1, 1> mb_ = Eigen::Matrix<double, 1, 1>::Zero();
    Eigen::Matrix<double, 1, 1> vb_ = Eigen::Matrix<double, 1, 1>::Zero();
};

class TrainableModel {
public:
    struct Snapshot {
        Matrix table;
        Vector w;
        double b;
    };

    TrainableModel(std::size_t n, int h, const LabeledSet& train, const ClassifierConfig& config, Rng& rng)
        : train_(train), adam_{config.learning_rate, config.weight_decay} {
        table_.resize(static_cast<Eigen::Index>(n), h);
        for (Eigen::Index i = 0; i < table_.size(); ++i) table_.data()[i] = standard_normal(rng);
        mt_ = vt_ = Matrix::Zero(table_.rows(), h);
        w_ = init_head(h);
        mw_ = vw_ = Vector::Zero(h);
    }

    void step(const std::vector<std::size_t>& batch) {
        Vector gw = Vector::Zero(w_.size());
        double gb = 0.0;
        Matrix gt = Matrix::Zero(table_.rows(), table_.cols());
        const double inv = 1.0 / static_cast<double>(batch.size());
        for (auto i : batch) {
            const auto& t = train_.trajectories[i];
            const Vector x = encode_trajectory(t, table_);
            const double dz = (sigmoid(x.dot(w_) + b_) - train_.labels[i]) * inv;
            gw += dz * x;
            gb += dz;
            std::size_t count = 0;
            for (auto k : t.concept_idx) count += k != special::kPad;
            const RowVector d_row = (dz / static_cast<double>(count)) * w_.transpose();
            for (auto k : t.concept_idx)
                if (k != special::kPad) gt.row(k) += d_row;
        }
        ++adam_.t;
        const double bc1 = 1.0 - std::pow(adam_.b1, static_cast<double>(adam_.t));
        const double bc2 = 1.0 - std::pow(adam_.b2, static_cast<double>(adam_.t));
        adam_.update(table_, gt, mt_, vt_, true, bc1, bc2);
        adam_.update(w_, gw, mw_, vw_, true, bc1, bc2);
        Eigen::Matrix<double, 1, 1> b{b_}, g{gb};
        adam_.update(b, g, mb_, vb_, false, bc1, bc2);
        b_ = b(0);
    }

    std::vector<double> scores(std::span<const PatientTrajectory> ts) const {
        std::vector<double> out;
        out.reserve(ts.size());
        for (const auto& t : ts) out.push_back(encode_trajectory(t, table_).dot(w_) + b_);
        return out;
    }

    Snapshot snapshot() const { return {table_, w_, b_}; }
    void restore(const Snapshot& s) {
        table_ = s.table;
        w_ = s.w;
        b_ = s.b;
    }

private:
    const LabeledSet& train_;
    Adam adam_;
    Matrix table_, mt_, vt_;
    Vector w_, mw_, vw_;
    double b_ = 0.0;
    Eigen::Matrix<double, 1, 1> mb_ = Eigen::Matrix<double, 1, 1>::Zero();
    Eigen::Matrix<double, 1, 1> vb_ = Eigen::Matrix<double, 1, 1>::Zero();
};

}  // namespace

std::size_t LabeledSet::positives() const {
    std::size_t n = 0;
    for (int l : labels) n += l != 0;
    return n;
}

Vector encode_trajectory(const PatientTrajectory& t, const Matrix& r) {
    Vector sum = Vector::Zero(r.cols());
    std::size_t count = 0;
    for (auto k : t.concept_idx) {
        if (k == special::kPad) continue;
        if (k >= static_cast<std::size_t>(r.rows()))
            throw Error(ErrorCode::ShapeError, "concept index " + std::to_string(k) + " outside representation matrix");
        sum += r.row(k).transpose();
        ++count;
    }
    if (count == 0) throw Error(ErrorCode::EmptyTrajectory, "trajectory of patient " + t.patient_id + " has no tokens");
    return sum / static_cast<double>(count);
}

void ClassifierConfig::validate() const {
    if (batch_size == 0) throw Error(ErrorCode::ConfigError, "batch_size must be positive");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::ConfigError, "learning_rate must be positive");
    if (max_epochs < 0 || checks_per_epoch <= 0 || patience <= 0)
        throw Error(ErrorCode::ConfigError, "epochs/checks/patience must be positive");
}

std::vector<std::vector<std::size_t>> make_oversampled_batches(std::span<const int> labels,
                                                               const ClassifierConfig& config, Rng& rng) {
    std::vector<std::size_t> order(labels.size());
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        order[i] = i;
        if (labels[i]) positives.push_back(i);
    }
    shuffle(order, rng);
    const std::size_t floor = std::min(config.min_positives_per_batch, positives.size());
    std::vector<std::size_t> pool;
    std::size_t pool_pos = 0;
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + config.batch_size)));
        std::size_t have = 0;
        for (auto i : batch) have += labels[i] != 0;
        std::size_t guard = 0;
        while (have < floor) {
            if (pool_pos >= pool.size()) {
                pool = positives;
                shuffle(pool, rng);
                pool_pos = 0;
            }
            const auto candidate = pool[pool_pos++];
            // Never repeat a positive inside one batch; the guard bounds the
            // scan when every positive is already present.
            if (std::find(batch.begin(), batch.end(), candidate) == batch.end()) {
                batch.push_back(candidate);
                ++have;
            } else if (++guard > 2 * positives.size()) {
                break;
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

std::uint64_t matrix_checksum(const Matrix& m) {
    io::ByteWriter w;
    w.u64(static_cast<std::uint64_t>(m.rows()));
    w.u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) w.f64(m.data()[i]);
    return io::fnv1a64(w.bytes());
}

double FrozenClassifier::score(const PatientTrajectory& t) const {
    return (encode_trajectory(t, *representations) - center).dot(weights) + bias;
}

std::vector<double> FrozenClassifier::score_all(std::span<const PatientTrajectory> ts) const {
    std::vector<double> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(score(t));
    return out;
}

FrozenClassifier train_classifier(std::shared_ptr<const Matrix> representations, const LabeledSet& train,
                                  const LabeledSet& validation, const ClassifierConfig& config) {
    config.validate();
    check_training_set(train);
    if (!representations) throw Error(ErrorCode::ConfigError, "missing representation matrix");
    Rng rng(config.seed);
    FrozenClassifier out;
    out.representations = representations;
    out.representation_checksum = matrix_checksum(*representations);
    FrozenModel model(*representations, train, config);
    fit(model, train, validation, config, rng, out.epochs_run, out.best_validation_auroc);
    std::tie(out.weights, out.bias) = model.snapshot();
    out.center = model.center();
    return out;
}

double TrainableIndexClassifier::score(const PatientTrajectory& t) const {
    return encode_trajectory(t, table).dot(weights) + bias;
}

std::vector<double> TrainableIndexClassifier::score_all(std::span<const PatientTrajectory> ts) const {
    std::vector<double> out;
    out.reserve(ts.size());
    for (const auto& t : ts) out.push_back(score(t));
    return out;
}

TrainableIndexClassifier train_trainable_index(std::size_t num_concepts, int h, const LabeledSet& train,
                                               const LabeledSet& validation, const ClassifierConfig& config) {
    config.validate();
    check_training_set(train);
    if (h <= 0) throw Error(ErrorCode::BadDimension, "embedding width must be positive");
    Rng rng(config.seed);
    TrainableIndexClassifier out;
    TrainableModel model(num_concepts, h, train, config, rng);
    fit(model, train, validation, config, rng, out.epochs_run, out.best_validation_auroc);
    auto snap = model.snapshot();
    out.table = std::move(snap.table);
    out.weights = std::move(snap.w);
    out.bias = snap.b;
    return out;
}

}  // namespace medrep

#include "medrep/contrastive.hpp"

#include <cmath>

#include "medrep/error.hpp"

namespace medrep::graph {

namespace {

Matrix normalize_rows(const Matrix& m, double floor, Vector& norms) {
    norms = m.rowwise().norm();
    Matrix out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double n = norms[i];
        if (n == 0.0 && floor == 0.0)
            throw Error(ErrorCode::DegenerateEmbedding, "zero-norm row " + std::to_string(i));
        if (n < floor) n = floor;
        norms[i] = n;
        out.row(i) /= n;
    }
    return out;
}

void check_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(ErrorCode::ShapeError, "operand shapes differ");
}

// Gradient of sum_i of row-normalization: d raw = (d hat - hat <hat, d hat>) / |raw|.
Matrix through_normalization(const Matrix& hat, const Vector& norms, const Matrix& d_hat) {
    Matrix out(hat.rows(), hat.cols());
    for (Eigen::Index i = 0; i < hat.rows(); ++i) {
        const double proj = hat.row(i).dot(d_hat.row(i));
        out.row(i) = (d_hat.row(i) - proj * hat.row(i)) / norms[i];
    }
    return out;
}

Vector log_softmax(const Eigen::Ref<const RowVector>& row) {
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    return (row.array() - lse).transpose();
}

}  // namespace

GraphView generate_view(std::span<const std::pair<DenseIndex, DenseIndex>> edges, const Matrix& x,
                        const ViewRates& rates, Rng& rng) {
    if (!(rates.feature_mask_rate >= 0.0 && rates.feature_mask_rate <= 1.0) ||
        !(rates.edge_drop_rate >= 0.0 && rates.edge_drop_rate <= 1.0))
        throw Error(ErrorCode::ConfigError, "view rates must lie in [0, 1]");
    GraphView view;
    view.rates = rates;
    view.kept_edges.reserve(edges.size());
    for (const auto& e : edges)
        if (!bernoulli(rng, rates.edge_drop_rate)) view.kept_edges.push_back(e);
    view.masked_features = x;
    view.masked_columns.assign(static_cast<std::size_t>(x.cols()), false);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (bernoulli(rng, rates.feature_mask_rate)) {
            view.masked_columns[static_cast<std::size_t>(c)] = true;
            view.masked_features.col(c).setZero();
        }
    }
    return view;
}

double ntxent_pair_loss(const Matrix& u_view, const Matrix& v_view, Eigen::Index k, double tau) {
    check_same_shape(u_view, v_view);
    if (k < 0 || k >= u_view.rows()) throw Error(ErrorCode::ShapeError, "anchor index out of range");
    if (!(tau > 0.0)) throw Error(ErrorCode::ConfigError, "tau must be positive");
    Vector nu, nv;
    const Matrix u = normalize_rows(u_view, 0.0, nu);
    const Matrix v = normalize_rows(v_view, 0.0, nv);
    const RowVector anchor = u.row(k);
    // Terms: all inter-view similarities (positive included) and intra-view
    // similarities excluding the anchor itself.
    std::vector<double> logits;
    logits.reserve(static_cast<std::size_t>(2 * u.rows()));
    for (Eigen::Index i = 0; i < u.rows(); ++i) logits.push_back(anchor.dot(v.row(i)) / tau);
    for (Eigen::Index i = 0; i < u.rows(); ++i)
        if (i != k) logits.push_back(anchor.dot(u.row(i)) / tau);
    double m = logits.front();
    for (double l : logits) m = std::max(m, l);
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - m);
    const double positive = anchor.dot(v.row(k)) / tau;
    return (m + std::log(sum)) - positive;
}

ContrastiveGrad contrastive_loss_grad(const Matrix& u_view, const Matrix& v_view, double tau,
                                      double norm_floor) {
    check_same_shape(u_view, v_view);
    if (!(tau > 0.0)) throw Error(ErrorCode::ConfigError, "tau must be positive");
    const Eigen::Index n = u_view.rows();
    ContrastiveGrad out;
    out.d_u = Matrix::Zero(n, u_view.cols());
    out.d_v = Matrix::Zero(n, u_view.cols());
    if (n == 0) return out;

    Vector nu, nv;
    const Matrix u = normalize_rows(u_view, norm_floor, nu);
    const Matrix v = normalize_rows(v_view, norm_floor, nv);
    const Matrix between = (u * v.transpose()) / tau;  // [k, i] = theta(u_k, v_i)/tau
    const Matrix intra_u = (u * u.transpose()) / tau;
    const Matrix intra_v = (v * v.transpose()) / tau;

    // Softmax weights of each anchor's denominator terms.
    Matrix w_between_u(n, n), w_intra_u(n, n), w_between_v(n, n), w_intra_v(n, n);
    double total = 0.0;
    auto anchor_terms = [&](const auto& inter, const Matrix& intra, Eigen::Index k, auto& w_inter,
                            Matrix& w_intra) {
        double m = inter(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            m = std::max(m, inter(k, i));
            if (i != k) m = std::max(m, intra(k, i));
        }
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            sum += std::exp(inter(k, i) - m);
            if (i != k) sum += std::exp(intra(k, i) - m);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            w_inter(k, i) = std::exp(inter(k, i) - m) / sum;
            w_intra(k, i) = i == k ? 0.0 : std::exp(intra(k, i) - m) / sum;
        }
        return m + std::log(sum) - inter(k, k);
    };
    const auto between_t = between.transpose();
    for (Eigen::Index k = 0; k < n; ++k) {
        total += anchor_terms(between, intra_u, k, w_between_u, w_intra_u);
        total += anchor_terms(between_t, intra_v, k, w_between_v, w_intra_v);
    }
    const double scale = 1.0 / (2.0 * static_cast<double>(n));
    out.loss = total * scale;

    // dL/d between[k,i]: from u-anchored terms (row k) and v-anchored terms
    // (transposed), minus the positive on the diagonal.
    Matrix g_between = w_between_u + w_between_v.transpose();
    g_between.diagonal().array() -= 2.0;
    g_between *= scale;
    const Matrix g_intra_u = (w_intra_u + w_intra_u.transpose()) * scale;
    const Matrix g_intra_v = (w_intra_v + w_intra_v.transpose()) * scale;

    const Matrix d_uhat = (g_between * v + g_intra_u * u) / tau;
    const Matrix d_vhat = (g_between.transpose() * u + g_intra_v * v) / tau;
    out.d_u = through_normalization(u, nu, d_uhat);
    out.d_v = through_normalization(v, nv, d_vhat);
    return out;
}

double contrastive_loss(const Matrix& u_view, const Matrix& v_view, double tau) {
    return contrastive_loss_grad(u_view, v_view, tau, 0.0).loss;
}

KdGrad kd_loss_grad(const Matrix& r_text, const Matrix& r_graph) {
    check_same_shape(r_text, r_graph);
    KdGrad out;
    out.d_graph = Matrix::Zero(r_graph.rows(), r_graph.cols());
    for (Eigen::Index k = 0; k < r_text.rows(); ++k) {
        const Vector log_p = log_softmax(r_text.row(k));
        const Vector log_q = log_softmax(r_graph.row(k));
        const Vector p = log_p.array().exp();
        const Vector q = log_q.array().exp();
        out.loss += p.dot(log_p - log_q);
        out.d_graph.row(k) = (q - p).transpose();
    }
    return out;
}

double kd_loss(const Matrix& r_text, const Matrix& r_graph) {
    check_same_shape(r_text, r_graph);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < r_text.rows(); ++k) {
        const Vector log_p = log_softmax(r_text.row(k));
        const Vector log_q = log_softmax(r_graph.row(k));
        loss += log_p.array().exp().matrix().dot(log_p - log_q);
    }
    return loss;
}

}  // namespace medrep::graph

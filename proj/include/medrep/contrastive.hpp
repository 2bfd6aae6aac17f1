#pragma once

#include <vector>

#include "medrep/gcn.hpp"

namespace medrep::graph {

struct ViewRates {
    double feature_mask_rate = 0.2;
    double edge_drop_rate = 0.2;
};

// One stochastically corrupted view: masked feature columns, dropped edges.
struct GraphView {
    Matrix masked_features;
    EdgeList kept_edges;
    std::vector<bool> masked_columns;
    ViewRates rates;
};

// Edges are visited in order and each kept with probability 1 - drop rate;
// then each feature column is zeroed with the mask rate.
GraphView generate_view(std::span<const std::pair<DenseIndex, DenseIndex>> edges, const Matrix& x,
                        const ViewRates& rates, Rng& rng);

// Cosine-similarity NT-Xent term for anchor row k of U against V, with
// intra-view (U) and inter-view (V) negatives.
double ntxent_pair_loss(const Matrix& u_view, const Matrix& v_view, Eigen::Index k, double tau);

// (1/2N) sum_k [l(u_k, v_k) + l(v_k, u_k)].
double contrastive_loss(const Matrix& u_view, const Matrix& v_view, double tau);

struct ContrastiveGrad {
    double loss = 0.0;
    Matrix d_u;
    Matrix d_v;
};

// Loss and gradients w.r.t. the un-normalized rows. Row norms are clamped
// below by `norm_floor`; with norm_floor == 0 a zero row throws.
ContrastiveGrad contrastive_loss_grad(const Matrix& u_view, const Matrix& v_view, double tau,
                                      double norm_floor = 0.0);

// sum_k KL(softmax(text_k) || softmax(graph_k)), softmax over the row.
double kd_loss(const Matrix& r_text, const Matrix& r_graph);

struct KdGrad {
    double loss = 0.0;
    Matrix d_graph;
};

KdGrad kd_loss_grad(const Matrix& r_text, const Matrix& r_graph);

}  // namespace medrep::graph

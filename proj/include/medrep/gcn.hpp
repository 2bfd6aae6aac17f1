#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "medrep/linalg.hpp"
#include "medrep/rng.hpp"
#include "medrep/vocab.hpp"

namespace medrep::graph {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using EdgeList = std::vector<std::pair<DenseIndex, DenseIndex>>;

// Two-layer GCN, square h x h weights, one learnable pReLU slope per layer.
struct GcnEncoder {
    Matrix w1;
    Matrix w2;
    double slope1 = 0.25;
    double slope2 = 0.25;

    // Weights ~ U(-1/sqrt(h), 1/sqrt(h)).
    static GcnEncoder init(int h, Rng& rng);
    int width() const { return static_cast<int>(w1.rows()); }
    bool finite() const;
};

// D^{-1/2}(A + I)D^{-1/2}; degrees counted from `edges` (undirected pairs).
SparseMatrix normalized_adjacency(std::size_t num_nodes, std::span<const std::pair<DenseIndex, DenseIndex>> edges);
// Same with caller-supplied degrees (excluding the self loop). Lets a
// subgraph reproduce the full graph's normalization.
SparseMatrix normalized_adjacency(std::size_t num_nodes, std::span<const std::pair<DenseIndex, DenseIndex>> edges,
                                  std::span<const double> degrees);

Matrix prelu(const Matrix& z, double slope);

// Intermediate activations kept for the backward pass.
struct GcnTape {
    SparseMatrix adj;
    Matrix ax;   // adj X
    Matrix z1;   // adj X W1
    Matrix h1;   // prelu(z1)
    Matrix ah1;  // adj h1
    Matrix z2;   // adj h1 W2
    Matrix out;  // prelu(z2)
};

GcnTape gcn_forward_tape(const GcnEncoder& encoder, const Matrix& x, SparseMatrix adj);

Matrix gcn_forward(const GcnEncoder& encoder, const Matrix& x,
                   std::span<const std::pair<DenseIndex, DenseIndex>> edges);

struct GcnGradients {
    Matrix w1;
    Matrix w2;
    double slope1 = 0.0;
    double slope2 = 0.0;

    static GcnGradients zeros(int h);
    GcnGradients& operator+=(const GcnGradients& other);
};

GcnGradients gcn_backward(const GcnEncoder& encoder, const GcnTape& tape, const Matrix& d_out);

// R = g(X, A) over the whole graph, computed in batches of target nodes.
// Each batch runs on the exact 2-hop neighborhood with global degrees, so
// the result equals the single full-graph forward pass.
Matrix encode_all(const GcnEncoder& encoder, const Matrix& x, const RelationGraph& graph,
                  std::size_t batch_size);

}  // namespace medrep::graph

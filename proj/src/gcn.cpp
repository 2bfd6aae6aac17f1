#include "medrep/gcn.hpp"

#include <algorithm>
#include <cmath>

#include "medrep/error.hpp"

namespace medrep::graph {

GcnEncoder GcnEncoder::init(int h, Rng& rng) {
    if (h <= 0) throw Error(ErrorCode::BadDimension, "encoder width must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    GcnEncoder enc;
    enc.w1.resize(h, h);
    enc.w2.resize(h, h);
    for (Eigen::Index i = 0; i < enc.w1.size(); ++i) enc.w1.data()[i] = uniform_real(rng, -bound, bound);
    for (Eigen::Index i = 0; i < enc.w2.size(); ++i) enc.w2.data()[i] = uniform_real(rng, -bound, bound);
    return enc;
}

bool GcnEncoder::finite() const {
    return w1.allFinite() && w2.allFinite() && std::isfinite(slope1) && std::isfinite(slope2);
}

SparseMatrix normalized_adjacency(std::size_t num_nodes,
                                  std::span<const std::pair<DenseIndex, DenseIndex>> edges) {
    std::vector<double> degrees(num_nodes, 0.0);
    for (auto [a, b] : edges) {
        if (a >= num_nodes || b >= num_nodes) throw Error(ErrorCode::ShapeError, "edge endpoint out of range");
        degrees[a] += 1.0;
        degrees[b] += 1.0;
    }
    return normalized_adjacency(num_nodes, edges, degrees);
}

SparseMatrix normalized_adjacency(std::size_t num_nodes,
                                  std::span<const std::pair<DenseIndex, DenseIndex>> edges,
                                  std::span<const double> degrees) {
    if (degrees.size() != num_nodes) throw Error(ErrorCode::ShapeError, "degree vector size mismatch");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(num_nodes + 2 * edges.size());
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const auto n = static_cast<Eigen::Index>(i);
        triplets.emplace_back(n, n, 1.0 / (degrees[i] + 1.0));
    }
    for (auto [a, b] : edges) {
        if (a >= num_nodes || b >= num_nodes) throw Error(ErrorCode::ShapeError, "edge endpoint out of range");
        const double w = 1.0 / std::sqrt((degrees[a] + 1.0) * (degrees[b] + 1.0));
        triplets.emplace_back(a, b, w);
        triplets.emplace_back(b, a, w);
    }
    const auto n = static_cast<Eigen::Index>(num_nodes);
    SparseMatrix adj(n, n);
    adj.setFromTriplets(triplets.begin(), triplets.end());
    return adj;
}

Matrix prelu(const Matrix& z, double slope) {
    return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

GcnTape gcn_forward_tape(const GcnEncoder& encoder, const Matrix& x, SparseMatrix adj) {
    if (x.cols() != encoder.w1.rows())
        throw Error(ErrorCode::ShapeError, "feature width " + std::to_string(x.cols()) +
                                               " != encoder width " + std::to_string(encoder.w1.rows()));
    if (adj.rows() != x.rows()) throw Error(ErrorCode::ShapeError, "adjacency/feature row mismatch");
    GcnTape t;
    t.adj = std::move(adj);
    t.ax = t.adj * x;
    t.z1 = t.ax * encoder.w1;
    t.h1 = prelu(t.z1, encoder.slope1);
    t.ah1 = t.adj * t.h1;
    t.z2 = t.ah1 * encoder.w2;
    t.out = prelu(t.z2, encoder.slope2);
    return t;
}

Matrix gcn_forward(const GcnEncoder& encoder, const Matrix& x,
                   std::span<const std::pair<DenseIndex, DenseIndex>> edges) {
    auto adj = normalized_adjacency(static_cast<std::size_t>(x.rows()), edges);
    return gcn_forward_tape(encoder, x, std::move(adj)).out;
}

GcnGradients GcnGradients::zeros(int h) {
    return {Matrix::Zero(h, h), Matrix::Zero(h, h), 0.0, 0.0};
}

GcnGradients& GcnGradients::operator+=(const GcnGradients& other) {
    w1 += other.w1;
    w2 += other.w2;
    slope1 += other.slope1;
    slope2 += other.slope2;
    return *this;
}

GcnGradients gcn_backward(const GcnEncoder& encoder, const GcnTape& tape, const Matrix& d_out) {
    GcnGradients g;
    Matrix d_z2 = d_out;
    g.slope2 = 0.0;
    for (Eigen::Index i = 0; i < d_z2.size(); ++i) {
        const double z = tape.z2.data()[i];
        if (z <= 0.0) {
            g.slope2 += d_out.data()[i] * z;
            d_z2.data()[i] *= encoder.slope2;
        }
    }
    g.w2 = tape.ah1.transpose() * d_z2;
    const Matrix d_ah1 = d_z2 * encoder.w2.transpose();
    Matrix d_z1 = tape.adj.transpose() * d_ah1;
    g.slope1 = 0.0;
    for (Eigen::Index i = 0; i < d_z1.size(); ++i) {
        const double z = tape.z1.data()[i];
        if (z <= 0.0) {
            g.slope1 += d_z1.data()[i] * z;
            d_z1.data()[i] *= encoder.slope1;
        }
    }
    g.w1 = tape.ax.transpose() * d_z1;
    return g;
}

Matrix encode_all(const GcnEncoder& encoder, const Matrix& x, const RelationGraph& graph,
                  std::size_t batch_size) {
    const std::size_t n = graph.num_nodes();
    if (static_cast<std::size_t>(x.rows()) != n)
        throw Error(ErrorCode::ShapeError, "feature rows != graph nodes");
    if (x.cols() != encoder.w1.rows()) throw Error(ErrorCode::ShapeError, "feature width mismatch");
    if (batch_size == 0) batch_size = n;
    Matrix out(x.rows(), x.cols());
    std::vector<std::int64_t> local(n, -1);
    std::vector<DenseIndex> nodes;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t stop = std::min(n, start + batch_size);
        nodes.clear();
        auto visit = [&](DenseIndex v) {
            if (local[v] < 0) {
                local[v] = static_cast<std::int64_t>(nodes.size());
                nodes.push_back(v);
            }
        };
        for (std::size_t v = start; v < stop; ++v) visit(static_cast<DenseIndex>(v));
        for (int hop = 0; hop < 2; ++hop) {
            const std::size_t frontier_end = nodes.size();
            for (std::size_t i = 0; i < frontier_end; ++i)
                for (auto u : graph.neighbors(nodes[i])) visit(u);
        }
        EdgeList edges;
        std::vector<double> degrees(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            degrees[i] = static_cast<double>(graph.degree(nodes[i]));
            for (auto u : graph.neighbors(nodes[i])) {
                const auto j = local[u];
                if (j > static_cast<std::int64_t>(i))
                    edges.emplace_back(static_cast<DenseIndex>(i), static_cast<DenseIndex>(j));
            }
        }
        Matrix xs(static_cast<Eigen::Index>(nodes.size()), x.cols());
        for (std::size_t i = 0; i < nodes.size(); ++i) xs.row(static_cast<Eigen::Index>(i)) = x.row(nodes[i]);
        auto adj = normalized_adjacency(nodes.size(), edges, degrees);
        const auto tape = gcn_forward_tape(encoder, xs, std::move(adj));
        for (std::size_t v = start; v < stop; ++v)
            out.row(static_cast<Eigen::Index>(v)) = tape.out.row(local[v]);
        for (auto v : nodes) local[v] = -1;
    }
    return out;
}

}  // namespace medrep::graph

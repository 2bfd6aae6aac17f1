#pragma once

// Independent reference implementations. Deliberately naive: dense
// matrices, explicit loops, no shared code with the library beyond types.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "medrep/linalg.hpp"
#include "medrep/vocab.hpp"

namespace oracle {

using medrep::DenseIndex;
using medrep::Matrix;

// O(N^2) neighbor table: full distance list per anchor, sorted by
// (squared distance, index).
inline std::vector<std::vector<DenseIndex>> brute_knn(const Matrix& r, std::size_t m,
                                                      const std::vector<DenseIndex>& eligible) {
    std::vector<std::vector<DenseIndex>> out(static_cast<std::size_t>(r.rows()));
    for (auto a : eligible) {
        std::vector<std::pair<double, DenseIndex>> all;
        for (auto b : eligible) {
            if (a == b) continue;
            double d = 0;
            for (Eigen::Index c = 0; c < r.cols(); ++c) {
                const double diff = r(a, c) - r(b, c);
                d += diff * diff;
            }
            all.emplace_back(d, b);
        }
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < m; ++i) out[a].push_back(all[i].second);
    }
    return out;
}

inline double pair_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (y[i] == 1 && y[j] == 0) {
                pairs += 1;
                wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
            }
    return wins / pairs;
}

struct Youden {
    double threshold, j, f1;
};

// Every distinct score as a candidate; strictly better J wins, so ties keep
// the lowest threshold.
inline Youden exhaustive_youden(const std::vector<double>& s, const std::vector<int>& y) {
    std::vector<double> cand(s);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    Youden best{0, -2, 0};
    for (double t : cand) {
        double tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const bool pred = s[i] >= t;
            if (y[i]) (pred ? tp : fn) += 1;
            else (pred ? fp : tn) += 1;
        }
        const double j = tp / (tp + fn) + tn / (tn + fp) - 1;
        if (j > best.j) best = {t, j, 2 * tp / (2 * tp + fp + fn)};
    }
    return best;
}

inline double cosine(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
    double dot = 0, na = 0, nb = 0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        dot += a(i, c) * b(j, c);
        na += a(i, c) * a(i, c);
        nb += b(j, c) * b(j, c);
    }
    return dot / std::sqrt(na * nb);
}

// l(u_i, v_i) = -log( e^{s(u_i,v_i)/t} / (sum_j e^{s(u_i,v_j)/t} + sum_{j!=i} e^{s(u_i,u_j)/t}) )
inline double loop_pair_loss(const Matrix& u, const Matrix& v, Eigen::Index i, double tau) {
    double denom = 0;
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
        denom += std::exp(cosine(u, i, v, j) / tau);
        if (j != i) denom += std::exp(cosine(u, i, u, j) / tau);
    }
    return -std::log(std::exp(cosine(u, i, v, i) / tau) / denom);
}

inline double loop_contrastive(const Matrix& u, const Matrix& v, double tau) {
    double total = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) total += loop_pair_loss(u, v, i, tau) + loop_pair_loss(v, u, i, tau);
    return total / (2.0 * static_cast<double>(u.rows()));
}

inline double loop_kd(const Matrix& text, const Matrix& graph) {
    double total = 0;
    for (Eigen::Index i = 0; i < text.rows(); ++i) {
        double zp = 0, zq = 0;
        for (Eigen::Index c = 0; c < text.cols(); ++c) {
            zp += std::exp(text(i, c));
            zq += std::exp(graph(i, c));
        }
        for (Eigen::Index c = 0; c < text.cols(); ++c) {
            const double p = std::exp(text(i, c)) / zp, q = std::exp(graph(i, c)) / zq;
            total += p * std::log(p / q);
        }
    }
    return total;
}

// Dense D^-1/2 (A+I) D^-1/2 and the two-layer forward.
inline Matrix dense_gcn(const Matrix& x, const std::vector<std::pair<int, int>>& edges, const Matrix& w1,
                        const Matrix& w2, double a1, double a2) {
    const auto n = x.rows();
    Matrix a = Matrix::Identity(n, n);
    for (auto [i, j] : edges) a(i, j) = a(j, i) = 1;
    Matrix norm(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) norm(i, j) = a(i, j) / std::sqrt(a.row(i).sum() * a.row(j).sum());
    auto act = [](Matrix z, double s) {
        for (Eigen::Index k = 0; k < z.size(); ++k)
            if (z.data()[k] < 0) z.data()[k] *= s;
        return z;
    };
    return act(norm * act(norm * x * w1, a1) * w2, a2);
}

inline double central_difference(const std::function<double()>& f, double& param, double step = 1e-6) {
    const double keep = param;
    param = keep + step;
    const double up = f();
    param = keep - step;
    const double down = f();
    param = keep;
    return (up - down) / (2 * step);
}

// Relative error with an absolute floor for near-zero gradients.
inline double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

inline double chi_square_pvalue(const std::vector<double>& observed, const std::vector<double>& expected) {
    double stat = 0;
    for (std::size_t i = 0; i < observed.size(); ++i)
        stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
    boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// "<case>\t<stream>\t<v0> <v1> ..." lines; '#' lines are comments.
using Golden = std::map<std::pair<std::string, std::string>, std::vector<std::uint32_t>>;

inline Golden load_golden(const std::string& path) {
    Golden g;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string name, stream;
        std::getline(ss, name, '\t');
        std::getline(ss, stream, '\t');
        std::vector<std::uint32_t> values;
        std::uint32_t v;
        while (ss >> v) values.push_back(v);
        g[{name, stream}] = values;
    }
    return g;
}

}  // namespace oracle

#include "medrep/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "medrep/error.hpp"

namespace medrep {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels, std::size_t& pos,
                  std::size_t& neg) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeError, "scores/labels length mismatch");
    pos = 0;
    for (int l : labels) pos += l != 0;
    neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw Error(ErrorCode::UndefinedMetric, "both classes must be present");
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    std::size_t pos = 0, neg = 0;
    check_inputs(scores, labels, pos, neg);
    const auto order = ascending_order(scores);
    // Mann-Whitney U from average ranks over tie groups.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            group_pos += labels[order[j]] != 0;
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
        rank_sum += avg_rank * static_cast<double>(group_pos);
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels) {
    std::size_t pos = 0, neg = 0;
    check_inputs(scores, labels, pos, neg);
    const auto order = ascending_order(scores);
    // Walking thresholds upward: everything at or above the current
    // distinct score is predicted positive.
    std::size_t below_pos = 0, below_neg = 0;
    YoudenResult best;
    double best_j = -1.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        const double tp = static_cast<double>(pos - below_pos);
        const double fp = static_cast<double>(neg - below_neg);
        const double fn = static_cast<double>(below_pos);
        const double sens = tp / static_cast<double>(pos);
        const double spec = static_cast<double>(below_neg) / static_cast<double>(neg);
        if (sens + spec > best_j) {
            best_j = sens + spec;
            best.threshold = threshold;
            best.sensitivity = sens;
            best.specificity = spec;
            best.f1 = tp == 0.0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
        }
        while (i < order.size() && scores[order[i]] == threshold) {
            (labels[order[i]] != 0 ? below_pos : below_neg) += 1;
            ++i;
        }
    }
    return best;
}

}  // namespace medrep

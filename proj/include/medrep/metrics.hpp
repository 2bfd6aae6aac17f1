#pragma once

#include <span>

namespace medrep {

// P(score of a random positive > score of a random negative), ties 1/2.
// Throws UndefinedMetric unless both classes are present.
double auroc(std::span<const double> scores, std::span<const int> labels);

struct YoudenResult {
    double threshold = 0.0;
    double f1 = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
};

// Scans every distinct score as a threshold (predict positive when
// score >= threshold) and keeps the one maximizing sensitivity +
// specificity, lowest threshold on ties.
YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels);

}  // namespace medrep

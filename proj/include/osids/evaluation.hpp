#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osids/net.hpp"

namespace osids {

// Square count matrix over {known classes..., UNKNOWN_ATTACK}; rows are
// predicted labels, columns are ground truth.
struct ConfusionMatrix {
    std::vector<std::string> labels; // known classes in bundle order, then UNKNOWN_ATTACK
    std::vector<std::int64_t> counts; // row-major [pred][truth]

    int size() const { return static_cast<int>(labels.size()); }
    std::int64_t at(int pred, int truth) const { return counts[pred * size() + truth]; }
    std::int64_t& at(int pred, int truth) { return counts[pred * size() + truth]; }
    std::int64_t total() const;
    std::int64_t row_sum(int pred) const;
    std::int64_t col_sum(int truth) const;

    // each column divided by its sum (per-truth-class distribution); empty
    // columns stay zero
    std::vector<double> normalized() const;
};

// Truth labels outside known_classes collapse to UNKNOWN_ATTACK. Predicted
// labels must come from known_classes or be UNKNOWN_ATTACK.
ConfusionMatrix confusion(const std::vector<std::string>& predicted,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& known_classes);

// Metrics with empty denominators are reported as absent, never as 0.
struct BinaryMetrics {
    std::optional<double> acc, f1, fpr;
};

struct MultiMetrics {
    std::optional<double> r_unk, p_wht, r_wht, f1_wht;
};

// Binary collapse: positive = any attack (known or unknown), negative =
// benign. FPR = benign flows predicted as attack / all benign flows.
BinaryMetrics binary_metrics(const ConfusionMatrix& matrix);

// Unknown-attack recall plus support-weighted precision/recall/F1 over the
// full label set (benign and unknown included). Per-class precision of a
// never-predicted class contributes zero weight to the average.
MultiMetrics multi_metrics(const ConfusionMatrix& matrix);

} // namespace osids

#include "osids/evaluation.hpp"

#include <algorithm>
#include <unordered_map>

#include "osids/error.hpp"

namespace osids {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
}

std::int64_t ConfusionMatrix::row_sum(int pred) const {
    std::int64_t s = 0;
    for (int t = 0; t < size(); ++t) s += at(pred, t);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int truth) const {
    std::int64_t s = 0;
    for (int p = 0; p < size(); ++p) s += at(p, truth);
    return s;
}

std::vector<double> ConfusionMatrix::normalized() const {
    const int n = size();
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int t = 0; t < n; ++t) {
        const std::int64_t cs = col_sum(t);
        if (cs == 0) continue;
        for (int p = 0; p < n; ++p)
            out[static_cast<std::size_t>(p) * n + t] =
                static_cast<double>(at(p, t)) / static_cast<double>(cs);
    }
    return out;
}

ConfusionMatrix confusion(const std::vector<std::string>& predicted,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& known_classes) {
    if (predicted.size() != truth.size())
        throw Error("confusion: predicted and truth label counts differ");

    ConfusionMatrix m;
    m.labels = known_classes;
    m.labels.push_back(kUnknownLabel);
    const int n = m.size();
    m.counts.assign(static_cast<std::size_t>(n) * n, 0);

    std::unordered_map<std::string, int> index;
    for (int i = 0; i < n; ++i) index[m.labels[i]] = i;
    const int unknown_idx = n - 1;

    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto pit = index.find(predicted[i]);
        if (pit == index.end())
            throw Error("confusion: predicted label '" + predicted[i] +
                        "' is not a known class or " + kUnknownLabel);
        const auto tit = index.find(truth[i]);
        const int t = tit == index.end() ? unknown_idx : tit->second;
        ++m.at(pit->second, t);
    }
    return m;
}

namespace {

std::optional<double> ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

BinaryMetrics binary_metrics(const ConfusionMatrix& m) {
    const int n = m.size();
    int benign = -1;
    for (int i = 0; i < n; ++i)
        if (m.labels[i] == kBenignLabel) benign = i;

    // collapse: attack = every label except benign
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (int p = 0; p < n; ++p)
        for (int t = 0; t < n; ++t) {
            const bool pred_attack = p != benign;
            const bool true_attack = t != benign;
            const std::int64_t c = m.at(p, t);
            if (pred_attack && true_attack) tp += c;
            else if (!pred_attack && !true_attack) tn += c;
            else if (pred_attack && !true_attack) fp += c;
            else fn += c;
        }

    BinaryMetrics b;
    b.acc = ratio(tp + tn, tp + fp + fn + tn);
    const auto precision = ratio(tp, tp + fp);
    const auto recall = ratio(tp, tp + fn);
    if (precision && recall && *precision + *recall > 0.0)
        b.f1 = 2.0 * *precision * *recall / (*precision + *recall);
    b.fpr = benign >= 0 ? ratio(fp, fp + tn) : std::nullopt; // denominator = all benign flows
    return b;
}

MultiMetrics multi_metrics(const ConfusionMatrix& m) {
    const int n = m.size();
    const int unknown = n - 1;
    const std::int64_t total = m.total();

    MultiMetrics mm;
    mm.r_unk = ratio(m.at(unknown, unknown), m.col_sum(unknown));

    if (total > 0) {
        double p_wht = 0.0, r_wht = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::int64_t support = m.col_sum(i); // w_i
            if (support == 0) continue;
            const std::int64_t row = m.row_sum(i);
            const double prec = row > 0 ? static_cast<double>(m.at(i, i)) / row : 0.0;
            const double rec = static_cast<double>(m.at(i, i)) / support;
            p_wht += static_cast<double>(support) * prec;
            r_wht += static_cast<double>(support) * rec;
        }
        mm.p_wht = p_wht / static_cast<double>(total);
        mm.r_wht = r_wht / static_cast<double>(total);
        if (*mm.p_wht + *mm.r_wht > 0.0)
            mm.f1_wht = 2.0 * *mm.p_wht * *mm.r_wht / (*mm.p_wht + *mm.r_wht);
    }
    return mm;
}

} // namespace osids

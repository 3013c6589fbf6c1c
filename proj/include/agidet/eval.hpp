#pragma once

#include <span>
#include <tuple>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::eval {

struct ConfusionMatrix {
    long long tp = 0, fp = 0, fn = 0, tn = 0;

    long long total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

inline void accumulate(ConfusionMatrix& m, int pred, int truth) {
    if (pred == 1)
        (truth == 1 ? m.tp : m.fp)++;
    else
        (truth == 1 ? m.fn : m.tn)++;
}

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth);

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each 0 when its
// denominator vanishes so extreme-threshold sweeps never abort.
std::tuple<double, double, double> precision_recall_f1(const ConfusionMatrix& m);

// Rank-based AUROC with half credit for tied score pairs (the Mann-Whitney
// convention); agrees with O(n^2) pair counting to 1e-9. Throws DataError
// when truth holds a single class.
double auroc(std::span<const double> scores, std::span<const int> truth);

}  // namespace agidet::eval

#include "agidet/eval.hpp"

#include <algorithm>
#include <numeric>

namespace agidet::eval {

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size())
        throw DataError("confusion: pred/truth length mismatch (" +
                        std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
                        ")");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < pred.size(); ++i) accumulate(m, pred[i], truth[i]);
    return m;
}

std::tuple<double, double, double> precision_recall_f1(const ConfusionMatrix& m) {
    const double p =
        m.tp + m.fp > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    const double r =
        m.tp + m.fn > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    const double f1 = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    return {p, r, f1};
}

double auroc(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size())
        throw DataError("auroc: scores/truth length mismatch");
    const std::size_t n = scores.size();
    std::size_t n1 = 0;
    for (int t : truth) {
        if (t != 0 && t != 1) throw DataError("auroc: truth labels must be 0 or 1");
        n1 += static_cast<std::size_t>(t);
    }
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw DataError("auroc: both classes required");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups, sum positive ranks
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k)
            if (truth[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
    return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

}  // namespace agidet::eval

#include "agidet/decide.hpp"

#include <algorithm>

#include "agidet/eval.hpp"

namespace agidet::decide {

int interim_label(double score, double threshold) { return score >= threshold ? 1 : 0; }

DecisionTrace ccr_relabel(std::span<const double> scores, const CcrParams& params) {
    if (params.win < 1) throw DataError("ccr_relabel: win must be >= 1");
    DecisionTrace trace;
    trace.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        TraceEntry e;
        e.score = scores[i];
        e.interim = interim_label(scores[i], params.threshold);

        const std::size_t have = std::min<std::size_t>(i, static_cast<std::size_t>(params.win));
        int flag = 0;
        for (std::size_t k = i - have; k < i; ++k) flag += trace[k].interim;
        e.flag = flag;

        if (i < static_cast<std::size_t>(params.win)) {
            e.final_label = e.interim;  // not enough history yet
        } else if (flag == 0) {
            e.final_label = 0;
        } else if (static_cast<double>(flag) > params.win / 2.0) {
            e.final_label = 1;
        } else {
            e.final_label = e.interim;
        }
        trace.push_back(e);
    }
    return trace;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
    return grid;
}

std::vector<SweepRow> sweep_thresholds(std::span<const DaySeries> days,
                                       std::span<const double> grid, int win) {
    for (const auto& d : days)
        if (d.scores.size() != d.truth.size())
            throw DataError("sweep_thresholds: scores/truth length mismatch for " +
                            d.participant_id + " " + d.day);
    for (double th : grid)
        if (!(th > 0.0) || !(th < 1.0))
            throw DataError("sweep_thresholds: grid thresholds must lie in (0, 1)");

    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double th : grid) {
        CcrParams params{win, th};
        eval::ConfusionMatrix orig, ccr;
        for (const auto& d : days) {
            const DecisionTrace trace = ccr_relabel(d.scores, params);
            for (std::size_t i = 0; i < trace.size(); ++i) {
                const int truth = d.truth[i];
                eval::accumulate(orig, trace[i].interim, truth);
                eval::accumulate(ccr, trace[i].final_label, truth);
            }
        }
        SweepRow row;
        row.threshold = th;
        std::tie(row.p_orig, row.r_orig, row.f1_orig) = eval::precision_recall_f1(orig);
        std::tie(row.p_ccr, row.r_ccr, row.f1_ccr) = eval::precision_recall_f1(ccr);
        rows.push_back(row);
    }
    return rows;
}

ThresholdRange effective_threshold_range(std::span<const SweepRow> sweep) {
    ThresholdRange out;
    if (sweep.empty()) return out;
    double orig_peak = 0.0;
    for (const auto& r : sweep) orig_peak = std::max(orig_peak, r.f1_orig);

    std::size_t run_begin = 0;
    bool in_run = false;
    auto close_run = [&](std::size_t end_exclusive) {
        out.runs.emplace_back(sweep[run_begin].threshold,
                              sweep[end_exclusive - 1].threshold);
    };
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        const bool above = sweep[i].f1_ccr > orig_peak;
        if (above && !in_run) {
            run_begin = i;
            in_run = true;
        } else if (!above && in_run) {
            close_run(i);
            in_run = false;
        }
    }
    if (in_run) close_run(sweep.size());

    if (out.runs.empty()) return out;
    // longest run, leftmost on ties
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.runs.size(); ++i) {
        const double len_best = out.runs[best].second - out.runs[best].first;
        const double len_i = out.runs[i].second - out.runs[i].first;
        if (len_i > len_best + 1e-15) best = i;
    }
    out.empty = false;
    out.lo = out.runs[best].first;
    out.hi = out.runs[best].second;
    return out;
}

}  // namespace agidet::decide

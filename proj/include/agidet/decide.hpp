#pragma once

#include <span>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::decide {

struct CcrParams {
    int win = 5;
    double threshold = 0.5;
};

// 1 iff score >= threshold (boundary inclusive).
int interim_label(double score, double threshold);

struct TraceEntry {
    double score = 0.0;
    int interim = 0;      // threshold decision
    int flag = 0;         // interim-label votes over the previous win minutes
    int final_label = 0;  // after re-decision
};
using DecisionTrace = std::vector<TraceEntry>;

// Cumulative class re-decision over one participant-day of chronological
// scores, single left-to-right pass, no lookahead. flag counts interim labels
// of the previous min(win, i) instances; the re-decision rule (0 if no votes,
// 1 if more than win/2 votes, interim otherwise) applies only once a full
// window of history exists — earlier instances keep their interim label.
DecisionTrace ccr_relabel(std::span<const double> scores, const CcrParams& params);

// Scores and truth for one participant-day, chronological. Decision windows
// never cross day boundaries.
struct DaySeries {
    std::string participant_id;
    std::string day;
    std::vector<double> scores;
    std::vector<int> truth;
};

struct SweepRow {
    double threshold = 0.0;
    double p_orig = 0.0, r_orig = 0.0, f1_orig = 0.0;
    double p_ccr = 0.0, r_ccr = 0.0, f1_ccr = 0.0;
};

// Pooled precision/recall/F1 at each grid threshold, for the raw interim
// labels ("Original") and for CCR relabeling.
std::vector<SweepRow> sweep_thresholds(std::span<const DaySeries> days,
                                       std::span<const double> grid, int win);

std::vector<double> default_threshold_grid();  // 0.01 .. 0.99 step 0.01

// Thresholds where the CCR F1 curve strictly exceeds the Original curve's
// peak. `lo`/`hi` give the longest contiguous grid run (leftmost on ties);
// all runs are reported.
struct ThresholdRange {
    bool empty = true;
    double lo = 0.0, hi = 0.0;
    std::vector<std::pair<double, double>> runs;
};
ThresholdRange effective_threshold_range(std::span<const SweepRow> sweep);

}  // namespace agidet::decide

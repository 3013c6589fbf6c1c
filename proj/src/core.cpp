#include "agidet/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace agidet::core {

namespace {

const char* kDataHeader =
    "participant_id,day,minute_index,label,category,"
    "f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15,f16,f17,f18,f19,f20,"
    "f21,f22,f23,f24,f25,f26,f27,f28,f29,f30,f31,f32,f33,f34,f35,f36,f37,f38,"
    "f39,f40,f41,f42,f43,f44,f45,f46,f47,f48,f49,f50,f51,f52,f53,f54,f55,f56,"
    "f57,f58,f59,f60,f61,f62,f63,f64,f65,f66,f67";

const char* kAnnHeader = "participant_id,day,start_minute,end_minute";

std::string row_context(const std::string& file, std::size_t row) {
    return file + " row " + std::to_string(row);
}

}  // namespace

void validate_dataset(const LabeledDataset& dataset) {
    for (std::size_t i = 0; i < dataset.annotations.size(); ++i) {
        const auto& a = dataset.annotations[i];
        if (a.start_minute > a.end_minute)
            throw DataError("annotation " + std::to_string(i + 1) + ": start_minute " +
                            std::to_string(a.start_minute) + " > end_minute " +
                            std::to_string(a.end_minute));
        if (a.start_minute < 0)
            throw DataError("annotation " + std::to_string(i + 1) + ": negative start_minute");
    }
    // Episodes within one participant-day must not overlap.
    {
        std::vector<std::tuple<std::string, std::string, int, int>> spans;
        spans.reserve(dataset.annotations.size());
        for (const auto& a : dataset.annotations)
            spans.emplace_back(a.participant_id, a.day, a.start_minute, a.end_minute);
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (std::get<0>(spans[i]) == std::get<0>(spans[i - 1]) &&
                std::get<1>(spans[i]) == std::get<1>(spans[i - 1]) &&
                std::get<2>(spans[i]) <= std::get<3>(spans[i - 1]))
                throw DataError("overlapping episodes for " + std::get<0>(spans[i]) + " " +
                                std::get<1>(spans[i]));
        }
    }

    DayKey prev_key;
    int prev_minute = -1;
    bool have_prev = false;
    for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
        const auto& w = dataset.instances[i];
        const std::string where = "instance row " + std::to_string(i + 1);
        if (w.features.size() != static_cast<std::size_t>(kFeatureCount))
            throw DataError(where + ": expected " + std::to_string(kFeatureCount) +
                            " features, got " + std::to_string(w.features.size()));
        for (double f : w.features)
            if (!std::isfinite(f)) throw DataError(where + ": non-finite feature value");
        if (w.minute_index < 0) throw DataError(where + ": negative minute_index");
        if (w.label != 0 && w.label != 1) throw DataError(where + ": label must be 0 or 1");

        DayKey key{w.participant_id, w.day};
        if (have_prev && key == prev_key && w.minute_index <= prev_minute)
            throw DataError(where + ": minute_index not strictly increasing within " +
                            w.participant_id + " " + w.day);
        prev_key = key;
        prev_minute = w.minute_index;
        have_prev = true;

        const bool inside =
            minute_is_annotated(dataset.annotations, w.participant_id, w.day, w.minute_index);
        if (w.label == 1 && !inside)
            throw DataError(where + ": label-1 instance outside all annotations");
        if (w.label == 0 && inside)
            throw DataError(where + ": label-0 instance inside an annotation");
    }
}

LabeledDataset load_dataset(const std::string& prefix) {
    const std::string data_path = prefix + ".data.csv";
    const std::string ann_path = prefix + ".ann.csv";

    LabeledDataset ds;

    {
        std::ifstream f(ann_path);
        if (!f) throw DataError("missing file: " + ann_path);
        std::string line;
        std::size_t row = 0;
        bool saw_header = false;
        while (std::getline(f, line)) {
            ++row;
            if (line.empty()) continue;
            if (line[0] == '#') continue;
            if (!saw_header) {
                if (line != kAnnHeader)
                    throw DataError(ann_path + ": bad header: '" + line + "'");
                saw_header = true;
                continue;
            }
            auto cols = split(line, ',');
            if (cols.size() != 4)
                throw DataError(row_context(ann_path, row) + ": expected 4 columns, got " +
                                std::to_string(cols.size()));
            EpisodeAnnotation a;
            a.participant_id = cols[0];
            a.day = cols[1];
            a.start_minute = static_cast<int>(parse_int(cols[2], row_context(ann_path, row)));
            a.end_minute = static_cast<int>(parse_int(cols[3], row_context(ann_path, row)));
            ds.annotations.push_back(std::move(a));
        }
        if (!saw_header) throw DataError(ann_path + ": empty file (no header)");
    }

    {
        std::ifstream f(data_path);
        if (!f) throw DataError("missing file: " + data_path);
        std::string line;
        std::size_t row = 0;
        std::size_t data_rows = 0;
        bool saw_header = false;
        while (std::getline(f, line)) {
            ++row;
            if (line.empty()) continue;
            if (line.rfind("# provenance: ", 0) == 0) {
                ds.provenance = line.substr(14);
                continue;
            }
            if (line[0] == '#') continue;
            if (!saw_header) {
                if (line != kDataHeader)
                    throw DataError(data_path + ": bad header: '" + line + "'");
                saw_header = true;
                continue;
            }
            auto cols = split(line, ',');
            if (cols.size() != 5 + kFeatureCount)
                throw DataError(row_context(data_path, row) + ": expected " +
                                std::to_string(5 + kFeatureCount) + " columns, got " +
                                std::to_string(cols.size()));
            WindowInstance w;
            w.participant_id = cols[0];
            w.day = cols[1];
            w.minute_index =
                static_cast<int>(parse_int(cols[2], row_context(data_path, row)));
            w.label = static_cast<int>(parse_int(cols[3], row_context(data_path, row)));
            w.category = static_cast<int>(parse_int(cols[4], row_context(data_path, row)));
            w.features.resize(kFeatureCount);
            for (int j = 0; j < kFeatureCount; ++j)
                w.features[j] = parse_double(cols[5 + j], row_context(data_path, row));
            ds.instances.push_back(std::move(w));
            ++data_rows;
        }
        if (!saw_header) throw DataError(data_path + ": empty file (no header)");
        if (data_rows != ds.instances.size())
            throw DataError(data_path + ": internal row accounting mismatch");
    }

    validate_dataset(ds);
    return ds;
}

void save_dataset(const LabeledDataset& dataset, const std::string& prefix) {
    validate_dataset(dataset);

    std::ostringstream data;
    if (!dataset.provenance.empty()) data << "# provenance: " << dataset.provenance << "\n";
    data << kDataHeader << "\n";
    for (const auto& w : dataset.instances) {
        data << w.participant_id << ',' << w.day << ',' << w.minute_index << ',' << w.label
             << ',' << w.category;
        for (double f : w.features) data << ',' << format_g9(f);
        data << "\n";
    }

    std::ostringstream ann;
    ann << kAnnHeader << "\n";
    for (const auto& a : dataset.annotations)
        ann << a.participant_id << ',' << a.day << ',' << a.start_minute << ','
            << a.end_minute << "\n";

    write_file_atomic(prefix + ".data.csv", data.str());
    write_file_atomic(prefix + ".ann.csv", ann.str());
}

SplitPlan make_folds(const LabeledDataset& dataset, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw DataError("make_folds: n_folds must be >= 2");

    struct DayInfo {
        DayKey key;
        long long pos_minutes = 0;
        long long total_minutes = 0;
    };
    std::map<DayKey, DayInfo> by_day;
    for (const auto& w : dataset.instances) {
        auto& d = by_day[DayKey{w.participant_id, w.day}];
        d.key = DayKey{w.participant_id, w.day};
        d.total_minutes++;
        if (w.label == 1) d.pos_minutes++;
    }

    std::vector<DayInfo> pos_days, neg_days;
    long long total_pos = 0, total_neg = 0;
    for (auto& [key, d] : by_day) {
        total_pos += d.pos_minutes;
        total_neg += d.total_minutes - d.pos_minutes;
        if (d.pos_minutes > 0)
            pos_days.push_back(d);
        else
            neg_days.push_back(d);
    }
    if (total_pos == 0) throw DataError("make_folds: no agitation instances in dataset");
    if (total_neg == 0) throw DataError("make_folds: no normal instances in dataset");
    if (pos_days.size() < static_cast<std::size_t>(n_folds))
        throw DataError("make_folds: need at least " + std::to_string(n_folds) +
                        " participant-days containing agitation, have " +
                        std::to_string(pos_days.size()));
    if (by_day.size() < static_cast<std::size_t>(n_folds))
        throw DataError("make_folds: fewer participant-days than folds");

    Rng rng(derive_seed(seed, 0xf01d5));
    rng.shuffle(pos_days);
    rng.shuffle(neg_days);
    // Largest agitation days placed first, each onto the currently lightest
    // fold; shuffle above randomises tie order per seed.
    std::stable_sort(pos_days.begin(), pos_days.end(),
                     [](const DayInfo& a, const DayInfo& b) {
                         return a.pos_minutes > b.pos_minutes;
                     });

    SplitPlan plan;
    plan.n_folds = n_folds;
    std::vector<long long> fold_pos(static_cast<std::size_t>(n_folds), 0);
    std::vector<long long> fold_days(static_cast<std::size_t>(n_folds), 0);
    std::vector<long long> fold_total(static_cast<std::size_t>(n_folds), 0);

    auto lightest = [&](const std::vector<long long>& weight) {
        int best = 0;
        for (int f = 1; f < n_folds; ++f)
            if (weight[static_cast<std::size_t>(f)] < weight[static_cast<std::size_t>(best)])
                best = f;
        return best;
    };

    for (const auto& d : pos_days) {
        int f = lightest(fold_pos);
        plan.fold_of[d.key] = f;
        fold_pos[static_cast<std::size_t>(f)] += d.pos_minutes;
        fold_days[static_cast<std::size_t>(f)]++;
        fold_total[static_cast<std::size_t>(f)] += d.total_minutes;
    }
    for (const auto& d : neg_days) {
        int f = lightest(fold_total);
        plan.fold_of[d.key] = f;
        fold_days[static_cast<std::size_t>(f)]++;
        fold_total[static_cast<std::size_t>(f)] += d.total_minutes;
    }

    for (int f = 0; f < n_folds; ++f) {
        if (fold_days[static_cast<std::size_t>(f)] == 0)
            throw DataError("make_folds: fold " + std::to_string(f) + " is empty");
        if (fold_pos[static_cast<std::size_t>(f)] == 0)
            throw DataError("make_folds: fold " + std::to_string(f) + " has no agitation");
        if (fold_total[static_cast<std::size_t>(f)] == fold_pos[static_cast<std::size_t>(f)])
            throw DataError("make_folds: fold " + std::to_string(f) + " has no normal data");
    }
    return plan;
}

double min_time_gap(const WindowInstance& instance,
                    const std::vector<EpisodeAnnotation>& annotations) {
    if (instance.label != 0)
        throw DataError("min_time_gap: called on a label-1 instance");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : annotations) {
        if (a.participant_id != instance.participant_id || a.day != instance.day) continue;
        double gap = 0.0;
        if (instance.minute_index < a.start_minute)
            gap = a.start_minute - instance.minute_index;
        else if (instance.minute_index > a.end_minute)
            gap = instance.minute_index - a.end_minute;
        best = std::min(best, gap);
    }
    return best;
}

bool minute_is_annotated(const std::vector<EpisodeAnnotation>& annotations,
                         const std::string& participant_id, const std::string& day,
                         int minute) {
    for (const auto& a : annotations) {
        if (a.participant_id == participant_id && a.day == day &&
            minute >= a.start_minute && minute <= a.end_minute)
            return true;
    }
    return false;
}

void relabel_from_annotations(LabeledDataset& dataset,
                              const std::vector<EpisodeAnnotation>& annotations) {
    dataset.annotations = annotations;
    for (auto& w : dataset.instances)
        w.label = minute_is_annotated(annotations, w.participant_id, w.day, w.minute_index)
                      ? 1
                      : 0;
}

std::string add_days(const std::string& base_iso, int days) {
    auto parts = split(base_iso, '-');
    if (parts.size() != 3) throw DataError("bad ISO date: " + base_iso);
    long long y = parse_int(parts[0], "date");
    long long m = parse_int(parts[1], "date");
    long long d = parse_int(parts[2], "date");

    // civil <-> day-number conversion (proleptic Gregorian).
    auto days_from_civil = [](long long y, unsigned m, unsigned d) -> long long {
        y -= m <= 2;
        const long long era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<long long>(doe) - 719468;
    };
    auto civil_from_days = [](long long z) {
        z += 719468;
        const long long era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long long y = static_cast<long long>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp + (mp < 10 ? 3 : -9);
        return std::tuple<long long, unsigned, unsigned>{y + (m <= 2), m, d};
    };

    long long serial = days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
    auto [yy, mm, dd] = civil_from_days(serial + days);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", yy, mm, dd);
    return buf;
}

}  // namespace agidet::core

#include "agidet/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace agidet::signal {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void validate_frame(const SignalFrame& frame) {
    const auto& expected = channel_names();
    if (frame.channels.size() != expected.size())
        throw DataError("frame " + frame.participant_id + " " + frame.day + ": expected " +
                        std::to_string(expected.size()) + " channels");
    double min_dur = 0.0, max_dur = 0.0;
    bool first = true;
    for (const auto& name : expected) {
        auto it = frame.channels.find(name);
        if (it == frame.channels.end())
            throw DataError("frame missing channel: " + name);
        const Channel& ch = it->second;
        if (ch.samples.empty()) throw DataError("channel " + name + ": empty");
        if (!(ch.sample_rate_hz > 0.0))
            throw DataError("channel " + name + ": sample rate must be > 0");
        const double dur = static_cast<double>(ch.samples.size()) / ch.sample_rate_hz;
        if (first) {
            min_dur = max_dur = dur;
            first = false;
        } else {
            min_dur = std::min(min_dur, dur);
            max_dur = std::max(max_dur, dur);
        }
    }
    if (max_dur - min_dur > 1.0)
        throw DataError("frame channel durations differ by more than 1 second");
    if (frame.start_minute < 0) throw DataError("frame start_minute must be >= 0");
}

std::vector<double> resample_to_64hz(const std::vector<double>& samples, double rate_hz) {
    if (samples.empty()) throw DataError("resample_to_64hz: empty input");
    if (!(rate_hz > 0.0)) throw DataError("resample_to_64hz: rate must be > 0");
    if (rate_hz == static_cast<double>(kTargetRateHz)) return samples;

    const double duration = static_cast<double>(samples.size()) / rate_hz;
    const std::size_t out_n =
        static_cast<std::size_t>(std::llround(duration * kTargetRateHz));
    std::vector<double> out(out_n);
    const double last = static_cast<double>(samples.size() - 1);
    for (std::size_t i = 0; i < out_n; ++i) {
        // position of output sample i on the source index axis
        double u = static_cast<double>(i) / kTargetRateHz * rate_hz;
        if (u <= 0.0) {
            out[i] = samples.front();
            continue;
        }
        if (u >= last) {
            out[i] = samples.back();
            continue;
        }
        const std::size_t lo = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(lo);
        out[i] = samples[lo] + frac * (samples[lo + 1] - samples[lo]);
    }
    return out;
}

std::vector<double> lowpass_first_order(const std::vector<double>& samples,
                                        double cutoff_hz, double rate_hz) {
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0))
        throw DataError("lowpass_first_order: cutoff must satisfy 0 < fc < rate/2");
    // Bilinear transform with prewarping: K = tan(pi*fc/fs) puts the -3 dB
    // point exactly at fc.
    const double k = std::tan(kPi * cutoff_hz / rate_hz);
    const double b0 = k / (k + 1.0);
    const double b1 = b0;
    const double a1 = (k - 1.0) / (k + 1.0);

    std::vector<double> out(samples.size());
    // Seed the delay line with the first sample; a constant input then passes
    // through unchanged from the start.
    double x_prev = samples.empty() ? 0.0 : samples.front();
    double y_prev = x_prev;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double y = b0 * samples[i] + b1 * x_prev - a1 * y_prev;
        out[i] = y;
        x_prev = samples[i];
        y_prev = y;
    }
    return out;
}

std::vector<double> prepare_channel(const std::vector<double>& samples, double rate_hz,
                                    double cutoff_hz) {
    if (rate_hz > kTargetRateHz) {
        return resample_to_64hz(lowpass_first_order(samples, cutoff_hz, rate_hz), rate_hz);
    }
    std::vector<double> at64 = resample_to_64hz(samples, rate_hz);
    // Low rates cannot carry content up to the cutoff; skip the filter when
    // the cutoff is not below the original Nyquist.
    if (cutoff_hz < rate_hz / 2.0) return lowpass_first_order(at64, cutoff_hz, kTargetRateHz);
    return at64;
}

SignalFrame prepare_frame(const SignalFrame& frame, double cutoff_hz) {
    validate_frame(frame);
    SignalFrame out;
    out.participant_id = frame.participant_id;
    out.day = frame.day;
    out.start_minute = frame.start_minute;
    for (const auto& [name, ch] : frame.channels) {
        Channel prepared;
        prepared.sample_rate_hz = kTargetRateHz;
        prepared.samples = prepare_channel(ch.samples, ch.sample_rate_hz, cutoff_hz);
        out.channels.emplace(name, std::move(prepared));
    }
    return out;
}

std::vector<WindowView> window_1min(const SignalFrame& frame) {
    validate_frame(frame);
    std::size_t min_len = 0;
    bool first = true;
    for (const auto& [name, ch] : frame.channels) {
        if (ch.sample_rate_hz != kTargetRateHz)
            throw DataError("window_1min: channel " + name + " is not at 64 Hz");
        min_len = first ? ch.samples.size() : std::min(min_len, ch.samples.size());
        first = false;
    }
    const std::size_t n_windows = min_len / kWindowSamples;
    std::vector<WindowView> out;
    out.reserve(n_windows);
    auto slice = [&](const std::string& name, std::size_t w) {
        const auto& v = frame.channels.at(name).samples;
        return std::span<const double>(v.data() + w * kWindowSamples, kWindowSamples);
    };
    for (std::size_t w = 0; w < n_windows; ++w) {
        WindowView view;
        view.minute_index = frame.start_minute + static_cast<int>(w);
        view.acc_x = slice("acc_x", w);
        view.acc_y = slice("acc_y", w);
        view.acc_z = slice("acc_z", w);
        view.bvp = slice("bvp", w);
        view.eda = slice("eda", w);
        view.temp = slice("temp", w);
        out.push_back(view);
    }
    return out;
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

void fft_pow2(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    if (n == 0 || (n & (n - 1)) != 0 || im.size() != n)
        throw NumericError("fft_pow2: size must be a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Feature catalog
// ---------------------------------------------------------------------------

FeatureCatalog::FeatureCatalog(std::string version, std::vector<std::string> names)
    : version_(std::move(version)), names_(std::move(names)) {}

const FeatureCatalog& FeatureCatalog::v1() {
    static const FeatureCatalog catalog = [] {
        std::vector<std::string> names;
        const std::array<std::string, 7> streams = {"acc_x", "acc_y", "acc_z", "bvp",
                                                    "eda",   "temp",  "acc_mag"};
        const std::array<std::string, 8> stats = {"mean", "std",  "min",  "max",
                                                  "range", "rms", "skew", "kurt"};
        for (const auto& s : streams)
            for (const auto& st : stats) names.push_back(s + "_" + st);
        for (const std::string s : {"acc_mag", "bvp", "eda"}) {
            names.push_back(s + "_spectral_energy");
            names.push_back(s + "_dominant_freq");
        }
        names.push_back("eda_slope");
        names.push_back("temp_slope");
        names.push_back("acc_mag_zero_crossings");
        names.push_back("bvp_band_power");
        names.push_back("eda_peak_count");
        if (names.size() != static_cast<std::size_t>(kFeatureCount))
            throw NumericError("feature catalog v1 is not 67 entries");
        return FeatureCatalog("v1", std::move(names));
    }();
    return catalog;
}

namespace {

struct Moments {
    double mean = 0, sd = 0, min = 0, max = 0, rms = 0, skew = 0, kurt = 0;
};

Moments moments_of(std::span<const double> x) {
    Moments m;
    const std::size_t n = x.size();
    double sum = 0, sumsq = 0;
    m.min = x[0];
    m.max = x[0];
    for (double v : x) {
        sum += v;
        sumsq += v * v;
        m.min = std::min(m.min, v);
        m.max = std::max(m.max, v);
    }
    m.mean = sum / static_cast<double>(n);
    m.rms = std::sqrt(sumsq / static_cast<double>(n));
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    m.sd = std::sqrt(m2);
    if (m.sd > 1e-12) {
        m.skew = m3 / (m.sd * m.sd * m.sd);
        m.kurt = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

double ls_slope(std::span<const double> y, double rate_hz) {
    // least-squares slope per second over the window
    const std::size_t n = y.size();
    const double nn = static_cast<double>(n);
    double sum_t = 0, sum_y = 0, sum_ty = 0, sum_tt = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / rate_hz;
        sum_t += t;
        sum_y += y[i];
        sum_ty += t * y[i];
        sum_tt += t * t;
    }
    const double denom = nn * sum_tt - sum_t * sum_t;
    if (std::abs(denom) < 1e-12) return 0.0;
    return (nn * sum_ty - sum_t * sum_y) / denom;
}

struct Spectrum {
    double energy = 0;        // sum over positive bins of |X|^2 / N, mean removed
    double dominant_hz = 0;   // bin of max magnitude among positive bins
    std::vector<double> power;  // per-positive-bin |X|^2 / N
    double bin_hz = 0;
};

Spectrum spectrum_of(std::span<const double> x, double rate_hz) {
    std::size_t n = 1;
    while (n < x.size()) n <<= 1;
    thread_local std::vector<double> re, im;
    re.assign(n, 0.0);
    im.assign(n, 0.0);
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) re[i] = x[i] - mean;
    fft_pow2(re, im);

    Spectrum s;
    s.bin_hz = rate_hz / static_cast<double>(n);
    const std::size_t half = n / 2;
    s.power.resize(half);
    double best = 0;
    std::size_t best_k = 0;
    for (std::size_t k = 1; k <= half; ++k) {
        const double p = (re[k] * re[k] + im[k] * im[k]) / static_cast<double>(n);
        s.power[k - 1] = p;
        s.energy += p;
        const double mag = re[k] * re[k] + im[k] * im[k];
        if (mag > best + 1e-12) {
            best = mag;
            best_k = k;
        }
    }
    if (best > 1e-12) s.dominant_hz = static_cast<double>(best_k) * s.bin_hz;
    return s;
}

double band_power(const Spectrum& s, double lo_hz, double hi_hz) {
    double acc = 0;
    for (std::size_t i = 0; i < s.power.size(); ++i) {
        const double f = static_cast<double>(i + 1) * s.bin_hz;
        if (f >= lo_hz && f <= hi_hz) acc += s.power[i];
    }
    return acc;
}

int zero_crossings(std::span<const double> x, double mean) {
    int count = 0;
    double prev = x[0] - mean;
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double cur = x[i] - mean;
        if (prev * cur < 0.0) ++count;
        prev = cur;
    }
    return count;
}

int peak_count(std::span<const double> x, const Moments& m, int min_separation) {
    // local maxima above mean + 1 sd, at least min_separation samples apart
    const double thresh = m.mean + m.sd;
    int count = 0;
    long long last = -static_cast<long long>(min_separation) - 1;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > thresh && x[i] > x[i - 1] && x[i] >= x[i + 1] &&
            static_cast<long long>(i) - last > min_separation) {
            ++count;
            last = static_cast<long long>(i);
        }
    }
    return count;
}

void push_moments(std::vector<double>& out, const Moments& m) {
    out.push_back(m.mean);
    out.push_back(m.sd);
    out.push_back(m.min);
    out.push_back(m.max);
    out.push_back(m.max - m.min);
    out.push_back(m.rms);
    out.push_back(m.skew);
    out.push_back(m.kurt);
}

}  // namespace

std::vector<double> extract_features(const WindowView& w, const FeatureCatalog& catalog) {
    const std::array<std::span<const double>, 6> chans = {w.acc_x, w.acc_y, w.acc_z,
                                                          w.bvp,   w.eda,   w.temp};
    for (const auto& c : chans) {
        if (c.size() != static_cast<std::size_t>(kWindowSamples))
            throw DataError("extract_features: slice length must be " +
                            std::to_string(kWindowSamples));
        for (double v : c)
            if (!std::isfinite(v)) throw DataError("extract_features: non-finite sample");
    }

    thread_local std::vector<double> acc_mag;
    acc_mag.resize(static_cast<std::size_t>(kWindowSamples));
    for (std::size_t i = 0; i < acc_mag.size(); ++i)
        acc_mag[i] = std::sqrt(w.acc_x[i] * w.acc_x[i] + w.acc_y[i] * w.acc_y[i] +
                               w.acc_z[i] * w.acc_z[i]);

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(catalog.size()));

    const Moments m_ax = moments_of(w.acc_x);
    const Moments m_ay = moments_of(w.acc_y);
    const Moments m_az = moments_of(w.acc_z);
    const Moments m_bvp = moments_of(w.bvp);
    const Moments m_eda = moments_of(w.eda);
    const Moments m_temp = moments_of(w.temp);
    const Moments m_mag = moments_of(acc_mag);

    push_moments(out, m_ax);
    push_moments(out, m_ay);
    push_moments(out, m_az);
    push_moments(out, m_bvp);
    push_moments(out, m_eda);
    push_moments(out, m_temp);
    push_moments(out, m_mag);

    const Spectrum s_mag = spectrum_of(acc_mag, kTargetRateHz);
    out.push_back(s_mag.energy);
    out.push_back(s_mag.dominant_hz);
    const Spectrum s_bvp = spectrum_of(w.bvp, kTargetRateHz);
    out.push_back(s_bvp.energy);
    out.push_back(s_bvp.dominant_hz);
    const Spectrum s_eda = spectrum_of(w.eda, kTargetRateHz);
    out.push_back(s_eda.energy);
    out.push_back(s_eda.dominant_hz);

    out.push_back(ls_slope(w.eda, kTargetRateHz));
    out.push_back(ls_slope(w.temp, kTargetRateHz));
    out.push_back(static_cast<double>(zero_crossings(acc_mag, m_mag.mean)));
    out.push_back(band_power(s_bvp, 0.8, 2.5));
    out.push_back(static_cast<double>(peak_count(w.eda, m_eda, kTargetRateHz / 2)));

    if (out.size() != static_cast<std::size_t>(catalog.size()))
        throw NumericError("extract_features: produced wrong feature count");
    for (double v : out)
        if (!std::isfinite(v)) throw NumericError("extract_features: non-finite feature");
    return out;
}

std::vector<WindowFeatures> frame_to_features(const SignalFrame& frame,
                                              const FeatureCatalog& catalog,
                                              double cutoff_hz, int threads) {
    const SignalFrame prepared = prepare_frame(frame, cutoff_hz);
    const std::vector<WindowView> windows = window_1min(prepared);
    std::vector<WindowFeatures> out(windows.size());
    parallel_for(windows.size(), threads, [&](std::size_t i) {
        out[i].minute_index = windows[i].minute_index;
        out[i].features = extract_features(windows[i], catalog);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Raw-signal file format
// ---------------------------------------------------------------------------

void save_frame(const SignalFrame& frame, const std::string& path) {
    validate_frame(frame);
    std::ostringstream ss;
    ss << "participant " << frame.participant_id << "\n";
    ss << "day " << frame.day << "\n";
    ss << "start_minute " << frame.start_minute << "\n";
    for (const auto& name : channel_names()) {
        const Channel& ch = frame.channels.at(name);
        ss << "channel " << name << " " << format_g9(ch.sample_rate_hz) << " "
           << ch.samples.size() << "\n";
        for (std::size_t i = 0; i < ch.samples.size(); ++i) {
            ss << format_g9(ch.samples[i]);
            ss << (((i + 1) % 8 == 0 || i + 1 == ch.samples.size()) ? '\n' : ' ');
        }
    }
    write_file_atomic(path, ss.str());
}

SignalFrame load_frame(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("missing file: " + path);
    SignalFrame frame;
    std::string tok;
    if (!(f >> tok) || tok != "participant" || !(f >> frame.participant_id))
        throw DataError(path + ": expected 'participant <id>'");
    if (!(f >> tok) || tok != "day" || !(f >> frame.day))
        throw DataError(path + ": expected 'day <iso-date>'");
    if (!(f >> tok) || tok != "start_minute" || !(f >> frame.start_minute))
        throw DataError(path + ": expected 'start_minute <int>'");
    while (f >> tok) {
        if (tok != "channel") throw DataError(path + ": expected 'channel', got " + tok);
        std::string name;
        double rate;
        std::size_t n;
        if (!(f >> name >> rate >> n)) throw DataError(path + ": bad channel header");
        Channel ch;
        ch.sample_rate_hz = rate;
        ch.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            if (!(f >> ch.samples[i]))
                throw DataError(path + ": channel " + name + ": expected " +
                                std::to_string(n) + " samples");
        frame.channels.emplace(name, std::move(ch));
    }
    validate_frame(frame);
    return frame;
}

}  // namespace agidet::signal

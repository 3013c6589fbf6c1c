#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::signal {

constexpr int kTargetRateHz = 64;
constexpr int kWindowSamples = kTargetRateHz * 60;  // one minute
constexpr double kDefaultCutoffHz = 10.0;

// The six wristband channels, in canonical order.
inline const std::array<std::string, 6>& channel_names() {
    static const std::array<std::string, 6> names = {"acc_x", "acc_y", "acc_z",
                                                     "bvp",   "eda",   "temp"};
    return names;
}

struct Channel {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;
};

// One participant-day of raw multichannel data. `start_minute` anchors the
// recording within the day so window indices line up with annotations.
struct SignalFrame {
    std::string participant_id;
    std::string day;
    int start_minute = 0;
    std::map<std::string, Channel> channels;
};

// Throws DataError unless the frame has exactly the six expected channels,
// nonempty, positive-rate, with per-channel durations equal within 1 s.
void validate_frame(const SignalFrame& frame);

// Linear-interpolation resampling to 64 Hz. Output length is
// round(duration * 64); input already at 64 Hz is returned unchanged.
std::vector<double> resample_to_64hz(const std::vector<double>& samples, double rate_hz);

// First-order Butterworth low-pass (bilinear transform, prewarped). Unity DC
// gain, -3 dB at cutoff_hz. Requires 0 < cutoff_hz < rate_hz / 2.
std::vector<double> lowpass_first_order(const std::vector<double>& samples,
                                        double cutoff_hz, double rate_hz);

// Filter + resample in the anti-aliasing-safe order (filter first when the
// input rate is above 64 Hz, after resampling otherwise).
std::vector<double> prepare_channel(const std::vector<double>& samples, double rate_hz,
                                    double cutoff_hz);

// All channels of a frame brought to 64 Hz and low-passed.
SignalFrame prepare_frame(const SignalFrame& frame, double cutoff_hz = kDefaultCutoffHz);

// Non-overlapping per-minute views into a prepared (64 Hz) frame's channels.
struct WindowView {
    int minute_index = 0;  // minutes from day start
    std::span<const double> acc_x, acc_y, acc_z, bvp, eda, temp;
};

// floor(duration-in-minutes) disjoint chronological windows; a trailing
// partial minute is dropped. Frames shorter than one minute give an empty
// list. The spans alias `frame`, which must outlive them.
std::vector<WindowView> window_1min(const SignalFrame& frame);

// Frozen, versioned ordering of the 67 feature definitions.
class FeatureCatalog {
public:
    static const FeatureCatalog& v1();

    const std::vector<std::string>& names() const { return names_; }
    const std::string& version() const { return version_; }
    int size() const { return static_cast<int>(names_.size()); }

private:
    FeatureCatalog(std::string version, std::vector<std::string> names);
    std::string version_;
    std::vector<std::string> names_;
};

// 67 finite values in catalog order for one window. Throws DataError on a
// wrong slice length or non-finite sample.
std::vector<double> extract_features(const WindowView& window, const FeatureCatalog& catalog);

// Full pipeline for one frame: prepare, window, extract. Output is ordered by
// minute_index. Parallel over windows; results are thread-count independent.
struct WindowFeatures {
    int minute_index = 0;
    std::vector<double> features;
};
std::vector<WindowFeatures> frame_to_features(const SignalFrame& frame,
                                              const FeatureCatalog& catalog,
                                              double cutoff_hz = kDefaultCutoffHz,
                                              int threads = 0);

// Raw-signal file format (one file per participant-day); see README.
void save_frame(const SignalFrame& frame, const std::string& path);
SignalFrame load_frame(const std::string& path);

// In-place iterative radix-2 FFT over interleaved complex (re, im) pairs.
// n must be a power of two. Exposed for the spectral-feature tests.
void fft_pow2(std::vector<double>& re, std::vector<double>& im);

}  // namespace agidet::signal

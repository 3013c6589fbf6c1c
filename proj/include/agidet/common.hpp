#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace agidet {

// Error taxonomy shared across modules. The CLI maps these to exit codes:
// ConfigError -> 1, DataError -> 2, NumericError -> 3.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr int kFeatureCount = 67;

// --------------------------------------------------------------------------
// Deterministic random number generation.
//
// All randomness in the library flows through Rng (xoshiro256++) seeded via
// splitmix64. std:: distributions are implementation-defined, so uniform and
// normal draws are implemented here; results are reproducible across
// platforms and independent of thread count (parallel work derives one
// stream per unit of work).
// --------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes a base seed with stream identifiers so parallel units of work get
// decorrelated, reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    splitmix64(s);
    return splitmix64(s);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(base, a), b);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) {
        // Rejection sampling keeps the draw exactly uniform.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
        std::uint64_t v = next();
        while (v > limit) v = next();
        return v % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Standard normal via Box-Muller; one spare cached per pair.
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// --------------------------------------------------------------------------
// Thread pool helpers. Work items must be independent and write only to
// slots indexed by their own item id, which keeps results identical for any
// thread count.
// --------------------------------------------------------------------------

// Process-wide default thread cap (0 = hardware concurrency). The CLI sets
// this from config; tests may pin it to 1.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n); `threads` 0 means use max_threads().
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

// --------------------------------------------------------------------------
// Small text helpers used by the file formats.
// --------------------------------------------------------------------------

// Shortest round-trippable-ish representation at 9 significant digits; the
// dataset and report formats pin this so repeated saves are byte-identical.
std::string format_g9(double v);

// 17 significant digits: exact IEEE-double round-trip, for model files where
// reloaded thresholds must compare identically.
std::string format_g17(double v);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

std::vector<std::string> split(const std::string& line, char sep);
std::string trim(const std::string& s);

// FNV-1a over bytes; used for config hashes embedded in output files.
std::uint64_t fnv1a(const std::string& bytes);
std::string to_hex(std::uint64_t v);

// Atomic text-file write: write to <path>.tmp then rename.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace agidet

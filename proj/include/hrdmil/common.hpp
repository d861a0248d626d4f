#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace hrdmil {

// Error categories surface as single-line machine-parsable diagnostics in
// the CLI ("error <category>: <message>").
enum class ErrorCategory {
    Io,
    Format,
    Validation,
    Dimension,
    InsufficientData,
    Numeric,
    Usage,
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category(cat) {}

    ErrorCategory category;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

// ---------------------------------------------------------------------------
// Seed derivation and hashing.
//
// Every randomized stage derives its own sub-seed via mix64 so that work can
// be scheduled in any order (or in parallel) without changing results.
// ---------------------------------------------------------------------------

inline constexpr uint64_t kGolden64 = 0x9e3779b97f4a7c15ull;

inline uint64_t splitmix64_step(uint64_t x) {
    uint64_t z = x + kGolden64;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
    return splitmix64_step(a ^ (b + kGolden64 + (a << 6) + (a >> 2)));
}

inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
    return mix64(mix64(a, b), c);
}

// FNV-1a; used for patient-id hashing and input digests.
inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64_file(const std::string& path);

// Stream tags for derived seeds (arbitrary distinct constants).
namespace seedtag {
inline constexpr uint64_t kKmeans = 0x6b6d65616e73ull;     // "kmeans"
inline constexpr uint64_t kTrainDraw = 0x747261696eull;    // "train"
inline constexpr uint64_t kEvalDraw = 0x6576616cull;       // "eval"
inline constexpr uint64_t kUpsample = 0x757073ull;         // "ups"
inline constexpr uint64_t kFolds = 0x666f6c6473ull;        // "folds"
inline constexpr uint64_t kInit = 0x696e6974ull;           // "init"
inline constexpr uint64_t kBatch = 0x6261746368ull;        // "batch"
inline constexpr uint64_t kEpoch = 0x65706f6368ull;        // "epoch"
}  // namespace seedtag

inline uint64_t derive_patient_seed(uint64_t global_seed, std::string_view patient_id) {
    return mix64(global_seed, fnv1a64(patient_id));
}

// ---------------------------------------------------------------------------
// Deterministic RNG.
//
// std::mt19937_64's raw output is fully specified by the standard; the
// distribution helpers are hand-rolled because the std distributions are
// implementation-defined and would break cross-compiler reproducibility.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n). Rejection-sampled.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) fail(ErrorCategory::Usage, "uniform_index: n must be positive");
        uint64_t x, r;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > UINT64_MAX - (n - 1));
        return r;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; consumes two uniforms per pair.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01();  // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fisher-Yates shuffle driven by the portable RNG.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_index(i));
        std::swap(v[i - 1], v[j]);
    }
}

// Draw `take` distinct values from [0, n) without replacement, returned in
// ascending order. Partial Fisher-Yates over an index array.
std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t take, Rng& rng);

// ---------------------------------------------------------------------------
// Deterministic parallel map: fn(i) must only touch slot i of its output.
// Results are identical for any thread count.
// ---------------------------------------------------------------------------

void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

}  // namespace hrdmil

#include "hrdmil/synthcohort.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace hrdmil {

SkewShape parse_skew(const std::string& name) {
    if (name == "uniform") return SkewShape::Uniform;
    if (name == "right-skewed") return SkewShape::RightSkewed;
    if (name == "left-skewed") return SkewShape::LeftSkewed;
    fail(ErrorCategory::Usage, "unknown skew shape: " + name);
}

const char* to_string(SkewShape s) {
    switch (s) {
        case SkewShape::Uniform: return "uniform";
        case SkewShape::RightSkewed: return "right-skewed";
        case SkewShape::LeftSkewed: return "left-skewed";
    }
    return "unknown";
}

void SynthSpec::validate() const {
    if (n_patients < 1) fail(ErrorCategory::Usage, "synth: n_patients must be >= 1");
    if (patches_min < 1 || patches_max < patches_min)
        fail(ErrorCategory::Usage, "synth: invalid patches range");
    if (dim < 1) fail(ErrorCategory::Usage, "synth: dim must be >= 1");
    if (signal_dims > dim) fail(ErrorCategory::Usage, "synth: signal_dims must be <= dim");
    if (!(signal_fraction > 0.0 && signal_fraction <= 1.0))
        fail(ErrorCategory::Usage, "synth: signal_fraction must be in (0, 1]");
    if (noise_sigma < 0.0) fail(ErrorCategory::Usage, "synth: noise_sigma must be >= 0");
}

SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot open synth spec: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::Format, std::string("synth spec is not valid JSON: ") + e.what());
    }
    SynthSpec spec;
    auto get = [&](const char* key, auto& dst) {
        if (doc.contains(key)) dst = doc.at(key).template get<std::decay_t<decltype(dst)>>();
    };
    get("name", spec.name);
    get("n_patients", spec.n_patients);
    get("patches_min", spec.patches_min);
    get("patches_max", spec.patches_max);
    get("dim", spec.dim);
    get("signal_dims", spec.signal_dims);
    get("noise_sigma", spec.noise_sigma);
    get("signal_fraction", spec.signal_fraction);
    get("seed", spec.seed);
    if (doc.contains("skew")) spec.skew = parse_skew(doc.at("skew").get<std::string>());
    spec.validate();
    return spec;
}

namespace {

// Regularized incomplete beta for small integer (a, b) via the binomial sum
// I_x(a, b) = sum_{j=a}^{a+b-1} C(a+b-1, j) x^j (1-x)^(a+b-1-j).
double beta_cdf_int(int a, int b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    int n = a + b - 1;
    double acc = 0.0;
    for (int j = a; j <= n; ++j) {
        double binom = 1.0;
        for (int i = 0; i < j; ++i)
            binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
        acc += binom * std::pow(x, j) * std::pow(1.0 - x, n - j);
    }
    return acc;
}

double inverse_cdf01(SkewShape skew, double u) {
    auto cdf = [&](double x) { return target_cdf(skew, x * 100.0); };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double target_cdf(SkewShape skew, double y) {
    double x = y / 100.0;
    switch (skew) {
        case SkewShape::Uniform: return std::clamp(x, 0.0, 1.0);
        case SkewShape::RightSkewed: return beta_cdf_int(2, 5, x);
        case SkewShape::LeftSkewed: return beta_cdf_int(5, 2, x);
    }
    return 0.0;
}

double sample_target(SkewShape skew, Rng& rng) {
    double u = rng.uniform01();
    if (skew == SkewShape::Uniform) return 100.0 * u;
    return 100.0 * inverse_cdf01(skew, u);
}

Cohort generate_cohort(const SynthSpec& spec, const std::string& out_dir, int threads) {
    spec.validate();
    fs::create_directories(out_dir);

    struct Generated {
        std::string id;
        double target;
        std::string file;
    };
    std::vector<Generated> rows(spec.n_patients);

    parallel_for(spec.n_patients, threads, [&](size_t p) {
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "P%04zu", p + 1);
        std::string pid = idbuf;
        Rng rng(derive_patient_seed(spec.seed, pid));

        double y = sample_target(spec.skew, rng);
        uint32_t n = spec.patches_min +
                     static_cast<uint32_t>(rng.uniform_index(spec.patches_max - spec.patches_min + 1));
        uint32_t n_signal = std::max<uint32_t>(
            1, static_cast<uint32_t>(std::floor(spec.signal_fraction * n + 0.5)));
        n_signal = std::min(n_signal, n);

        // Grid positions in row-major order; the first n_signal positions form
        // the spatially packed signal region.
        uint32_t side = static_cast<uint32_t>(std::ceil(std::sqrt(static_cast<double>(n))));
        std::vector<uint32_t> order(n);
        for (uint32_t i = 0; i < n; ++i) order[i] = i;
        shuffle(order, rng);  // patch rows in random order, signal interleaved

        PatchMatrix m;
        m.n_patches = n;
        m.dim = spec.dim;
        m.features.resize(static_cast<size_t>(n) * spec.dim);
        m.coords.resize(static_cast<size_t>(n) * 2);
        double mu = signal_mean_for_target(y);
        for (uint32_t row = 0; row < n; ++row) {
            uint32_t pos = order[row];
            bool is_signal = pos < n_signal;
            m.coords[2 * row] = static_cast<int32_t>(pos % side);
            m.coords[2 * row + 1] = static_cast<int32_t>(pos / side);
            float* f = m.features.data() + static_cast<size_t>(row) * spec.dim;
            for (uint32_t j = 0; j < spec.dim; ++j) {
                double v;
                if (is_signal && j < spec.signal_dims)
                    v = mu + spec.noise_sigma * rng.gaussian();
                else
                    v = rng.gaussian();
                f[j] = static_cast<float>(v);
            }
        }

        std::string file = (fs::path(out_dir) / (pid + ".milf")).string();
        write_feature_file(file, m);
        rows[p] = {pid, y, file};
    });

    Cohort cohort;
    cohort.name = spec.name;
    cohort.dim = spec.dim;
    for (auto& g : rows) cohort.patients.push_back({g.id, g.target, {g.file}});

    write_manifest((fs::path(out_dir) / "manifest.json").string(), cohort);
    return cohort;
}

double oracle_auroc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size()) fail(ErrorCategory::Usage, "oracle_auroc: length mismatch");
    double wins = 0.0;
    size_t n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        n_pos++;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        fail(ErrorCategory::InsufficientData, "oracle_auroc undefined with a single class");
    return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double oracle_mean_predictor_rmse(const std::vector<double>& targets) {
    if (targets.empty()) fail(ErrorCategory::InsufficientData, "no targets");
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double acc = 0.0;
    for (double t : targets) acc += (t - mean) * (t - mean);
    return std::sqrt(acc / static_cast<double>(targets.size()));
}

}  // namespace hrdmil

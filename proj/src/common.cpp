#include "hrdmil/common.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <numeric>

namespace hrdmil {

const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Io: return "io";
        case ErrorCategory::Format: return "format";
        case ErrorCategory::Validation: return "validation";
        case ErrorCategory::Dimension: return "dimension";
        case ErrorCategory::InsufficientData: return "insufficient-data";
        case ErrorCategory::Numeric: return "numeric";
        case ErrorCategory::Usage: return "usage";
    }
    return "unknown";
}

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::Io, "cannot open file for digest: " + path);
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (got < static_cast<std::streamsize>(sizeof(buf))) break;
    }
    return h;
}

std::vector<uint32_t> sample_without_replacement(uint32_t n, uint32_t take, Rng& rng) {
    if (take > n) fail(ErrorCategory::Usage, "sample_without_replacement: take > n");
    std::vector<uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    for (uint32_t i = 0; i < take; ++i) {
        uint32_t j = i + static_cast<uint32_t>(rng.uniform_index(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(take);
    std::sort(idx.begin(), idx.end());
    return idx;
}

void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
    if (threads < 1) threads = 1;
    size_t nthreads = std::min<size_t>(static_cast<size_t>(threads), n);
    if (nthreads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    size_t chunk = (n + nthreads - 1) / nthreads;
    for (size_t t = 0; t < nthreads; ++t) {
        size_t lo = t * chunk;
        size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hrdmil

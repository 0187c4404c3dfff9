#pragma once

// Shared low-level machinery: deterministic counter-keyed RNG streams, a flat
// open-addressing map for pair keys, a block-partitioned parallel_for, FNV-1a
// digests, and atomic file writes. Everything here is platform-stable so that
// pipeline output is reproducible bit-for-bit across runs and worker counts.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace recomb {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
    std::uint64_t s = x;
    return splitmix64(s);
}

// xoshiro256** seeded from (seed, key...). Two streams with different keys
// are statistically independent; the same key always reproduces the same
// sequence regardless of platform, thread, or call order.
class Stream {
public:
    Stream(std::uint64_t seed, std::initializer_list<std::uint64_t> key) {
        std::uint64_t acc = seed ^ 0x6a09e667f3bcc908ull;
        for (std::uint64_t k : key) {
            acc = mix64(acc ^ (k + 0x9e3779b97f4a7c15ull + (acc << 6) + (acc >> 2)));
        }
        std::uint64_t sm = acc;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Unbiased integer in [0, n). Lemire multiply-shift with rejection.
    std::uint64_t bounded(std::uint64_t n) {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Fisher-Yates; unbiased given an unbiased bounded().
    template <class T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    // Poisson via inversion for small means, PTRS-style not needed at our scales.
    std::uint64_t poisson(double mean);

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4] = {};
};

inline std::uint64_t Stream::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        // Knuth inversion in log space to dodge underflow.
        double l = -mean;
        double acc = 0.0;
        std::uint64_t k = 0;
        while (true) {
            acc += std::log(uniform01() + 1e-300);
            if (acc < l) return k;
            ++k;
        }
    }
    // Split large means; recursion depth is log(mean/30).
    const std::uint64_t half = poisson(mean / 2.0);
    return half + poisson(mean - mean / 2.0);
}

}  // namespace rng

// Canonical packed key for an unordered journal pair (a <= b). Dense journal
// indices are 32-bit; 0xffffffff is never a valid index.
inline std::uint64_t pack_pair(std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}
inline std::uint32_t pair_lo(std::uint64_t key) { return static_cast<std::uint32_t>(key >> 32); }
inline std::uint32_t pair_hi(std::uint64_t key) { return static_cast<std::uint32_t>(key); }

// Open-addressing map uint64 -> uint32 with linear probing. Insert-only; built
// once over the observed pairs, then hammered with lookups during the Monte
// Carlo passes, so probe locality matters more than anything else here.
class PairIndexMap {
public:
    static constexpr std::uint64_t kEmpty = ~0ull;

    PairIndexMap() = default;

    void reserve(std::size_t expected) {
        std::size_t cap = 16;
        while (cap < expected * 2) cap <<= 1;
        keys_.assign(cap, kEmpty);
        values_.assign(cap, 0);
        mask_ = cap - 1;
        size_ = 0;
    }

    std::size_t size() const { return size_; }

    // Returns the value for key, inserting next_value if absent.
    std::uint32_t insert_or_get(std::uint64_t key, std::uint32_t next_value) {
        if (keys_.empty() || (size_ + 1) * 2 > keys_.size()) grow();
        std::size_t slot = probe_start(key);
        while (true) {
            if (keys_[slot] == kEmpty) {
                keys_[slot] = key;
                values_[slot] = next_value;
                ++size_;
                return next_value;
            }
            if (keys_[slot] == key) return values_[slot];
            slot = (slot + 1) & mask_;
        }
    }

    // Returns pointer to value or nullptr.
    const std::uint32_t* find(std::uint64_t key) const {
        if (keys_.empty()) return nullptr;
        std::size_t slot = probe_start(key);
        while (true) {
            if (keys_[slot] == key) return &values_[slot];
            if (keys_[slot] == kEmpty) return nullptr;
            slot = (slot + 1) & mask_;
        }
    }

private:
    std::size_t probe_start(std::uint64_t key) const {
        return static_cast<std::size_t>(rng::mix64(key)) & mask_;
    }

    void grow() {
        std::vector<std::uint64_t> old_keys = std::move(keys_);
        std::vector<std::uint32_t> old_values = std::move(values_);
        const std::size_t cap = old_keys.empty() ? 16 : old_keys.size() * 2;
        keys_.assign(cap, kEmpty);
        values_.assign(cap, 0);
        mask_ = cap - 1;
        size_ = 0;
        for (std::size_t i = 0; i < old_keys.size(); ++i) {
            if (old_keys[i] != kEmpty) insert_or_get(old_keys[i], old_values[i]);
        }
    }

    std::vector<std::uint64_t> keys_;
    std::vector<std::uint32_t> values_;
    std::size_t mask_ = 0;
    std::size_t size_ = 0;
};

// Runs fn(begin, end) over contiguous index blocks. Workers <= 1 degenerates
// to a plain call; tasks write only to disjoint output ranges, so results do
// not depend on the worker count.
void parallel_for_blocks(std::size_t n, int workers,
                         const std::function<void(std::size_t, std::size_t)>& fn);

// Runs fn(task) for task in [0, n_tasks); task-to-worker assignment is
// round-robin and each task's output slice is disjoint.
void parallel_tasks(std::size_t n_tasks, int workers,
                    const std::function<void(std::size_t)>& fn);

int default_workers();

// FNV-1a 64-bit digest, hex-encoded. Stable, fast, good enough for manifest
// provenance (not a cryptographic guarantee).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string fnv1a64_hex(std::string_view bytes);
std::string digest_file(const std::filesystem::path& path);

// Writes content to a temp file in the same directory, then renames over the
// target. Either the old file or the complete new file is visible, never a
// partial write.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace recomb

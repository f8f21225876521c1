#pragma once

#include <cmath>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hdrvqa {

// Machine-parsable error classes. The CLI prints them as
//   error: <CLASS>: <detail>
// and exits with code 2.
enum class ErrorClass {
    Usage,
    ConfigInvalid,
    FileNotFound,
    CkptNotFound,
    CkptIncompatible,
    GeometryMismatch,
    IndexOutOfRange,
    DomainError,
    LayoutMismatch,
    TransferMismatch,
    DecodeFail,
    EncoderFail,
    SchemaVersion,
    DataCorrupt,
    DegenerateInput,
    DimensionMismatch,
    SingletonClass,
    NonFiniteLoss,
    Internal,
};

const char* error_class_name(ErrorClass c);

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg)
        : std::runtime_error(msg), cls_(cls) {}
    ErrorClass cls() const { return cls_; }

private:
    ErrorClass cls_;
};

[[noreturn]] inline void fail(ErrorClass cls, const std::string& msg) {
    throw Error(cls, msg);
}

inline void require(bool ok, ErrorClass cls, const std::string& msg) {
    if (!ok) fail(cls, msg);
}

// FNV-1a, used for content hashes stamped on artifacts. Not cryptographic.
constexpr uint64_t kFnvBasis = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x00000100000001b3ULL;

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = kFnvBasis) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvBasis) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);
uint64_t hash_file(const std::string& path);

// Deterministic, platform-independent RNG (splitmix64 core). std:: distributions
// are implementation-defined, so sampling is done by hand here.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    // Independent stream for a named sub-task of a seeded run.
    static Rng derive(uint64_t seed, std::string_view key) {
        uint64_t h = fnv1a64(key);
        h ^= seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return Rng(h);
    }
    static Rng derive(uint64_t seed, std::string_view key, uint64_t index) {
        Rng r = derive(seed, key);
        r.state_ ^= (index + 1) * 0xd6e8feb86659fd93ULL;
        return r;
    }

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        // rejection sampling to avoid modulo bias
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller (cos branch only, stateless).
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    bool coin() { return (next_u64() & 1) != 0; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace hdrvqa

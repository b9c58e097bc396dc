#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <stdexcept>
#include <string>

namespace snur {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPi = std::numbers::pi;

// ---- error hierarchy -------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidRaster : Error {
    using Error::Error;
};

struct InvalidSpec : Error {
    using Error::Error;
};

struct OracleInapplicable : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

struct CapacityError : Error {
    using Error::Error;
};

struct TraceIncomplete : Error {
    using Error::Error;
};

struct InvalidDataset : Error {
    using Error::Error;
};

struct FormatError : Error {
    enum class Kind { BadMagic, BadVersion, Truncated, DimensionOverflow, BadField };
    Kind kind;
    FormatError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// ---- numerics --------------------------------------------------------------

// Kahan compensated accumulator. Keeps reductions deterministic when the
// summation order is fixed and tolerable when it is chunked per row.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Wrapped-difference operator W(a) = a - 2*pi*round(a/2*pi) with the a = pi
// tie broken half-to-even (std::remainder semantics), then the result folded
// into (-pi, pi].
inline double wrap_to_pi(double a) {
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

// splitmix64, used to derive stream seeds so per-neuron / per-epoch draws
// stay reproducible under any evaluation order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// ---- little-endian byte packing -------------------------------------------

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

inline void put_u16(std::string& b, std::uint16_t v) { b.append(reinterpret_cast<char*>(&v), 2); }
inline void put_u32(std::string& b, std::uint32_t v) { b.append(reinterpret_cast<char*>(&v), 4); }
inline void put_u64(std::string& b, std::uint64_t v) { b.append(reinterpret_cast<char*>(&v), 8); }

template <typename T>
T get_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

}  // namespace detail

}  // namespace snur

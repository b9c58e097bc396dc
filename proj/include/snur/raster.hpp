#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "snur/common.hpp"

namespace snur {

enum class PhaseKind : std::uint8_t { wrapped = 0, absolute = 1 };

// 2D grid of radians, row-major. Wrapped rasters keep every value in (-pi, pi].
struct PhaseRaster {
    int width = 0;
    int height = 0;
    PhaseKind kind = PhaseKind::wrapped;
    std::vector<double> values;

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return values.size(); }

    static PhaseRaster filled(int w, int h, PhaseKind k, double v = 0.0) {
        PhaseRaster r;
        r.width = w;
        r.height = h;
        r.kind = k;
        r.values.assign(static_cast<std::size_t>(w) * h, v);
        return r;
    }

    void validate() const {
        if (width < 2 || height < 2)
            throw InvalidRaster("raster dimensions must be at least 2x2");
        if (values.size() != static_cast<std::size_t>(width) * height)
            throw InvalidRaster("raster value count does not match dimensions");
        for (double v : values) {
            if (!std::isfinite(v)) throw InvalidRaster("raster contains non-finite value");
            if (kind == PhaseKind::wrapped && (v <= -kPi || v > kPi))
                throw InvalidRaster("wrapped raster value outside (-pi, pi]");
        }
    }
};

// Per-pixel coherence gamma in [0, 1].
struct CoherenceRaster {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    static CoherenceRaster filled(int w, int h, double g) {
        CoherenceRaster r;
        r.width = w;
        r.height = h;
        r.values.assign(static_cast<std::size_t>(w) * h, g);
        return r;
    }

    void validate() const {
        if (width < 2 || height < 2)
            throw InvalidRaster("coherence dimensions must be at least 2x2");
        if (values.size() != static_cast<std::size_t>(width) * height)
            throw InvalidRaster("coherence value count does not match dimensions");
        for (double g : values)
            if (!(g >= 0.0 && g <= 1.0))
                throw InvalidRaster("coherence value outside [0, 1]");
    }
};

// Per-pixel integer wrap count k.
struct WrapCountRaster {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> values;

    std::int32_t& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

    static WrapCountRaster filled(int w, int h, std::int32_t k = 0) {
        WrapCountRaster r;
        r.width = w;
        r.height = h;
        r.values.assign(static_cast<std::size_t>(w) * h, k);
        return r;
    }
};

inline void require_same_shape(int w1, int h1, int w2, int h2) {
    if (w1 != w2 || h1 != h2) throw InvalidRaster("raster dimension mismatch");
}

// ---- wrapping --------------------------------------------------------------

// Wrap a single absolute phase into (-pi, pi].
inline double wrap_value(double phi) {
    double w = phi - kTwoPi * std::round(phi / kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    if (w > kPi) w -= kTwoPi;
    return w;
}

inline PhaseRaster wrap(const PhaseRaster& abs) {
    if (abs.kind != PhaseKind::absolute) throw InvalidRaster("wrap() expects an absolute raster");
    abs.validate();
    PhaseRaster out = abs;
    out.kind = PhaseKind::wrapped;
    for (double& v : out.values) v = wrap_value(v);
    return out;
}

// Exact ground-truth cycle count k = round((phi_a - phi_w) / 2pi).
inline WrapCountRaster wrap_counts(const PhaseRaster& abs, const PhaseRaster& wrapped) {
    require_same_shape(abs.width, abs.height, wrapped.width, wrapped.height);
    WrapCountRaster k = WrapCountRaster::filled(abs.width, abs.height);
    for (std::size_t i = 0; i < abs.values.size(); ++i)
        k.values[i] = static_cast<std::int32_t>(
            std::llround((abs.values[i] - wrapped.values[i]) / kTwoPi));
    return k;
}

// ---- residues --------------------------------------------------------------

struct Residue {
    int x;  // top-left pixel of the 2x2 loop
    int y;
    int charge;  // -1 or +1 (larger magnitudes are possible only on invalid input)
};

inline std::vector<Residue> detect_residues(const PhaseRaster& wrapped) {
    if (wrapped.kind != PhaseKind::wrapped)
        throw InvalidRaster("detect_residues expects a wrapped raster");
    std::vector<Residue> out;
    for (int y = 0; y + 1 < wrapped.height; ++y) {
        for (int x = 0; x + 1 < wrapped.width; ++x) {
            double s = wrap_to_pi(wrapped.at(x + 1, y) - wrapped.at(x, y)) +
                       wrap_to_pi(wrapped.at(x + 1, y + 1) - wrapped.at(x + 1, y)) +
                       wrap_to_pi(wrapped.at(x, y + 1) - wrapped.at(x + 1, y + 1)) +
                       wrap_to_pi(wrapped.at(x, y) - wrapped.at(x, y + 1));
            int charge = static_cast<int>(std::llround(s / kTwoPi));
            if (charge != 0) out.push_back({x, y, charge});
        }
    }
    return out;
}

// ---- Itoh path-following oracle --------------------------------------------

enum class ItohOrder { row_then_column, column_then_row };

// Integrates wrapped forward differences from seed_pixel. Exact (path
// independent) whenever the input is residue-free; the caller is responsible
// for checking detect_residues first, we re-check and refuse otherwise.
inline PhaseRaster itoh_unwrap(const PhaseRaster& wrapped, int seed_x, int seed_y,
                               ItohOrder order = ItohOrder::row_then_column) {
    if (wrapped.kind != PhaseKind::wrapped)
        throw InvalidRaster("itoh_unwrap expects a wrapped raster");
    if (seed_x < 0 || seed_x >= wrapped.width || seed_y < 0 || seed_y >= wrapped.height)
        throw InvalidRaster("seed pixel outside raster");
    if (!detect_residues(wrapped).empty())
        throw OracleInapplicable("wrapped input contains residues; Itoh integration is undefined");

    PhaseRaster out = PhaseRaster::filled(wrapped.width, wrapped.height, PhaseKind::absolute);
    auto integrate_row = [&](int y) {
        for (int x = seed_x + 1; x < wrapped.width; ++x)
            out.at(x, y) = out.at(x - 1, y) + wrap_to_pi(wrapped.at(x, y) - wrapped.at(x - 1, y));
        for (int x = seed_x - 1; x >= 0; --x)
            out.at(x, y) = out.at(x + 1, y) - wrap_to_pi(wrapped.at(x + 1, y) - wrapped.at(x, y));
    };
    auto integrate_col = [&](int x) {
        for (int y = seed_y + 1; y < wrapped.height; ++y)
            out.at(x, y) = out.at(x, y - 1) + wrap_to_pi(wrapped.at(x, y) - wrapped.at(x, y - 1));
        for (int y = seed_y - 1; y >= 0; --y)
            out.at(x, y) = out.at(x, y + 1) - wrap_to_pi(wrapped.at(x, y + 1) - wrapped.at(x, y));
    };

    out.at(seed_x, seed_y) = wrapped.at(seed_x, seed_y);  // k_seed = 0
    if (order == ItohOrder::row_then_column) {
        integrate_row(seed_y);
        for (int x = 0; x < wrapped.width; ++x) {
            // reuse the seed-row value as the column anchor
            integrate_col(x);
        }
    } else {
        integrate_col(seed_x);
        for (int y = 0; y < wrapped.height; ++y) {
            for (int x = seed_x + 1; x < wrapped.width; ++x)
                out.at(x, y) =
                    out.at(x - 1, y) + wrap_to_pi(wrapped.at(x, y) - wrapped.at(x - 1, y));
            for (int x = seed_x - 1; x >= 0; --x)
                out.at(x, y) =
                    out.at(x + 1, y) - wrap_to_pi(wrapped.at(x + 1, y) - wrapped.at(x, y));
        }
    }
    return out;
}

// ---- gradient energy -------------------------------------------------------

// Discrete version of the unwrapping objective: sum over forward-difference
// edges of (grad candidate - W(grad wrapped))^2 along x and y. Border edges
// that would leave the grid are omitted.
inline double gradient_energy(const PhaseRaster& candidate, const PhaseRaster& wrapped) {
    if (candidate.kind != PhaseKind::absolute)
        throw InvalidRaster("gradient_energy candidate must be absolute");
    require_same_shape(candidate.width, candidate.height, wrapped.width, wrapped.height);
    KahanSum sum;
    for (int y = 0; y < wrapped.height; ++y) {
        for (int x = 0; x < wrapped.width; ++x) {
            if (x + 1 < wrapped.width) {
                double d = (candidate.at(x + 1, y) - candidate.at(x, y)) -
                           wrap_to_pi(wrapped.at(x + 1, y) - wrapped.at(x, y));
                sum.add(d * d);
            }
            if (y + 1 < wrapped.height) {
                double d = (candidate.at(x, y + 1) - candidate.at(x, y)) -
                           wrap_to_pi(wrapped.at(x, y + 1) - wrapped.at(x, y));
                sum.add(d * d);
            }
        }
    }
    return sum.value();
}

// ---- evaluation ------------------------------------------------------------

struct MetricsReport {
    double accuracy = 0.0;                    // fraction of pixels with k_pred == k_true
    std::optional<double> masked_accuracy;    // accuracy over gamma >= mask_threshold, absent if mask empty
    double rmse = 0.0;                        // RMSE of reconstructed absolute phase, radians
    std::map<std::pair<std::int32_t, std::int32_t>, std::uint64_t> confusion;  // (true, pred) -> count
    std::uint64_t total_pixels = 0;
    std::uint64_t masked_pixels = 0;
};

inline MetricsReport evaluate(const WrapCountRaster& predicted, const WrapCountRaster& truth,
                              const CoherenceRaster& coherence, double mask_threshold) {
    require_same_shape(predicted.width, predicted.height, truth.width, truth.height);
    require_same_shape(predicted.width, predicted.height, coherence.width, coherence.height);
    MetricsReport rep;
    rep.total_pixels = predicted.values.size();
    std::uint64_t correct = 0, masked_correct = 0;
    KahanSum sq;
    for (std::size_t i = 0; i < predicted.values.size(); ++i) {
        std::int32_t kp = predicted.values[i];
        std::int32_t kt = truth.values[i];
        rep.confusion[{kt, kp}]++;
        if (kp == kt) ++correct;
        if (coherence.values[i] >= mask_threshold) {
            ++rep.masked_pixels;
            if (kp == kt) ++masked_correct;
        }
        double d = kTwoPi * (kp - kt);  // reconstructed phi_a differs only through k
        sq.add(d * d);
    }
    rep.accuracy = static_cast<double>(correct) / rep.total_pixels;
    if (rep.masked_pixels > 0)
        rep.masked_accuracy = static_cast<double>(masked_correct) / rep.masked_pixels;
    rep.rmse = std::sqrt(sq.value() / rep.total_pixels);
    return rep;
}

// Removes the best global 2pi*k0 offset between an unwrapping result and a
// reference before comparing; the Itoh seed fixes k arbitrarily.
inline WrapCountRaster counts_with_offset_removed(const WrapCountRaster& k,
                                                  const WrapCountRaster& truth) {
    require_same_shape(k.width, k.height, truth.width, truth.height);
    // majority offset
    std::map<std::int32_t, std::uint64_t> hist;
    for (std::size_t i = 0; i < k.values.size(); ++i) hist[k.values[i] - truth.values[i]]++;
    std::int32_t best = 0;
    std::uint64_t best_n = 0;
    for (auto& [off, n] : hist)
        if (n > best_n) {
            best = off;
            best_n = n;
        }
    WrapCountRaster out = k;
    for (auto& v : out.values) v -= best;
    return out;
}

}  // namespace snur

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>

#include "snur/common.hpp"
#include "snur/raster.hpp"

namespace snur {

enum class SceneShape { gaussian_bump, linear_ramp, superposed_bumps };
enum class CoherenceProfile { uniform, radial, patchy };

struct SceneSpec {
    int width = 64;
    int height = 64;
    SceneShape shape = SceneShape::gaussian_bump;
    double amplitude = 6.0;        // radians, peak of bump shapes
    double ramp_slope = 0.14;      // radians per pixel along x
    CoherenceProfile coherence_profile = CoherenceProfile::uniform;
    double coherence_level = 1.0;  // gamma baseline
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (width < 2 || height < 2) throw InvalidSpec("scene must be at least 2x2");
        if (amplitude < 0.0) throw InvalidSpec("amplitude must be non-negative");
        if (coherence_level < 0.0 || coherence_level > 1.0)
            throw InvalidSpec("coherence_level outside [0, 1]");
    }
};

struct Scene {
    PhaseRaster absolute;
    PhaseRaster wrapped;    // wrap(absolute + noise)
    CoherenceRaster coherence;
    WrapCountRaster truth;  // k of the noiseless wrap
};

// Phase-noise standard deviation for a given coherence, single-look
// approximation, clamped to [0, pi/2]. gamma = 0 means fully decorrelated:
// the caller substitutes uniform phase noise on (-pi, pi].
inline double phase_noise_sigma(double gamma) {
    if (gamma <= 0.0) return kPi / 2.0;
    double s = std::sqrt((1.0 - gamma * gamma) / (2.0 * gamma * gamma));
    return std::min(s, kPi / 2.0);
}

inline Scene synthesize_scene(const SceneSpec& spec) {
    spec.validate();
    const int w = spec.width, h = spec.height;

    PhaseRaster abs = PhaseRaster::filled(w, h, PhaseKind::absolute);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double sigma_b = std::min(w, h) / 4.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v = 0.0;
            switch (spec.shape) {
                case SceneShape::gaussian_bump: {
                    double dx = x - cx, dy = y - cy;
                    v = spec.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_b * sigma_b));
                    break;
                }
                case SceneShape::linear_ramp:
                    v = spec.ramp_slope * x;
                    break;
                case SceneShape::superposed_bumps: {
                    double dx1 = x - cx / 2.0, dy1 = y - cy / 2.0;
                    double dx2 = x - (cx + cx / 2.0), dy2 = y - (cy + cy / 2.0);
                    double s2 = sigma_b * sigma_b / 2.0;
                    v = spec.amplitude * std::exp(-(dx1 * dx1 + dy1 * dy1) / (2.0 * s2)) +
                        0.7 * spec.amplitude * std::exp(-(dx2 * dx2 + dy2 * dy2) / (2.0 * s2));
                    break;
                }
            }
            abs.at(x, y) = v;
        }
    }

    CoherenceRaster coh = CoherenceRaster::filled(w, h, spec.coherence_level);
    std::mt19937_64 coh_rng(mix_seed(spec.rng_seed, 1));
    switch (spec.coherence_profile) {
        case CoherenceProfile::uniform:
            break;
        case CoherenceProfile::radial: {
            double rmax = std::hypot(cx, cy);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double r = std::hypot(x - cx, y - cy) / rmax;
                    coh.at(x, y) = spec.coherence_level * (1.0 - 0.8 * r);
                }
            break;
        }
        case CoherenceProfile::patchy: {
            std::uniform_real_distribution<double> u(0.2, 1.0);
            const int patch = 8;
            for (int py = 0; py < h; py += patch)
                for (int px = 0; px < w; px += patch) {
                    double g = spec.coherence_level * u(coh_rng);
                    for (int y = py; y < std::min(py + patch, h); ++y)
                        for (int x = px; x < std::min(px + patch, w); ++x) coh.at(x, y) = g;
                }
            break;
        }
    }

    PhaseRaster wrapped_clean = wrap(abs);
    WrapCountRaster truth = wrap_counts(abs, wrapped_clean);

    PhaseRaster noisy = abs;
    std::mt19937_64 rng(mix_seed(spec.rng_seed, 2));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-kPi, kPi);
    for (std::size_t i = 0; i < noisy.values.size(); ++i) {
        double g = coh.values[i];
        if (g <= 0.0) {
            double n = -uni(rng);  // negate so the open end lands at -pi
            noisy.values[i] += n;
        } else {
            noisy.values[i] += phase_noise_sigma(g) * gauss(rng);
        }
    }

    Scene scene;
    scene.absolute = std::move(abs);
    scene.wrapped = wrap(noisy);
    scene.coherence = std::move(coh);
    scene.truth = std::move(truth);
    return scene;
}

inline std::string to_string(SceneShape s) {
    switch (s) {
        case SceneShape::gaussian_bump: return "gaussian_bump";
        case SceneShape::linear_ramp: return "linear_ramp";
        case SceneShape::superposed_bumps: return "superposed_bumps";
    }
    return "?";
}

inline std::string to_string(CoherenceProfile p) {
    switch (p) {
        case CoherenceProfile::uniform: return "uniform";
        case CoherenceProfile::radial: return "radial";
        case CoherenceProfile::patchy: return "patchy";
    }
    return "?";
}

}  // namespace snur

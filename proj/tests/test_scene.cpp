#include <catch2/catch_amalgamated.hpp>

#include "snur/scene.hpp"

using namespace snur;

TEST_CASE("zero-amplitude bump is the all-zero scene") {
    SceneSpec spec;
    spec.width = 8;
    spec.height = 8;
    spec.shape = SceneShape::gaussian_bump;
    spec.amplitude = 0.0;
    spec.coherence_level = 1.0;
    Scene s = synthesize_scene(spec);
    for (double v : s.absolute.values) CHECK(v == 0.0);
    for (double v : s.wrapped.values) CHECK(v == 0.0);
    for (auto k : s.truth.values) CHECK(k == 0);
}

TEST_CASE("linear ramp truth matches the wrap oracle") {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    spec.shape = SceneShape::linear_ramp;
    spec.ramp_slope = 0.5;
    spec.coherence_level = 1.0;
    Scene s = synthesize_scene(spec);
    CHECK_THAT(*std::max_element(s.absolute.values.begin(), s.absolute.values.end()),
               Catch::Matchers::WithinAbs(7.5, 1e-12));
    // oracle: wrap() applied to the analytic ramp
    PhaseRaster clean_wrapped = wrap(s.absolute);
    WrapCountRaster k_oracle = wrap_counts(s.absolute, clean_wrapped);
    CHECK(s.truth.values == k_oracle.values);
    // at full coherence no noise is added
    CHECK(s.wrapped.values == clean_wrapped.values);
}

TEST_CASE("generation is a pure function of the spec") {
    SceneSpec spec;
    spec.width = 12;
    spec.height = 10;
    spec.shape = SceneShape::superposed_bumps;
    spec.amplitude = 4.0;
    spec.coherence_profile = CoherenceProfile::patchy;
    spec.coherence_level = 0.6;
    spec.rng_seed = 99;
    Scene a = synthesize_scene(spec);
    Scene b = synthesize_scene(spec);
    CHECK(a.absolute.values == b.absolute.values);
    CHECK(a.wrapped.values == b.wrapped.values);
    CHECK(a.coherence.values == b.coherence.values);
    CHECK(a.truth.values == b.truth.values);
}

TEST_CASE("truth stays the noiseless labels under noise") {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    spec.shape = SceneShape::linear_ramp;
    spec.ramp_slope = 0.4;
    spec.coherence_level = 0.0;  // pure noise
    spec.rng_seed = 5;
    Scene s = synthesize_scene(spec);
    WrapCountRaster k_oracle = wrap_counts(s.absolute, wrap(s.absolute));
    CHECK(s.truth.values == k_oracle.values);
    s.wrapped.validate();
}

TEST_CASE("noise model is monotone in coherence") {
    CHECK(phase_noise_sigma(1.0) == 0.0);
    CHECK(phase_noise_sigma(0.0) == kPi / 2.0);
    double prev = phase_noise_sigma(0.05);
    for (double g = 0.1; g <= 1.0; g += 0.05) {
        double s = phase_noise_sigma(g);
        CHECK(s <= prev);
        prev = s;
    }
    // sqrt((1-g^2)/(2 g^2)) at g = 0.5 -> sqrt(1.5)
    CHECK_THAT(phase_noise_sigma(0.5), Catch::Matchers::WithinAbs(std::sqrt(1.5), 1e-12));
}

TEST_CASE("invalid specs are rejected") {
    SceneSpec spec;
    spec.width = 1;
    CHECK_THROWS_AS(synthesize_scene(spec), InvalidSpec);
    spec.width = 8;
    spec.height = 8;
    spec.amplitude = -1.0;
    CHECK_THROWS_AS(synthesize_scene(spec), InvalidSpec);
    spec.amplitude = 1.0;
    spec.coherence_level = 1.5;
    CHECK_THROWS_AS(synthesize_scene(spec), InvalidSpec);
}

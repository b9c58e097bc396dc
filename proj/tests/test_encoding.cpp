#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "snur/encoding.hpp"
#include "snur/scene.hpp"

using namespace snur;

TEST_CASE("wrapped_gradient") {
    PhaseRaster flat = PhaseRaster::filled(5, 4, PhaseKind::wrapped, 0.7);
    auto g = wrapped_gradient(flat, Axis::x);
    for (double v : g) CHECK(v == 0.0);

    PhaseRaster row = PhaseRaster::filled(2, 2, PhaseKind::wrapped);
    row.at(0, 0) = 3.0;
    row.at(1, 0) = -3.0;
    auto gx = wrapped_gradient(row, Axis::x);
    CHECK_THAT(gx[0], Catch::Matchers::WithinAbs(-6.0 + kTwoPi, 1e-12));
    CHECK(gx[1] == 0.0);  // border column

    // equals the true absolute gradient wherever |true delta| < pi
    SceneSpec spec;
    spec.width = 20;
    spec.height = 20;
    spec.shape = SceneShape::gaussian_bump;
    spec.amplitude = 5.0;
    spec.coherence_level = 1.0;
    Scene s = synthesize_scene(spec);
    auto grad = wrapped_gradient(s.wrapped, Axis::x);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x + 1 < 20; ++x) {
            double truth = s.absolute.at(x + 1, y) - s.absolute.at(x, y);
            if (std::abs(truth) < kPi - 1e-9)
                CHECK_THAT(grad[y * 20 + x], Catch::Matchers::WithinAbs(truth, 1e-9));
        }
}

TEST_CASE("rate coding endpoints and arithmetic") {
    RateParams p;
    CHECK(encode_rate_value(-kPi, p, 0).times.empty());

    // phi = pi -> r = r_max; 100 Hz over 100 ms -> one spike per 10 steps
    auto full = encode_rate_value(kPi, p, 0);
    CHECK(full.times.size() >= 9);
    CHECK(full.times.size() <= 10);

    // phi = pi/2 -> 75 Hz -> 7 or 8 spikes in the 100 ms window
    auto train = encode_rate_value(kPi / 2.0, p, 0);
    CHECK(train.times.size() >= 7);
    CHECK(train.times.size() <= 8);
}

TEST_CASE("rate coding count tracks r*dt*T within one spike") {
    RateParams p;
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(std::nextafter(-kPi, 0.0), kPi);
    for (int trial = 0; trial < 500; ++trial) {
        double phi = u(rng);
        double expected = p.r_max * std::abs(phi + kPi) / kTwoPi * p.dt * p.t_sim;
        auto train = encode_rate_value(phi, p, 0);
        CHECK(std::abs(static_cast<double>(train.times.size()) - expected) <= 1.0);
        CHECK(std::is_sorted(train.times.begin(), train.times.end()));
        for (int t : train.times) CHECK(t < p.t_sim);
    }
}

TEST_CASE("rate mapping is affine in phi") {
    RateParams p;
    auto rate_of = [&](double phi) { return p.r_max * std::abs(phi + kPi) / kTwoPi; };
    double a = 0.3, b = -1.2;
    CHECK_THAT(rate_of(a) - rate_of(b),
               Catch::Matchers::WithinAbs(
                   p.r_max * (std::abs(a + kPi) - std::abs(b + kPi)) / kTwoPi, 1e-12));
}

TEST_CASE("poisson mode is seeded and plausible") {
    RateParams p;
    p.mode = RateMode::poisson;
    p.rng_seed = 7;
    auto a = encode_rate_value(1.0, p, 3);
    auto b = encode_rate_value(1.0, p, 3);
    CHECK(a.times == b.times);
    p.rng_seed = 8;
    auto c = encode_rate_value(1.0, p, 3);
    CHECK(a.times != c.times);
}

TEST_CASE("temporal coding") {
    TemporalParams p;  // t_ref 50, delta_t 40, grad_max pi
    CHECK(encode_temporal_value(0.0, p) == 50);
    CHECK(encode_temporal_value(p.grad_max, p) == 10);
    CHECK(encode_temporal_value(-p.grad_max / 2.0, p) == 70);
    // clamping
    CHECK(encode_temporal_value(100.0, p) == 10);
    CHECK(encode_temporal_value(-100.0, p) == 90);
    // monotone decreasing in g
    int prev = 1000;
    for (double g = -p.grad_max; g <= p.grad_max; g += 0.01) {
        int t = encode_temporal_value(g, p);
        CHECK(t <= prev);
        prev = t;
    }
    // injectivity over the quantization grid
    double quantum = p.grad_max / p.delta_t;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-p.grad_max, p.grad_max - quantum * 1.01);
    for (int trial = 0; trial < 200; ++trial) {
        double g = u(rng);
        CHECK(encode_temporal_value(g, p) != encode_temporal_value(g + quantum * 1.01, p));
    }
}

TEST_CASE("population coding") {
    PopulationParams p;
    CHECK(population_active_count(0.0, p) == 0);
    CHECK(population_active_count(1.0, p) == 10);
    CHECK(population_active_count(0.73, p) == 7);
    // monotone non-decreasing in gamma
    int prev = 0;
    for (double g = 0.0; g <= 1.0; g += 0.01) {
        int n = population_active_count(g, p);
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("encode_scene layout and determinism") {
    SceneSpec spec;
    spec.width = 4;
    spec.height = 4;
    spec.amplitude = 0.0;
    spec.coherence_level = 1.0;
    Scene s = synthesize_scene(spec);

    EncodeParams p;
    EncodedScene enc = encode_scene(s.wrapped, s.coherence, p);
    CHECK(enc.channel_count() == 48);  // 3MN

    // all-zero wrapped: phase channels at r_max/2, gradient channels only at t_ref
    for (std::size_t i = 0; i < enc.pixels(); ++i) {
        CHECK(enc.phase[i].times.size() >= 4);
        CHECK(enc.phase[i].times.size() <= 5);  // 50 Hz over 100 ms
        REQUIRE(enc.gradient_x[i].times.size() == 1);
        CHECK(enc.gradient_x[i].times[0] == p.temporal.t_ref);
    }

    EncodedScene enc2 = encode_scene(s.wrapped, s.coherence, p);
    CHECK(enc.total_spikes() == enc2.total_spikes());
    for (std::size_t c = 0; c < enc.channel_count(); ++c)
        CHECK(enc.channel(c).times == enc2.channel(c).times);

    SECTION("y-gradient switch adds a fourth map") {
        p.include_y_gradient = true;
        EncodedScene enc4 = encode_scene(s.wrapped, s.coherence, p);
        CHECK(enc4.channel_count() == 64);  // 4MN
    }

    SECTION("dimension mismatch") {
        CoherenceRaster bad = CoherenceRaster::filled(5, 5, 1.0);
        CHECK_THROWS_AS(encode_scene(s.wrapped, bad, p), InvalidRaster);
    }
}

TEST_CASE("scene spike totals are monotone in coherence") {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 16;
    spec.shape = SceneShape::gaussian_bump;
    spec.amplitude = 4.0;
    spec.rng_seed = 17;
    EncodeParams p;
    std::uint64_t prev = 0;
    for (double level : {0.1, 0.4, 0.7, 1.0}) {
        spec.coherence_level = level;
        Scene s = synthesize_scene(spec);
        EncodedScene enc = encode_scene(s.wrapped, s.coherence, p);
        CHECK(enc.total_spikes() >= prev);
        prev = enc.total_spikes();
    }
}

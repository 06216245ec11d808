#include <catch2/catch_amalgamated.hpp>

#include "lppl/classify.hpp"
#include "lppl/synth.hpp"

using namespace lppl;

namespace {

// declining negative bubble: falls toward A as t -> tc, periods shrinking
PriceSeries make_negative_bubble(std::uint64_t seed, double sigma = 0.02) {
    SynthSpec spec;
    spec.params = {30.0, 20.0, 0.6, 0.25, 12.0, 0.5, 2016.0};
    spec.start = 2015.0;
    spec.end = 2015.95;
    spec.cadence_days = 1.5;
    spec.noise = sigma > 0.0 ? NoiseKind::gaussian : NoiseKind::none;
    spec.sigma_frac = sigma;
    spec.seed = seed;
    return generate(spec);
}

// declining antibubble: tc before the window, oscillation periods growing
PriceSeries make_antibubble(std::uint64_t seed, double sigma = 0.02) {
    const LpplParams p{60.0, -15.0, 0.4, 0.2, 10.0, 1.0, 2014.9};
    PriceSeries s;
    const int n = 240;
    for (int i = 0; i < n; ++i) {
        const double t = 2015.0 + (2015.95 - 2015.0) * i / (n - 1);
        const double dt = t - p.tc;
        s.times.push_back(t);
        s.values.push_back(p.A + p.m * std::pow(dt, p.alpha) *
                                     (1.0 + p.C * std::cos(p.omega * std::log(dt) +
                                                           p.phi)));
    }
    if (sigma > 0.0) {
        detail::GaussianRng rng(seed);
        double lo = s.values[0], hi = s.values[0];
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (auto& v : s.values) v += sigma * (hi - lo) * rng.gaussian();
    }
    return s;
}

FitConfig classify_cfg() {
    FitConfig cfg;
    cfg.tc_bounds = {2015.955, 2016.6};  // bubble side; mirrored for the probe
    cfg.n_starts = 16;
    return cfg;
}

} // namespace

TEST_CASE("a synthetic negative bubble is labelled as such") {
    const auto s = make_negative_bubble(1);
    const auto v = classify(s, classify_cfg());
    CHECK(v.label == RegimeLabel::negative_bubble);
    CHECK_FALSE(v.evidence.bubble_flags.any());
    REQUIRE(v.bubble_fit.has_value());
    CHECK_FALSE(v.bubble_fit->degenerate_basis);
}

TEST_CASE("a synthetic antibubble is labelled as such") {
    const auto s = make_antibubble(2);
    const auto v = classify(s, classify_cfg());
    CHECK(v.label == RegimeLabel::antibubble);
    CHECK_FALSE(v.evidence.antibubble_flags.any());
}

TEST_CASE("a rising bubble is labelled positive") {
    SynthSpec spec;
    spec.params = {80.0, -30.0, 0.6, 0.15, 12.0, 0.5, 2016.0};  // rises toward A
    spec.start = 2015.0;
    spec.end = 2015.95;
    spec.cadence_days = 1.5;
    spec.noise = NoiseKind::gaussian;
    spec.sigma_frac = 0.02;
    spec.seed = 3;
    const auto v = classify(generate(spec), classify_cfg());
    CHECK(v.label == RegimeLabel::positive_bubble);
}

TEST_CASE("white noise around a constant is labelled none") {
    PriceSeries s;
    detail::GaussianRng rng(7);
    for (int i = 0; i < 200; ++i) {
        s.times.push_back(2015.0 + i * 0.004);
        s.values.push_back(50.0 + 0.5 * rng.gaussian());
    }
    const auto v = classify(s, classify_cfg());
    CHECK(v.label == RegimeLabel::none);
}

TEST_CASE("the label is invariant under positive value scaling") {
    auto s = make_negative_bubble(11);
    const auto before = classify(s, classify_cfg());
    for (auto& v : s.values) v *= 250.0;
    const auto after = classify(s, classify_cfg());
    CHECK(before.label == after.label);
}

TEST_CASE("short input is rejected") {
    PriceSeries s;
    for (int i = 0; i < 10; ++i) {
        s.times.push_back(2015.0 + i * 0.01);
        s.values.push_back(50.0);
    }
    CHECK_THROWS_AS(classify(s, classify_cfg()), input_error);
}

TEST_CASE("probe on a true antibubble at the true tc matches extrema") {
    const auto s = make_antibubble(5);
    const auto probe = antibubble_probe(s, 2014.9, classify_cfg());
    CHECK(probe.extrema_match >= 0.8);
    CHECK_FALSE(probe.flags.any());
}

TEST_CASE("probe on a negative bubble degenerates or mismatches") {
    const auto s = make_negative_bubble(6);
    const auto probe = antibubble_probe(s, 2014.9, classify_cfg());
    CHECK((probe.flags.any() || probe.extrema_match <= 0.5));
}

TEST_CASE("probe tc inside the window is a precondition error") {
    const auto s = make_negative_bubble(8);
    CHECK_THROWS_AS(antibubble_probe(s, 2015.5, classify_cfg()),
                    std::invalid_argument);
}

TEST_CASE("classify requires bubble-side tc bounds") {
    const auto s = make_negative_bubble(9);
    FitConfig cfg;
    cfg.tc_bounds = {2014.0, 2014.9};
    CHECK_THROWS_AS(classify(s, cfg), std::invalid_argument);
}

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lppl/fit.hpp"
#include "lppl/synth.hpp"

using namespace lppl;

namespace {

PriceSeries sampled(const LpplParams& p, double t0, double t1, int n) {
    PriceSeries s;
    s.times.resize(n);
    s.values.resize(n);
    for (int i = 0; i < n; ++i) {
        s.times[i] = t0 + (t1 - t0) * i / (n - 1);
        s.values[i] = evaluate(p, s.times[i]);
    }
    return s;
}

const LpplParams kTruth{10.0, 5.0, 0.5, 0.2, 9.0, 1.0, 2020.0};

} // namespace

TEST_CASE("slaved solution interpolates exact data") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 120);
    const auto sol = objective(s, Orientation::bubble, kTruth.tc, kTruth.alpha,
                               kTruth.omega, kTruth.phi);
    CHECK_THAT(sol.A, Catch::Matchers::WithinRel(kTruth.A, 1e-9));
    CHECK_THAT(sol.m, Catch::Matchers::WithinRel(kTruth.m, 1e-9));
    CHECK_THAT(sol.mC, Catch::Matchers::WithinRel(kTruth.m * kTruth.C, 1e-9));
    const double scale = s.value_range();
    CHECK(sol.rss <= 1e-18 * scale * scale * s.size());
    CHECK_FALSE(sol.degenerate);
}

TEST_CASE("constant series collapses to a flagged trendless solution") {
    PriceSeries s;
    for (int i = 0; i < 40; ++i) {
        s.times.push_back(2015.0 + i * 0.01);
        s.values.push_back(5.0);
    }
    const auto sol = objective(s, Orientation::bubble, 2020.0, 0.5, 9.0, 1.0);
    CHECK_THAT(sol.m, Catch::Matchers::WithinAbs(0.0, 1e-7));
    CHECK(sol.rss < 1e-18);
    CHECK(sol.degenerate);
}

TEST_CASE("slaved solution beats random linear parameter triples") {
    auto s = sampled(kTruth, 2016.0, 2019.5, 20);
    detail::GaussianRng rng(123);
    const double sigma = 0.01 * s.value_range();
    for (auto& v : s.values) v += sigma * rng.gaussian();

    const auto sol = objective(s, Orientation::bubble, kTruth.tc, kTruth.alpha,
                               kTruth.omega, kTruth.phi);
    // random-search oracle over (A, m, mC)
    for (int trial = 0; trial < 1000; ++trial) {
        const double A = kTruth.A + 2.0 * rng.gaussian();
        const double m = kTruth.m + 2.0 * rng.gaussian();
        const double mC = kTruth.m * kTruth.C + 0.5 * rng.gaussian();
        double rss = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double dt = kTruth.tc - s.times[i];
            const double u = std::pow(dt, kTruth.alpha);
            const double v = u * std::cos(kTruth.omega * std::log(dt) + kTruth.phi);
            const double r = s.values[i] - A - m * u - mC * v;
            rss += r * r;
        }
        REQUIRE(sol.rss <= rss + 1e-12);
    }
}

TEST_CASE("noiseless multi-start fit recovers every parameter") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 300);
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2022.0};
    cfg.n_starts = 16;
    cfg.seed = 3;
    const auto r = fit(s, cfg);
    CHECK_THAT(r.params.A, Catch::Matchers::WithinRel(kTruth.A, 1e-3));
    CHECK_THAT(r.params.m, Catch::Matchers::WithinRel(kTruth.m, 1e-3));
    CHECK_THAT(r.params.alpha, Catch::Matchers::WithinRel(kTruth.alpha, 1e-3));
    CHECK_THAT(r.params.C, Catch::Matchers::WithinRel(kTruth.C, 1e-3));
    CHECK_THAT(r.params.omega, Catch::Matchers::WithinRel(kTruth.omega, 1e-3));
    CHECK_THAT(r.params.phi, Catch::Matchers::WithinRel(kTruth.phi, 1e-3));
    CHECK_THAT(r.params.tc, Catch::Matchers::WithinRel(kTruth.tc, 1e-6));
    CHECK(r.starts_converged > 0);
    CHECK(r.n_points == 300);
}

TEST_CASE("fit is deterministic given series, config and seed") {
    auto s = sampled(kTruth, 2016.0, 2019.8, 150);
    detail::GaussianRng rng(5);
    for (auto& v : s.values) v += 0.05 * rng.gaussian();
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 12;
    cfg.seed = 17;
    const auto a = fit(s, cfg);
    const auto b = fit(s, cfg);
    CHECK(a.rss == b.rss);
    CHECK(a.params.tc == b.params.tc);
    CHECK(a.params.omega == b.params.omega);
    CHECK(a.params.phi == b.params.phi);
    CHECK(a.residuals == b.residuals);
}

TEST_CASE("rss is recomputable from the stored result") {
    auto s = sampled(kTruth, 2016.0, 2019.8, 150);
    detail::GaussianRng rng(5);
    for (auto& v : s.values) v += 0.05 * rng.gaussian();
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 12;
    const auto r = fit(s, cfg);
    double rss = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = s.values[i] - model_value(r.params, s.times[i], r.orientation);
        rss += e * e;
    }
    CHECK_THAT(rss, Catch::Matchers::WithinRel(r.rss, 1e-10));
    CHECK(cfg.tc_bounds.contains(r.params.tc));
    CHECK(cfg.alpha_bounds.contains(r.params.alpha));
    CHECK(cfg.omega_bounds.contains(r.params.omega));
}

TEST_CASE("no perturbation of the slaved parameters lowers the rss") {
    auto s = sampled(kTruth, 2016.0, 2019.8, 100);
    detail::GaussianRng rng(7);
    for (auto& v : s.values) v += 0.03 * rng.gaussian();
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 8;
    const auto r = fit(s, cfg);
    const auto base = objective(s, r.orientation, r.params.tc, r.params.alpha,
                                r.params.omega, r.params.phi);
    for (int trial = 0; trial < 200; ++trial) {
        const double A = base.A + 0.01 * rng.gaussian();
        const double m = base.m + 0.01 * rng.gaussian();
        const double mC = base.mC + 0.01 * rng.gaussian();
        double rss = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double dt = r.params.tc - s.times[i];
            const double u = std::pow(dt, r.params.alpha);
            const double v =
                u * std::cos(r.params.omega * std::log(dt) + r.params.phi);
            const double e = s.values[i] - A - m * u - mC * v;
            rss += e * e;
        }
        REQUIRE(rss >= base.rss - 1e-12);
    }
}

TEST_CASE("scaling the values scales only the linear parameters") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 250);
    PriceSeries scaled = s;
    const double factor = 7.5;
    for (auto& v : scaled.values) v *= factor;
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 12;
    cfg.seed = 1;
    const auto a = fit(s, cfg);
    const auto b = fit(scaled, cfg);
    CHECK_THAT(b.params.A, Catch::Matchers::WithinRel(factor * a.params.A, 1e-8));
    CHECK_THAT(b.params.m, Catch::Matchers::WithinRel(factor * a.params.m, 1e-8));
    CHECK_THAT(b.params.alpha, Catch::Matchers::WithinRel(a.params.alpha, 1e-8));
    CHECK_THAT(b.params.C, Catch::Matchers::WithinRel(a.params.C, 1e-8));
    CHECK_THAT(b.params.omega, Catch::Matchers::WithinRel(a.params.omega, 1e-8));
    CHECK_THAT(b.params.tc, Catch::Matchers::WithinAbs(a.params.tc, 1e-8));
}

TEST_CASE("fixing tc at the optimum reproduces the full fit") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 200);
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 16;
    const auto full = fit(s, cfg);
    const auto fixed = fit_fixed_tc(s, full.params.tc, cfg);
    // on noiseless data both optima sit at numerical zero
    const double slack = 1e-10 + 1e-10 * full.rss;
    CHECK(fixed.rss <= full.rss + slack);
    CHECK_THAT(fixed.rss, Catch::Matchers::WithinAbs(full.rss, slack));
}

TEST_CASE("restricting tc can never beat the free optimum") {
    auto s = sampled(kTruth, 2016.0, 2019.8, 150);
    detail::GaussianRng rng(9);
    for (auto& v : s.values) v += 0.05 * rng.gaussian();
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 12;
    const auto full = fit(s, cfg);
    for (double tc : {2019.9, 2020.1, 2020.6, 2021.2}) {
        const auto fixed = fit_fixed_tc(s, tc, cfg);
        REQUIRE(fixed.rss >= full.rss * (1.0 - 1e-10));
    }
}

TEST_CASE("a tc scan profile dips at the truth") {
    auto s = sampled(kTruth, 2016.0, 2019.8, 200);
    detail::GaussianRng rng(21);
    const double sigma = 0.01 * s.value_range();
    for (auto& v : s.values) v += sigma * rng.gaussian();
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.5};
    cfg.n_starts = 12;
    // profile-scan oracle: grid tc around the truth, refit the rest
    const double step = 0.05;
    double best_tc = 0.0, best_rss = 1e300;
    for (int k = -3; k <= 3; ++k) {  // grid stays beyond the window end
        const double tc = kTruth.tc + k * step;
        const auto r = fit_fixed_tc(s, tc, cfg);
        if (r.rss < best_rss) {
            best_rss = r.rss;
            best_tc = tc;
        }
    }
    CHECK(std::abs(best_tc - kTruth.tc) <= step + 1e-12);
}

TEST_CASE("fixed tc inside the window is a precondition error") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 50);
    CHECK_THROWS_AS(fit_fixed_tc(s, 2018.0, FitConfig{}), std::invalid_argument);
}

TEST_CASE("short series and bad bounds are input errors") {
    const auto s = sampled(kTruth, 2016.0, 2019.8, 5);
    FitConfig cfg;
    cfg.tc_bounds = {2019.81, 2021.0};
    CHECK_THROWS_AS(fit(s, cfg), input_error);

    const auto ok = sampled(kTruth, 2016.0, 2019.8, 50);
    FitConfig straddle;
    straddle.tc_bounds = {2017.0, 2021.0};  // overlaps the window
    CHECK_THROWS_AS(fit(ok, straddle), std::invalid_argument);
}

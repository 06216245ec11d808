#ifndef LPPL_CLASSIFY_HPP
#define LPPL_CLASSIFY_HPP

// Regime classification: negative bubble / positive bubble / antibubble /
// none. The model is fitted in both orientations; an orientation is
// discarded as degenerate when its oscillation amplitude sinks below the
// noise floor, its exponent pins at a search bound, or fewer than two full
// oscillation periods fit inside the window. A non-degenerate orientation
// must beat the other's rss by a configurable margin (default 10%) to win;
// otherwise the verdict is labelled none with an ambiguity flag.

#include <cmath>
#include <optional>
#include <vector>

#include "lppl/cascade.hpp"
#include "lppl/errors.hpp"
#include "lppl/fit.hpp"
#include "lppl/model.hpp"

namespace lppl {

enum class RegimeLabel { negative_bubble, positive_bubble, antibubble, none };

inline const char* to_string(RegimeLabel l) {
    switch (l) {
        case RegimeLabel::negative_bubble: return "negative_bubble";
        case RegimeLabel::positive_bubble: return "positive_bubble";
        case RegimeLabel::antibubble: return "antibubble";
        default: return "none";
    }
}

struct DegeneracyFlags {
    bool amplitude_below_floor = false;
    bool alpha_pinned = false;
    bool too_few_periods = false;
    bool any() const {
        return amplitude_below_floor || alpha_pinned || too_few_periods;
    }
};

struct TrendOnlyFit {
    double tc = 0.0, alpha = 0.0, A = 0.0, m = 0.0;
    double rss = 0.0, rmse = 0.0;
};

struct RegimeEvidence {
    double rss_ratio = 0.0;  // losing rss / winning rss (>= 1 when decided)
    DegeneracyFlags bubble_flags, antibubble_flags;
    double noise_floor = 0.0;
    double trend_only_rss = 0.0;
    bool ambiguous = false;  // margin between orientations below threshold
};

struct RegimeVerdict {
    RegimeLabel label = RegimeLabel::none;
    std::optional<FitResult> bubble_fit;
    std::optional<FitResult> antibubble_fit;
    RegimeEvidence evidence;
};

constexpr std::size_t kMinClassifyPoints = 16;
// Multiplier on the trend-only rmse below which a fitted oscillation counts
// as noise. The trend-only rmse already contains the oscillation power, so
// this sits well below 1.
constexpr double kAmplitudeFloorFactor = 0.5;
constexpr double kRssMargin = 0.10;

// Trend-only baseline A + m (tc-t)^alpha, both linear parameters slaved.
inline TrendOnlyFit fit_trend_only(const PriceSeries& series, const FitConfig& cfg) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for trend fitting");
    const auto& t = series.times;
    const auto& y = series.values;
    const Orientation o =
        detail::infer_orientation(cfg.tc_bounds, t.front(), t.back());
    const double sign = orientation_sign(o);

    auto solve = [&](double tc, double alpha, double& A, double& m) {
        double Su = 0.0, Suu = 0.0, Sy = 0.0, Syu = 0.0;
        const double n = static_cast<double>(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double dt = (tc - t[i]) * sign;
            if (!(dt > 0.0)) return std::numeric_limits<double>::infinity();
            const double u = std::pow(dt, alpha);
            Su += u;
            Suu += u * u;
            Sy += y[i];
            Syu += y[i] * u;
        }
        const double det = n * Suu - Su * Su;
        if (std::abs(det) < 1e-14 * n * std::max(Suu, 1.0)) {
            m = 0.0;
            A = Sy / n;
        } else {
            m = (n * Syu - Su * Sy) / det;
            A = (Sy - m * Su) / n;
        }
        double rss = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double u = std::pow((tc - t[i]) * sign, alpha);
            const double r = y[i] - A - m * u;
            rss += r * r;
        }
        return rss;
    };

    detail::BoundMap tc_map = detail::BoundMap::linear(cfg.tc_bounds);
    detail::BoundMap alpha_map = detail::BoundMap::logarithmic(cfg.alpha_bounds);
    auto f = [&](const std::vector<double>& z) {
        double A, m;
        return solve(tc_map.decode(z[0]), alpha_map.decode(z[1]), A, m);
    };

    NelderMeadOptions nm;
    nm.max_iterations = cfg.max_iterations;
    TrendOnlyFit out;
    double best_rss = std::numeric_limits<double>::infinity();
    std::vector<double> best_z;
    const int n_starts = std::max(8, cfg.n_starts / 4);
    const std::uint64_t off = cfg.seed % 1000003 + 1;
    const auto grid = detail::tc_start_grid(cfg.tc_bounds, o, t.front(), t.back());
    for (int i = 0; i < n_starts; ++i) {
        const std::uint64_t k = static_cast<std::uint64_t>(i) + off;
        auto idx = std::min(static_cast<std::size_t>(detail::halton(k, 2) * grid.size()),
                            grid.size() - 1);
        const double a0 = std::exp(std::log(cfg.alpha_bounds.lo) +
                                   (std::log(cfg.alpha_bounds.hi) -
                                    std::log(cfg.alpha_bounds.lo)) *
                                       detail::halton(k, 3));
        std::vector<double> z0{tc_map.encode(grid[idx]), alpha_map.encode(a0)};
        auto r = nelder_mead(f, z0, {0.25, 0.25}, nm);
        r = nelder_mead(f, r.x, {0.05, 0.05}, nm);
        if (std::isfinite(r.fmin) && r.fmin < best_rss) {
            best_rss = r.fmin;
            best_z = r.x;
        }
    }
    if (best_z.empty()) throw optimization_error("trend-only fit failed");
    out.tc = tc_map.decode(best_z[0]);
    out.alpha = alpha_map.decode(best_z[1]);
    out.rss = solve(out.tc, out.alpha, out.A, out.m);
    out.rmse = std::sqrt(out.rss / static_cast<double>(t.size()));
    return out;
}

// Full oscillation periods of cos(omega ln|tc-t| + phi) between t0 and t1.
inline double full_periods_in_window(const LpplParams& p, double t0, double t1) {
    const double d0 = std::abs(p.tc - t0), d1 = std::abs(p.tc - t1);
    return std::abs(std::log(d0) - std::log(d1)) * p.omega /
           (2.0 * std::numbers::pi);
}

inline DegeneracyFlags degeneracy_flags(const FitResult& fit,
                                        const FitConfig& cfg, double noise_floor,
                                        double t0, double t1) {
    DegeneracyFlags flags;
    flags.amplitude_below_floor =
        std::abs(fit.params.m * fit.params.C) < noise_floor;
    // pinned: within a factor 10 of the lower alpha bound (the search runs in
    // log alpha) or within 0.1% of the upper bound
    flags.alpha_pinned = fit.params.alpha <= 10.0 * cfg.alpha_bounds.lo ||
                         fit.params.alpha >= 0.999 * cfg.alpha_bounds.hi;
    flags.too_few_periods = full_periods_in_window(fit.params, t0, t1) < 2.0;
    return flags;
}

namespace detail {

// centered moving average, half-width w
inline std::vector<double> smooth(const std::vector<double>& v, int w) {
    std::vector<double> out(v.size());
    const int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - w), hi = std::min(n - 1, i + w);
        double s = 0.0;
        for (int j = lo; j <= hi; ++j) s += v[j];
        out[i] = s / (hi - lo + 1);
    }
    return out;
}

// interior local extrema (indices) of a smoothed sequence
inline std::vector<std::size_t> local_extrema(const std::vector<double>& v) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const double dl = v[i] - v[i - 1], dr = v[i + 1] - v[i];
        if ((dl > 0.0 && dr < 0.0) || (dl < 0.0 && dr > 0.0)) idx.push_back(i);
    }
    return idx;
}

} // namespace detail

// Fraction of the fitted model's oscillation extrema inside the window that
// land within a quarter log-period of a local extremum of the smoothed data.
inline double extrema_match_score(const PriceSeries& series, const FitResult& fit) {
    const auto& t = series.times;
    const double sign = orientation_sign(fit.orientation);
    // model extrema (maxima and minima): omega ln(dt) + phi = k*pi
    std::vector<double> model_tau;
    {
        const double tau0 = std::log(std::abs(fit.params.tc - t.front()));
        const double tau1 = std::log(std::abs(fit.params.tc - t.back()));
        const double lo = std::min(tau0, tau1), hi = std::max(tau0, tau1);
        const double w = fit.params.omega, phi = fit.params.phi;
        const int k_lo = static_cast<int>(std::ceil((w * lo + phi) / std::numbers::pi));
        const int k_hi = static_cast<int>(std::floor((w * hi + phi) / std::numbers::pi));
        for (int k = k_lo; k <= k_hi; ++k)
            model_tau.push_back((k * std::numbers::pi - phi) / w);
    }
    if (model_tau.empty()) return 0.0;

    const auto smoothed = detail::smooth(series.values, 2);
    const auto data_idx = detail::local_extrema(smoothed);
    if (data_idx.empty()) return 0.0;
    std::vector<double> data_tau;
    data_tau.reserve(data_idx.size());
    for (auto i : data_idx)
        data_tau.push_back(std::log(std::abs((fit.params.tc - t[i]) * sign)));

    const double quarter = 0.25 * 2.0 * std::numbers::pi / fit.params.omega;
    std::size_t matched = 0;
    for (double mt : model_tau) {
        for (double dt : data_tau)
            if (std::abs(mt - dt) <= quarter) {
                ++matched;
                break;
            }
    }
    return static_cast<double>(matched) / static_cast<double>(model_tau.size());
}

struct AntibubbleProbe {
    FitResult fit;
    DegeneracyFlags flags;
    double extrema_match = 0.0;
};

// Fixed-tc antibubble fit plus the visual-criterion score made numeric.
inline AntibubbleProbe antibubble_probe(const PriceSeries& series, double tc_fixed,
                                        const FitConfig& cfg) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for the antibubble probe");
    if (!(tc_fixed < series.times.front()))
        throw std::invalid_argument(
            "antibubble probe tc must precede the first observation");
    AntibubbleProbe probe;
    probe.fit = fit_fixed_tc(series, tc_fixed, cfg);

    FitConfig anti_cfg = cfg;  // trend baseline in the same orientation
    anti_cfg.tc_bounds = {tc_fixed - 2.0, series.times.front() - 1e-4};
    const auto trend = fit_trend_only(series, anti_cfg);
    probe.flags = degeneracy_flags(probe.fit, cfg,
                                   kAmplitudeFloorFactor * trend.rmse,
                                   series.times.front(), series.times.back());
    probe.extrema_match = extrema_match_score(series, probe.fit);
    return probe;
}

// config.tc_bounds is the bubble-side interval (beyond the window end); the
// antibubble orientation probes its mirror image before the window start.
inline RegimeVerdict classify(const PriceSeries& series, const FitConfig& cfg) {
    if (series.size() < kMinClassifyPoints)
        throw input_error("classification needs at least 16 points");
    const double t0 = series.times.front(), t1 = series.times.back();
    if (!(cfg.tc_bounds.lo > t1))
        throw std::invalid_argument(
            "classify expects bubble-side tc_bounds after the window");

    FitConfig bubble_cfg = cfg;
    FitConfig anti_cfg = cfg;
    anti_cfg.tc_bounds = {t0 - (cfg.tc_bounds.hi - t1), t0 - (cfg.tc_bounds.lo - t1)};

    RegimeVerdict verdict;
    const auto trend = fit_trend_only(series, bubble_cfg);
    verdict.evidence.trend_only_rss = trend.rss;
    verdict.evidence.noise_floor = kAmplitudeFloorFactor * trend.rmse;

    try {
        verdict.bubble_fit = fit(series, bubble_cfg);
    } catch (const optimization_error&) {
    }
    try {
        verdict.antibubble_fit = fit(series, anti_cfg);
    } catch (const optimization_error&) {
    }

    auto usable = [&](const std::optional<FitResult>& f, DegeneracyFlags& flags) {
        if (!f) {
            flags = DegeneracyFlags{true, true, true};
            return false;
        }
        flags = degeneracy_flags(*f, cfg, verdict.evidence.noise_floor, t0, t1);
        return !flags.any() && f->rss < trend.rss;
    };
    const bool bubble_ok = usable(verdict.bubble_fit, verdict.evidence.bubble_flags);
    const bool anti_ok =
        usable(verdict.antibubble_fit, verdict.evidence.antibubble_flags);

    auto bubble_label = [&](const FitResult& f) {
        const double v0 = model_trend(f.params, t0, f.orientation);
        const double v1 = model_trend(f.params, t1, f.orientation);
        return v1 < v0 ? RegimeLabel::negative_bubble : RegimeLabel::positive_bubble;
    };

    if (bubble_ok && anti_ok) {
        const double rb = verdict.bubble_fit->rss, ra = verdict.antibubble_fit->rss;
        verdict.evidence.rss_ratio = rb < ra ? ra / rb : rb / ra;
        if (rb <= (1.0 - kRssMargin) * ra)
            verdict.label = bubble_label(*verdict.bubble_fit);
        else if (ra <= (1.0 - kRssMargin) * rb)
            verdict.label = RegimeLabel::antibubble;
        else
            verdict.evidence.ambiguous = true;  // label stays none
    } else if (bubble_ok) {
        verdict.label = bubble_label(*verdict.bubble_fit);
        if (verdict.antibubble_fit)
            verdict.evidence.rss_ratio =
                verdict.antibubble_fit->rss / verdict.bubble_fit->rss;
    } else if (anti_ok) {
        verdict.label = RegimeLabel::antibubble;
        if (verdict.bubble_fit)
            verdict.evidence.rss_ratio =
                verdict.bubble_fit->rss / verdict.antibubble_fit->rss;
    }
    return verdict;
}

} // namespace lppl

#endif

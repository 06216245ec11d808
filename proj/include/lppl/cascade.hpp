#ifndef LPPL_CASCADE_HPP
#define LPPL_CASCADE_HPP

// Iterative extraction of superimposed log-oscillation layers from fit
// residuals. Each step fits a pure oscillation a (tc-t)^beta cos(omega
// ln(tc-t) + phi) (no additive constant) to the current residual, subtracts
// it, and recurses until max_depth, a vanishing residual, or a layer that no
// longer explains enough variance.

#include <cmath>
#include <vector>

#include "lppl/errors.hpp"
#include "lppl/fit.hpp"
#include "lppl/model.hpp"

namespace lppl {

struct CascadeLayer {
    int depth = 0;  // 1-based
    OscLayerParams params;
    std::vector<double> input_residual;
    std::vector<double> output_residual;
    double rss_reduction = 0.0;  // fraction of input residual variance explained
};

struct CascadeResult {
    FitResult base_fit;
    std::vector<CascadeLayer> layers;
    double tc_spread = 0.0;  // max pairwise |tc| difference, base fit included
};

struct OscLayerFit {
    OscLayerParams params;
    double rss = 0.0;
    bool no_layer = false;  // residual numerically zero: cascade terminates
};

namespace detail {

// slave the amplitude over the single basis column (tc-t)^beta cos(...)
inline double osc_layer_rss(std::span<const double> t, std::span<const double> r,
                            double tc, double beta, double omega, double phi,
                            double& amplitude) {
    double vv = 0.0, rv = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dt = tc - t[i];
        if (!(dt > 0.0)) {
            amplitude = 0.0;
            return std::numeric_limits<double>::infinity();
        }
        const double L = std::log(dt);
        const double v = std::exp(beta * L) * std::cos(omega * L + phi);
        vv += v * v;
        rv += r[i] * v;
        rr += r[i] * r[i];
    }
    if (vv < 1e-300) {
        amplitude = 0.0;
        return rr;
    }
    amplitude = rv / vv;
    return rr - amplitude * rv;  // exact least-squares residual
}

} // namespace detail

// Envelope exponent beta is unconstrained in sign within [-3, 3] (negative
// beta is the divided-envelope form).
constexpr Interval kBetaBounds{-3.0, 3.0};

inline OscLayerFit fit_osc_layer(const std::vector<double>& times,
                                 const std::vector<double>& residual,
                                 const FitConfig& cfg, double data_range) {
    if (times.size() < kMinFitPoints)
        throw input_error("residual too short for layer fitting");
    OscLayerFit out;
    double max_abs = 0.0;
    for (double r : residual) max_abs = std::max(max_abs, std::abs(r));
    if (max_abs < 1e-12 * std::max(data_range, 1e-300)) {
        out.no_layer = true;
        return out;
    }

    const double t_first = times.front(), t_last = times.back();
    const Orientation o = detail::infer_orientation(cfg.tc_bounds, t_first, t_last);
    if (o != Orientation::bubble)
        throw std::invalid_argument("layer extraction expects tc after the window");

    detail::BoundMap tc_map = detail::BoundMap::linear(cfg.tc_bounds);
    detail::BoundMap beta_map = detail::BoundMap::linear(kBetaBounds);
    detail::BoundMap omega_map = detail::BoundMap::logarithmic(cfg.omega_bounds);

    auto f = [&](const std::vector<double>& z) {
        double amp;
        return detail::osc_layer_rss(times, residual, tc_map.decode(z[0]),
                                     beta_map.decode(z[1]), omega_map.decode(z[2]),
                                     z[3], amp);
    };

    NelderMeadOptions nm;
    nm.max_iterations = cfg.max_iterations;
    const std::vector<double> coarse{0.25, 0.25, 0.25, 0.8};
    const std::vector<double> fine{0.05, 0.05, 0.05, 0.15};

    const auto starts = detail::make_starts(cfg, o, t_first, t_last);
    const std::uint64_t off = cfg.seed % 1000003 + 1;
    detail::Candidate best;  // the alpha slot holds beta here
    bool any = false;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        const double beta0 =
            kBetaBounds.lo + (kBetaBounds.hi - kBetaBounds.lo) *
                                 detail::halton(si + off, 11);
        std::vector<double> z0{tc_map.encode(starts[si].tc), beta_map.encode(beta0),
                               omega_map.encode(starts[si].omega), starts[si].phi};
        auto r = nelder_mead(f, z0, coarse, nm);
        r = nelder_mead(f, r.x, fine, nm);
        detail::Candidate c{r.fmin, tc_map.decode(r.x[0]), beta_map.decode(r.x[1]),
                            omega_map.decode(r.x[2]), r.x[3]};
        if (std::isfinite(c.rss) && (!any || detail::better(c, best))) {
            best = c;
            any = true;
        }
    }
    if (!any) throw optimization_error("layer fit failed on every start");

    double amp = 0.0;
    out.rss = detail::osc_layer_rss(times, residual, best.tc, best.alpha,
                                    best.omega, best.phi, amp);
    double phi = best.phi;
    if (amp < 0.0) {
        amp = -amp;
        phi += std::numbers::pi;
    }
    out.params = {amp, best.alpha, best.omega, wrap_phase(phi), best.tc};
    return out;
}

// series minus the trend component only: the oscillations the fit sees,
// before any layer subtraction. Distinct from cascade residuals, which
// subtract the full fitted curve.
inline std::vector<double> oscillatory_view(const PriceSeries& series,
                                            const FitResult& fit) {
    if (series.empty()) return {};
    if (series.times.front() < fit.window.lo - 1e-12 ||
        series.times.back() > fit.window.hi + 1e-12)
        throw input_error("fit window does not cover the series");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        out[i] = series.values[i] -
                 model_trend(fit.params, series.times[i], fit.orientation);
    return out;
}

inline CascadeResult run_cascade(const PriceSeries& series, const FitConfig& cfg,
                                 int max_depth, double rss_reduction_floor = 0.05) {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    CascadeResult out;
    out.base_fit = fit(series, cfg);

    const double range = series.value_range();
    std::vector<double> resid = out.base_fit.residuals;
    for (int depth = 1; depth <= max_depth; ++depth) {
        const auto layer_fit = fit_osc_layer(series.times, resid, cfg, range);
        if (layer_fit.no_layer) break;
        double var_in = 0.0;
        for (double r : resid) var_in += r * r;
        const double reduction = var_in > 0.0 ? 1.0 - layer_fit.rss / var_in : 0.0;
        if (reduction <= rss_reduction_floor) break;  // layer discarded

        CascadeLayer layer;
        layer.depth = depth;
        layer.params = layer_fit.params;
        layer.input_residual = resid;
        layer.rss_reduction = reduction;
        layer.output_residual.resize(resid.size());
        for (std::size_t i = 0; i < resid.size(); ++i)
            layer.output_residual[i] =
                resid[i] - layer_value(layer.params, series.times[i]);
        resid = layer.output_residual;
        out.layers.push_back(std::move(layer));
    }

    std::vector<double> tcs{out.base_fit.params.tc};
    for (const auto& l : out.layers) tcs.push_back(l.params.tc);
    for (std::size_t i = 0; i < tcs.size(); ++i)
        for (std::size_t j = i + 1; j < tcs.size(); ++j)
            out.tc_spread = std::max(out.tc_spread, std::abs(tcs[i] - tcs[j]));
    return out;
}

} // namespace lppl

#endif

#ifndef LPPL_FIT_HPP
#define LPPL_FIT_HPP

// Dispersion (sum-of-squared-residuals) fitting of the log-periodic model.
//
// The model is linear in (A, B1 = m, B2 = m*C) once (tc, alpha, omega, phi)
// are fixed, via the basis {1, (tc-t)^alpha, (tc-t)^alpha cos(omega ln(tc-t)
// + phi)}. Those three are therefore solved exactly by least squares at every
// trial point ("slaving"), and a derivative-free simplex search runs over the
// nonlinear four only, from deterministic low-discrepancy multi-starts.
//
// Orientation: a bubble has tc after the data window and uses dt = tc - t; an
// antibubble has tc before the window and uses dt = t - tc (periods then grow
// with time). The orientation is inferred from where tc_bounds sit relative
// to the window.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "lppl/errors.hpp"
#include "lppl/model.hpp"
#include "lppl/nelder_mead.hpp"
#include "lppl/timebase.hpp"

namespace lppl {

enum class Orientation { bubble, antibubble };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

struct FitConfig {
    Interval tc_bounds;                    // must sit beyond the data window
    Interval alpha_bounds{1e-6, 3.0};
    Interval omega_bounds{2.0, 200.0};
    int n_starts = 64;
    int max_iterations = 1500;             // per local simplex search
    std::uint64_t seed = 0;
};

struct SlavedSolution {
    double A = 0.0;
    double m = 0.0;
    double mC = 0.0;
    double rss = std::numeric_limits<double>::infinity();
    bool degenerate = false;  // collinear basis or vanishing trend/oscillation
};

struct FitResult {
    LpplParams params;
    Orientation orientation = Orientation::bubble;
    double rss = 0.0;
    double rmse = 0.0;
    std::size_t n_points = 0;
    Interval window;                 // [t_start, t_end] actually fitted
    int starts_converged = 0;
    std::vector<double> residuals;   // observed - model, aligned to input times
    bool degenerate_basis = false;
    bool quasi_logarithmic = false;  // alpha ~ 0 with huge |A|: log-like trend
};

inline double orientation_sign(Orientation o) {
    return o == Orientation::bubble ? 1.0 : -1.0;
}

// Orientation-aware model evaluation (dt = |tc - t| on the valid side).
inline double model_value(const LpplParams& p, double t, Orientation o) {
    const double dt = (p.tc - t) * orientation_sign(o);
    if (!(dt > 0.0))
        throw std::domain_error("model evaluated at or beyond critical time");
    return p.A + p.m * std::pow(dt, p.alpha) *
                     (1.0 + p.C * std::cos(p.omega * std::log(dt) + p.phi));
}

inline double model_trend(const LpplParams& p, double t, Orientation o) {
    const double dt = (p.tc - t) * orientation_sign(o);
    if (!(dt > 0.0))
        throw std::domain_error("model evaluated at or beyond critical time");
    return p.A + p.m * std::pow(dt, p.alpha);
}

inline double model_oscillation(const LpplParams& p, double t, Orientation o) {
    return model_value(p, t, o) - model_trend(p, t, o);
}

namespace detail {

// radical-inverse (Halton) sequence, bases 2/3/5/7 for the four coordinates
inline double halton(std::uint64_t i, unsigned base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

// Bounded coordinate via a sine map: strictly inside (lo, hi), smooth
// saturation at the bounds so pinned optima remain reachable.
struct BoundMap {
    double lo = 0.0, hi = 1.0;
    bool log_scale = false;

    static BoundMap linear(Interval iv) { return {iv.lo, iv.hi, false}; }
    static BoundMap logarithmic(Interval iv) {
        return {std::log(iv.lo), std::log(iv.hi), true};
    }
    double decode(double z) const {
        const double s = 0.5 * (std::sin(z) + 1.0);
        const double v = lo + (hi - lo) * s;
        return log_scale ? std::exp(v) : v;
    }
    double encode(double x) const {
        const double v = log_scale ? std::log(x) : x;
        double s = (v - lo) / (hi - lo);
        s = std::clamp(s, 1e-12, 1.0 - 1e-12);
        return std::asin(2.0 * s - 1.0);
    }
};

// Slaved linear least squares over the 3-column basis, by modified
// Gram-Schmidt QR (stable in the near-collinear alpha -> 0 regime, where the
// constant and power-law columns almost coincide). Near-dependent columns are
// dropped and flagged instead of failing.
inline SlavedSolution slaved_ls(std::span<const double> t,
                                std::span<const double> y, double sign,
                                double tc, double alpha, double omega,
                                double phi) {
    const std::size_t n = t.size();
    SlavedSolution out;
    std::vector<double> u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = (tc - t[i]) * sign;
        if (!(dt > 0.0)) return out;  // infeasible: rss stays +inf
        const double L = std::log(dt);
        u[i] = std::exp(alpha * L);
        v[i] = u[i] * std::cos(omega * L + phi);
    }

    // columns c0 = 1, c1 = u, c2 = v; orthogonalize in place
    std::vector<double> q0(n, 1.0), q1 = u, q2 = v;
    std::array<std::array<double, 3>, 3> R{};
    bool dropped = false;

    auto norm = [n](const std::vector<double>& a) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
        return std::sqrt(s);
    };
    auto dot = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };

    const double n0 = norm(q0);
    R[0][0] = n0;
    for (auto& x : q0) x /= n0;

    const double scale_u = norm(q1);
    R[0][1] = dot(q0, q1);
    for (std::size_t i = 0; i < n; ++i) q1[i] -= R[0][1] * q0[i];
    R[1][1] = norm(q1);
    bool keep1 = R[1][1] > 1e-10 * std::max(scale_u, 1e-300);
    if (keep1)
        for (auto& x : q1) x /= R[1][1];
    else
        dropped = true;

    const double scale_v = norm(q2);
    R[0][2] = dot(q0, q2);
    for (std::size_t i = 0; i < n; ++i) q2[i] -= R[0][2] * q0[i];
    if (keep1) {
        R[1][2] = dot(q1, q2);
        for (std::size_t i = 0; i < n; ++i) q2[i] -= R[1][2] * q1[i];
    }
    R[2][2] = norm(q2);
    bool keep2 = R[2][2] > 1e-10 * std::max(scale_v, 1e-300);
    if (keep2)
        for (auto& x : q2) x /= R[2][2];
    else
        dropped = true;

    // projections and back-substitution
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        b0 += q0[i] * y[i];
        if (keep1) b1 += q1[i] * y[i];
        if (keep2) b2 += q2[i] * y[i];
    }
    double c2 = keep2 ? b2 / R[2][2] : 0.0;
    double c1 = keep1 ? (b1 - (keep2 ? R[1][2] * c2 : 0.0)) / R[1][1] : 0.0;
    double c0 = (b0 - R[0][1] * c1 - R[0][2] * c2) / R[0][0];

    out.A = c0;
    out.m = c1;
    out.mC = c2;
    double rss = 0.0;
    double ymin = y[0], ymax = y[0];
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (c0 + c1 * u[i] + c2 * v[i]);
        rss += r * r;
        ymin = std::min(ymin, y[i]);
        ymax = std::max(ymax, y[i]);
    }
    out.rss = rss;

    // Degenerate when a basis column had to be dropped, or when the fitted
    // trend and oscillation together contribute nothing beyond a constant
    // (then omega and phi are unidentifiable, as for a constant series).
    const double ref = std::max({ymax - ymin, std::abs(c0), 1e-300});
    const double trend_extent = std::abs(c1) * scale_u / std::sqrt(double(n));
    const double osc_extent = std::abs(c2) * scale_v / std::sqrt(double(n));
    out.degenerate =
        dropped || (trend_extent < 1e-9 * ref && osc_extent < 1e-9 * ref);
    return out;
}

// rss comparison with the documented tie-break: ties within 1e-12 relative
// fall back to lexicographic order on (tc, omega, alpha, phi).
struct Candidate {
    double rss = std::numeric_limits<double>::infinity();
    double tc = 0.0, alpha = 0.0, omega = 0.0, phi = 0.0;
};

inline bool better(const Candidate& a, const Candidate& b) {
    if (!std::isfinite(a.rss)) return false;
    if (!std::isfinite(b.rss)) return true;
    const double tol = 1e-12 * std::max({a.rss, b.rss, 1e-300});
    if (std::abs(a.rss - b.rss) > tol) return a.rss < b.rss;
    const auto ta = std::array{a.tc, a.omega, a.alpha, a.phi};
    const auto tb = std::array{b.tc, b.omega, b.alpha, b.phi};
    return ta < tb;
}

inline Orientation infer_orientation(const Interval& tc_bounds, double t_first,
                                     double t_last) {
    if (!(tc_bounds.lo < tc_bounds.hi))
        throw std::invalid_argument("tc_bounds interval is empty");
    if (tc_bounds.lo > t_last) return Orientation::bubble;
    if (tc_bounds.hi < t_first) return Orientation::antibubble;
    throw std::invalid_argument(
        "tc_bounds must lie entirely after the window (bubble) or before it "
        "(antibubble)");
}

// 40 candidate tc values spanning the bounds, log-dense toward the data edge
// (objective sensitivity concentrates there).
inline std::vector<double> tc_start_grid(const Interval& b, Orientation o,
                                         double t_first, double t_last) {
    constexpr int kGrid = 40;
    const double edge = o == Orientation::bubble ? t_last : t_first;
    const double g_near = std::abs((o == Orientation::bubble ? b.lo : b.hi) - edge);
    const double g_far = std::abs((o == Orientation::bubble ? b.hi : b.lo) - edge);
    std::vector<double> grid(kGrid);
    for (int j = 0; j < kGrid; ++j) {
        const double u = (j + 0.5) / kGrid;
        const double gap = g_far * std::pow(g_near / g_far, u);
        grid[j] = edge + orientation_sign(o) * gap;
    }
    return grid;
}

struct StartPoint {
    double tc, alpha, omega, phi;
};

inline std::vector<StartPoint> make_starts(const FitConfig& cfg, Orientation o,
                                           double t_first, double t_last) {
    const auto grid = tc_start_grid(cfg.tc_bounds, o, t_first, t_last);
    const std::uint64_t off = cfg.seed % 1000003 + 1;
    std::vector<StartPoint> starts;
    starts.reserve(static_cast<std::size_t>(cfg.n_starts));
    const double la_lo = std::log(cfg.alpha_bounds.lo),
                 la_hi = std::log(cfg.alpha_bounds.hi);
    const double lw_lo = std::log(cfg.omega_bounds.lo),
                 lw_hi = std::log(cfg.omega_bounds.hi);
    for (int i = 0; i < cfg.n_starts; ++i) {
        const std::uint64_t k = static_cast<std::uint64_t>(i) + off;
        auto idx = static_cast<std::size_t>(halton(k, 2) * grid.size());
        idx = std::min(idx, grid.size() - 1);
        StartPoint s{};
        s.tc = grid[idx];
        s.alpha = std::exp(la_lo + (la_hi - la_lo) * halton(k, 3));
        s.omega = std::exp(lw_lo + (lw_hi - lw_lo) * halton(k, 5));
        s.phi = 2.0 * std::numbers::pi * halton(k, 7);
        starts.push_back(s);
    }
    return starts;
}

} // namespace detail

// Exact least-squares solution of the linearly entering parameters for fixed
// nonlinear ones, with its rss. Collinearity is flagged, not fatal.
inline SlavedSolution objective(const PriceSeries& series, Orientation o,
                                double tc, double alpha, double omega,
                                double phi) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for fitting (need >= 8 points)");
    for (double t : series.times)
        if (!((tc - t) * orientation_sign(o) > 0.0))
            throw std::domain_error("tc must lie beyond every observation time");
    return detail::slaved_ls(series.times, series.values, orientation_sign(o),
                             tc, alpha, omega, phi);
}

namespace detail {

struct SearchSpace {
    BoundMap tc_map, alpha_map, omega_map;
    bool tc_fixed = false;
    double tc_value = 0.0;
    double sign = 1.0;

    std::size_t dim() const { return tc_fixed ? 3 : 4; }

    Candidate decode(const std::vector<double>& z) const {
        Candidate c;
        std::size_t k = 0;
        c.tc = tc_fixed ? tc_value : tc_map.decode(z[k++]);
        c.alpha = alpha_map.decode(z[k++]);
        c.omega = omega_map.decode(z[k++]);
        c.phi = z[k];
        return c;
    }
    std::vector<double> encode(const StartPoint& s) const {
        std::vector<double> z;
        if (!tc_fixed) z.push_back(tc_map.encode(s.tc));
        z.push_back(alpha_map.encode(s.alpha));
        z.push_back(omega_map.encode(s.omega));
        z.push_back(s.phi);
        return z;
    }
};

inline FitResult run_multistart(const PriceSeries& series, const FitConfig& cfg,
                                const SearchSpace& space,
                                const std::vector<StartPoint>& starts,
                                Orientation orientation) {
    const auto& t = series.times;
    const auto& y = series.values;

    auto f = [&](const std::vector<double>& z) {
        const Candidate c = space.decode(z);
        return slaved_ls(t, y, space.sign, c.tc, c.alpha, c.omega, c.phi).rss;
    };

    NelderMeadOptions nm;
    nm.max_iterations = cfg.max_iterations;
    std::vector<double> coarse_step(space.dim(), 0.25), fine_step(space.dim(), 0.05);
    coarse_step.back() = 0.8;  // phase is unbounded, take larger steps
    fine_step.back() = 0.15;

    Candidate best;
    int converged = 0;
    std::ostringstream diag;
    for (std::size_t si = 0; si < starts.size(); ++si) {
        auto r = nelder_mead(f, space.encode(starts[si]), coarse_step, nm);
        r = nelder_mead(f, r.x, fine_step, nm);  // polish from the optimum
        if (r.converged && std::isfinite(r.fmin)) ++converged;
        Candidate c = space.decode(r.x);
        c.rss = r.fmin;
        if (better(c, best)) best = c;
        if (si < 8)
            diag << "start " << si << ": rss=" << r.fmin
                 << (r.converged ? "" : " (not converged)") << "\n";
    }
    if (!std::isfinite(best.rss) || converged == 0)
        throw optimization_error("no start of the multi-start search converged",
                                 diag.str());

    const auto sol = slaved_ls(t, y, space.sign, best.tc, best.alpha, best.omega,
                               best.phi);
    FitResult out;
    out.params = normalize(LpplParams{sol.A, sol.m, best.alpha,
                                      sol.m != 0.0 ? sol.mC / sol.m : 0.0,
                                      best.omega, best.phi, best.tc});
    out.orientation = orientation;
    out.rss = sol.rss;
    out.n_points = t.size();
    out.rmse = std::sqrt(sol.rss / static_cast<double>(t.size()));
    out.window = {t.front(), t.back()};
    out.starts_converged = converged;
    out.degenerate_basis = sol.degenerate;
    out.quasi_logarithmic =
        best.alpha < 0.01 && std::abs(sol.A) > 100.0 * series.value_range();
    out.residuals.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out.residuals[i] = y[i] - model_value(out.params, t[i], orientation);
    return out;
}

} // namespace detail

// Multi-start fit over (tc, alpha, omega, phi) with linear slaving. Starts
// are drawn deterministically from the seed; identical inputs give a
// bit-identical result (ties broken lexicographically on (tc, omega, alpha,
// phi)).
inline FitResult fit(const PriceSeries& series, const FitConfig& cfg) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for fitting (need >= 8 points)");
    if (cfg.n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
    const double t_first = series.times.front(), t_last = series.times.back();
    const Orientation o = detail::infer_orientation(cfg.tc_bounds, t_first, t_last);

    detail::SearchSpace space;
    space.tc_map = detail::BoundMap::linear(cfg.tc_bounds);
    space.alpha_map = detail::BoundMap::logarithmic(cfg.alpha_bounds);
    space.omega_map = detail::BoundMap::logarithmic(cfg.omega_bounds);
    space.sign = orientation_sign(o);

    const auto starts = detail::make_starts(cfg, o, t_first, t_last);
    return detail::run_multistart(series, cfg, space, starts, o);
}

// Same procedure with tc held fixed (used by the singularity-window scan and
// the antibubble probe). Extra warm starts, when given, are searched in
// addition to the seeded ones.
inline FitResult fit_fixed_tc(const PriceSeries& series, double tc,
                              const FitConfig& cfg,
                              std::span<const LpplParams> warm_starts = {}) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for fitting (need >= 8 points)");
    const double t_first = series.times.front(), t_last = series.times.back();
    Orientation o;
    if (tc > t_last)
        o = Orientation::bubble;
    else if (tc < t_first)
        o = Orientation::antibubble;
    else
        throw std::invalid_argument("fixed tc lies inside the data window");

    detail::SearchSpace space;
    space.tc_fixed = true;
    space.tc_value = tc;
    space.alpha_map = detail::BoundMap::logarithmic(cfg.alpha_bounds);
    space.omega_map = detail::BoundMap::logarithmic(cfg.omega_bounds);
    space.sign = orientation_sign(o);

    FitConfig grid_cfg = cfg;
    grid_cfg.tc_bounds = o == Orientation::bubble
                             ? Interval{t_last + 1e-6, std::max(tc, t_last + 1e-3)}
                             : Interval{std::min(tc, t_first - 1e-3), t_first - 1e-6};
    auto starts = detail::make_starts(grid_cfg, o, t_first, t_last);
    for (const auto& w : warm_starts)
        starts.push_back({tc, w.alpha, w.omega, w.phi});
    return detail::run_multistart(series, cfg, space, starts, o);
}

} // namespace lppl

#endif

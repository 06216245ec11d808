#ifndef LPPL_SYNTH_HPP
#define LPPL_SYNTH_HPP

// Synthetic series generation and a brute-force grid oracle. Both exist to
// check the fit engine from an independent route: the generator is the
// forward model, the oracle an exhaustive slaved-linear evaluation over a
// nonlinear grid with no local refinement.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "lppl/errors.hpp"
#include "lppl/fit.hpp"
#include "lppl/model.hpp"
#include "lppl/timebase.hpp"

namespace lppl {

namespace detail {

// Deterministic gaussian draws: mt19937_64 (bit-specified by the standard)
// plus explicit Box-Muller. std::normal_distribution is implementation
// defined, which would break bit-reproducibility across toolchains.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {  // in (0, 1)
        const double u = (eng_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace detail

enum class NoiseKind { none, gaussian };

struct SynthSpec {
    LpplParams params;
    std::vector<OscLayerParams> layers;
    double start = 0.0;            // decimal years
    double end = 0.0;              // must be < params.tc
    double cadence_days = 1.0;
    bool business_day_gaps = false;  // skip Saturdays/Sundays
    NoiseKind noise = NoiseKind::none;
    double sigma_frac = 0.0;       // gaussian sigma as fraction of clean range
    std::uint64_t seed = 0;
};

inline PriceSeries generate(const SynthSpec& spec) {
    if (!(spec.end < spec.params.tc))
        throw std::invalid_argument("sampling must end before tc");
    if (!(spec.cadence_days > 0.0))
        throw std::invalid_argument("cadence must be positive");
    if (!(spec.start < spec.end))
        throw std::invalid_argument("empty sampling interval");

    PriceSeries s;
    s.source = "synthetic";
    if (spec.business_day_gaps) {
        // walk calendar days, keep Mon-Fri
        CalendarTime c = from_decimal_year(spec.start);
        c.hour = c.minute = 0;
        c.second = 0.0;
        std::int64_t day = detail::days_from_civil(c.year, c.month, c.day);
        const int step = std::max(1, static_cast<int>(spec.cadence_days));
        for (;; day += step) {
            int y, mo, d;
            detail::civil_from_days(day, y, mo, d);
            const double t = to_decimal_year(CalendarTime{y, mo, d, 0, 0, 0.0});
            if (t > spec.end) break;
            if (t + 1e-12 < spec.start) continue;
            const int weekday = static_cast<int>(((day % 7) + 10) % 7);  // 0 = Mon
            if (weekday >= 5) continue;
            s.times.push_back(t);
        }
    } else {
        const double dt = spec.cadence_days / 365.25;
        for (double t = spec.start; t <= spec.end + 1e-12; t += dt)
            s.times.push_back(t);
    }
    if (s.times.empty()) throw std::invalid_argument("no sample times generated");

    s.values.resize(s.times.size());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        double v = evaluate(spec.params, s.times[i]);
        for (const auto& layer : spec.layers) v += layer_value(layer, s.times[i]);
        s.values[i] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (spec.noise == NoiseKind::gaussian && spec.sigma_frac > 0.0) {
        detail::GaussianRng rng(spec.seed);
        const double sigma = spec.sigma_frac * (hi - lo);
        for (auto& v : s.values) v += sigma * rng.gaussian();
    }
    s.scale = Scale::raw;
    return s;
}

// ---------------------------------------------------------------------------
// Exhaustive grid oracle

struct GridResolution {
    int n_tc = 50;
    int n_alpha = 20;
    int n_omega = 50;
    int n_phi = 16;
};

struct GridOptimum {
    LpplParams params;
    double rss = std::numeric_limits<double>::infinity();
};

// Evaluates the slaved-linear rss on every grid node and returns the best.
// Deliberately simple; solves the 3x3 normal equations directly, which also
// keeps the oracle's linear algebra independent of the fit engine's QR.
inline GridOptimum grid_oracle(const PriceSeries& series, const FitConfig& bounds,
                               const GridResolution& res) {
    if (series.size() < kMinFitPoints)
        throw input_error("series too short for the grid oracle");
    if (res.n_tc < 1 || res.n_alpha < 1 || res.n_omega < 1 || res.n_phi < 1)
        throw std::invalid_argument("grid resolution must be positive");
    const double total = double(res.n_tc) * res.n_alpha * res.n_omega * res.n_phi;
    if (total > 1e7) throw std::length_error("grid larger than 1e7 nodes");
    if (!(bounds.tc_bounds.lo < bounds.tc_bounds.hi) ||
        !(bounds.alpha_bounds.lo < bounds.alpha_bounds.hi) ||
        !(bounds.omega_bounds.lo < bounds.omega_bounds.hi))
        throw std::invalid_argument("empty bounds interval");

    const auto& t = series.times;
    const auto& y = series.values;
    const std::size_t n = t.size();
    const Orientation o =
        detail::infer_orientation(bounds.tc_bounds, t.front(), t.back());
    const double sign = orientation_sign(o);

    auto grid_val = [](Interval iv, int k, int nk, bool log_scale) {
        const double u = nk == 1 ? 0.5 : double(k) / (nk - 1);
        if (log_scale)
            return std::exp(std::log(iv.lo) + (std::log(iv.hi) - std::log(iv.lo)) * u);
        return iv.lo + (iv.hi - iv.lo) * u;
    };

    std::vector<double> L(n), u(n), cw(n), sw(n);
    GridOptimum best;
    detail::Candidate best_cand;  // raw grid coordinates, for the tie-break
    double Sy = 0.0, Syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Sy += y[i];
        Syy += y[i] * y[i];
    }

    for (int itc = 0; itc < res.n_tc; ++itc) {
        const double tc = grid_val(bounds.tc_bounds, itc, res.n_tc, false);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double dt = (tc - t[i]) * sign;
            if (!(dt > 0.0)) {
                ok = false;
                break;
            }
            L[i] = std::log(dt);
        }
        if (!ok) continue;
        for (int ia = 0; ia < res.n_alpha; ++ia) {
            const double alpha = grid_val(bounds.alpha_bounds, ia, res.n_alpha, true);
            double Su = 0.0, Suu = 0.0, Syu = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = std::exp(alpha * L[i]);
                Su += u[i];
                Suu += u[i] * u[i];
                Syu += y[i] * u[i];
            }
            for (int iw = 0; iw < res.n_omega; ++iw) {
                const double omega = grid_val(bounds.omega_bounds, iw, res.n_omega, true);
                double Suc = 0.0, Sus = 0.0, Succ = 0.0, Suss = 0.0, Sucs = 0.0,
                       Syc = 0.0, Sys = 0.0, Sc = 0.0, Ss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    cw[i] = std::cos(omega * L[i]);
                    sw[i] = std::sin(omega * L[i]);
                    const double uc = u[i] * cw[i], us = u[i] * sw[i];
                    Sc += uc;
                    Ss += us;
                    Suc += u[i] * uc;
                    Sus += u[i] * us;
                    Succ += uc * uc;
                    Suss += us * us;
                    Sucs += uc * us;
                    Syc += y[i] * uc;
                    Sys += y[i] * us;
                }
                for (int ip = 0; ip < res.n_phi; ++ip) {
                    const double phi =
                        2.0 * std::numbers::pi * (double(ip) / res.n_phi);
                    const double c = std::cos(phi), s2 = std::sin(phi);
                    // v_i = u_i (cw c - sw s)
                    const double Sv = c * Sc - s2 * Ss;
                    const double Suv = c * Suc - s2 * Sus;
                    const double Svv =
                        c * c * Succ + s2 * s2 * Suss - 2.0 * c * s2 * Sucs;
                    const double Syv = c * Syc - s2 * Sys;
                    // normal equations for [1 u v] coefficients
                    const double N = static_cast<double>(n);
                    double M[3][4] = {{N, Su, Sv, Sy},
                                      {Su, Suu, Suv, Syu},
                                      {Sv, Suv, Svv, Syv}};
                    // gaussian elimination with partial pivoting
                    bool singular = false;
                    for (int col = 0; col < 3 && !singular; ++col) {
                        int piv = col;
                        for (int r = col + 1; r < 3; ++r)
                            if (std::abs(M[r][col]) > std::abs(M[piv][col])) piv = r;
                        if (std::abs(M[piv][col]) < 1e-12 * N) {
                            singular = true;
                            break;
                        }
                        if (piv != col)
                            for (int cc = 0; cc < 4; ++cc)
                                std::swap(M[piv][cc], M[col][cc]);
                        for (int r = 0; r < 3; ++r) {
                            if (r == col) continue;
                            const double fct = M[r][col] / M[col][col];
                            for (int cc = col; cc < 4; ++cc) M[r][cc] -= fct * M[col][cc];
                        }
                    }
                    if (singular) continue;
                    const double A = M[0][3] / M[0][0];
                    const double m = M[1][3] / M[1][1];
                    const double mC = M[2][3] / M[2][2];
                    const double rss = Syy - (A * Sy + m * Syu + mC * Syv);
                    detail::Candidate cand{std::max(rss, 0.0), tc, alpha, omega, phi};
                    if (detail::better(cand, best_cand)) {
                        best_cand = cand;
                        best.rss = cand.rss;
                        best.params = normalize(
                            LpplParams{A, m, alpha, m != 0.0 ? mC / m : 0.0, omega,
                                       phi, tc});
                    }
                }
            }
        }
    }
    if (!std::isfinite(best.rss))
        throw optimization_error("grid oracle found no feasible node");
    return best;
}

} // namespace lppl

#endif

#ifndef LPPL_MODEL_HPP
#define LPPL_MODEL_HPP

// Log-periodic power-law model
//
//   p(t) = A + m (tc - t)^alpha [1 + C cos(omega ln(tc - t) + phi)]
//
// defined for t < tc; the law stops applying at the critical time tc.
// Natural logarithm throughout: successive oscillation periods then shrink
// by the factor exp(2*pi/omega).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lppl {

struct LpplParams {
    double A = 0.0;      // asymptote at tc (value units)
    double m = 0.0;      // trend amplitude (value units)
    double alpha = 0.5;  // power-law exponent, > 0
    double C = 0.0;      // relative oscillation amplitude
    double omega = 10.0; // log-frequency, > 0
    double phi = 0.0;    // phase, normalized to [0, 2*pi)
    double tc = 0.0;     // critical (singularity) time, decimal years
};

// One extracted oscillation layer: r(t) = a (tc - t)^beta cos(omega ln(tc - t) + phi).
// beta may be negative (divided-envelope form).
struct OscLayerParams {
    double a = 0.0;
    double beta = 0.0;
    double omega = 10.0;
    double phi = 0.0;
    double tc = 0.0;
};

inline double wrap_phase(double phi) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double p = std::fmod(phi, two_pi);
    if (p < 0.0) p += two_pi;
    return p;
}

// Canonical form: C >= 0 (a sign flip is absorbed into a pi phase shift),
// phi in [0, 2*pi).
inline LpplParams normalize(LpplParams p) {
    if (p.C < 0.0) {
        p.C = -p.C;
        p.phi += std::numbers::pi;
    }
    p.phi = wrap_phase(p.phi);
    return p;
}

// A fit is well formed when alpha > 0, omega > 0 and |C| < 1. Violations are
// flagged by callers, never rejected here.
inline bool well_formed(const LpplParams& p) {
    return p.alpha > 0.0 && p.omega > 0.0 && std::abs(p.C) < 1.0;
}

namespace detail {
inline double time_to_critical(double tc, double t) {
    const double dt = tc - t;
    if (!(dt > 0.0))
        throw std::domain_error("model evaluated at or beyond critical time");
    return dt;
}
} // namespace detail

inline double evaluate(const LpplParams& p, double t) {
    const double dt = detail::time_to_critical(p.tc, t);
    return p.A + p.m * std::pow(dt, p.alpha) *
                     (1.0 + p.C * std::cos(p.omega * std::log(dt) + p.phi));
}

inline double trend_component(const LpplParams& p, double t) {
    const double dt = detail::time_to_critical(p.tc, t);
    return p.A + p.m * std::pow(dt, p.alpha);
}

inline double oscillatory_component(const LpplParams& p, double t) {
    const double dt = detail::time_to_critical(p.tc, t);
    return p.m * p.C * std::pow(dt, p.alpha) *
           std::cos(p.omega * std::log(dt) + p.phi);
}

inline double layer_value(const OscLayerParams& p, double t) {
    const double dt = detail::time_to_critical(p.tc, t);
    return p.a * std::pow(dt, p.beta) * std::cos(p.omega * std::log(dt) + p.phi);
}

// Times of the k-th cosine maxima, t_k = tc - exp((2*pi*k - phi)/omega), for
// k in [k_min, k_max], returned ascending in t. Successive gaps to tc shrink
// by exactly exp(2*pi/omega).
inline std::vector<double> extrema_times(double omega, double phi, double tc,
                                         int k_min, int k_max) {
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    std::vector<double> out;
    if (k_min > k_max) return out;
    out.reserve(static_cast<std::size_t>(k_max - k_min + 1));
    // larger k lies further from tc, so descending k gives ascending t
    for (int k = k_max; k >= k_min; --k)
        out.push_back(tc - std::exp((2.0 * std::numbers::pi * k - phi) / omega));
    return out;
}

// First-form parametrization p_max - C1 (tc-t)^{C3} {1 + C2 cos[C4 ln(tc-t) - phase]}
// mapped onto the canonical second form.
inline LpplParams convert_parametrization(double pmax, double c1, double c2,
                                          double c3, double c4, double phase,
                                          double tc) {
    LpplParams p;
    p.A = pmax;
    p.m = -c1;
    p.alpha = c3;
    p.C = c2;
    p.omega = c4;
    p.phi = wrap_phase(-phase);
    p.tc = tc;
    return p;
}

} // namespace lppl

#endif

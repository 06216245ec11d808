#ifndef LPPL_NELDER_MEAD_HPP
#define LPPL_NELDER_MEAD_HPP

// Derivative-free simplex minimizer. Deterministic: fixed coefficients,
// deterministic initial simplex, no randomized restarts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace lppl {

struct NelderMeadOptions {
    int max_iterations = 1500;
    double ftol_rel = 1e-13;  // relative spread of simplex function values
    double xtol = 1e-10;      // absolute simplex extent per coordinate
};

struct NelderMeadResult {
    std::vector<double> x;
    double fmin = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0,
                             const std::vector<double>& step,
                             const NelderMeadOptions& opt = {}) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<std::size_t> order(n + 1);
    NelderMeadResult res;
    auto sort_simplex = [&] {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        sort_simplex();
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        // convergence on both function spread and simplex extent
        const double fspread = std::abs(fv[worst] - fv[best]);
        double xext = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t d = 0; d < n; ++d)
                xext = std::max(xext, std::abs(pts[i][d] - pts[best][d]));
        if (fspread <= opt.ftol_rel * (std::abs(fv[best]) + 1e-300) ||
            xext <= opt.xtol) {
            res.converged = true;
            break;
        }

        for (std::size_t d = 0; d < n; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i <= n; ++i)
                if (i != worst) s += pts[i][d];
            centroid[d] = s / static_cast<double>(n);
        }

        auto blend = [&](std::vector<double>& out, double coef) {
            for (std::size_t d = 0; d < n; ++d)
                out[d] = centroid[d] + coef * (pts[worst][d] - centroid[d]);
        };

        blend(xr, -1.0);  // reflection
        const double fr = f(xr);
        if (fr < fv[best]) {
            blend(xe, -2.0);  // expansion
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            blend(xc, outside ? -0.5 : 0.5);  // contraction
            const double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                // shrink toward best
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    sort_simplex();
    res.x = pts[order[0]];
    res.fmin = fv[order[0]];
    res.iterations = it;
    return res;
}

} // namespace lppl

#endif

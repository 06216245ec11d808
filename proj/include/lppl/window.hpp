#ifndef LPPL_WINDOW_HPP
#define LPPL_WINDOW_HPP

// Bracketing the critical time with an explicit error window.
//
// In tau = ln(tc - t) coordinates the model oscillation is a pure sinusoid.
// phase_score correlates the data's oscillatory part with the model's over
// the last few log-periods before the window end: +1 in phase, -1 antiphase.
// estimate_window scans tc outward from the unconstrained optimum, refitting
// the other parameters at each step, and places a bound where the tail turns
// anti-correlated - the point past which the refit can no longer keep the
// fast end of the oscillation aligned with the data.

#include <algorithm>
#include <cmath>
#include <vector>

#include "lppl/cascade.hpp"
#include "lppl/errors.hpp"
#include "lppl/fit.hpp"

namespace lppl {

struct WindowParams {
    double scan_step_days = 1.0;
    double threshold = 0.0;     // phase score below this breaks the window
    int tail_periods = 2;       // log-periods scored before the window end
    double max_scan_days = 60;  // open bound beyond this
};

struct ScanPoint {
    double tc = 0.0;
    double rss = 0.0;
    double phase_score = 0.0;
};

enum class WindowCriterion { antiphase, rss_rise };

struct SingularityWindow {
    double tc_low = 0.0;
    double tc_high = 0.0;
    double tc_best = 0.0;
    std::vector<ScanPoint> scan;  // ascending tc
    WindowCriterion criterion = WindowCriterion::antiphase;
    bool open_low = false;   // no breakdown found within the scan range
    bool open_high = false;
};

// Normalized correlation between the data's oscillatory view and the model's
// oscillatory component over the last tail_periods log-periods. min_points =
// 0 keeps the strict contract (error below 6 points); a positive value
// widens the region to the last min_points observations instead, which the
// scan uses so that high-omega fits on daily data stay scoreable.
inline double phase_score(const PriceSeries& series, const FitResult& fit,
                          int tail_periods, std::size_t min_points = 0) {
    if (tail_periods < 1) throw std::invalid_argument("tail_periods must be >= 1");
    const auto& t = series.times;
    const double sign = orientation_sign(fit.orientation);
    const std::size_t n = t.size();
    if (n == 0) throw input_error("empty series");

    // The scored region hugs the end of the window nearest tc (smallest tau,
    // highest oscillation frequency): the last points for a bubble, the first
    // for an antibubble. tau is monotone in i, so the region is contiguous.
    std::vector<double> tau(n);
    for (std::size_t i = 0; i < n; ++i)
        tau[i] = std::log(std::abs((fit.params.tc - t[i]) * sign));
    const bool tail_at_end = fit.orientation == Orientation::bubble;
    const double anchor = tail_at_end ? tau.back() : tau.front();
    const double span = tail_periods * 2.0 * std::numbers::pi / fit.params.omega;

    std::size_t count = 0;
    while (count < n) {
        const std::size_t i = tail_at_end ? n - 1 - count : count;
        if (tau[i] > anchor + span) break;
        ++count;
    }
    if (count < std::max<std::size_t>(6, min_points)) {
        if (min_points == 0)
            throw input_error("fewer than 6 points in the scored tail region");
        count = std::min(n, std::max<std::size_t>(6, min_points));
    }

    double dd = 0.0, mm = 0.0, dm = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = tail_at_end ? n - count + k : k;
        const double d =
            series.values[i] - model_trend(fit.params, t[i], fit.orientation);
        const double m = model_oscillation(fit.params, t[i], fit.orientation);
        dd += d * d;
        mm += m * m;
        dm += d * m;
    }
    const double den = std::sqrt(dd * mm);
    return den > 0.0 ? std::clamp(dm / den, -1.0, 1.0) : 0.0;
}

// Oscillatory view re-indexed by tau = ln(tc - t), ascending tau (time runs
// backward along the output).
struct LogTimeView {
    std::vector<double> tau;
    std::vector<double> value;
};

inline LogTimeView log_time_view(const PriceSeries& series, const FitResult& fit) {
    for (double t : series.times)
        if (!((fit.params.tc - t) * orientation_sign(fit.orientation) > 0.0))
            throw std::domain_error("series extends past the fit's critical time");
    const auto osc = oscillatory_view(series, fit);
    LogTimeView view;
    view.tau.reserve(series.size());
    view.value.reserve(series.size());
    for (std::size_t i = series.size(); i-- > 0;) {
        view.tau.push_back(std::log(
            std::abs((fit.params.tc - series.times[i]) *
                     orientation_sign(fit.orientation))));
        view.value.push_back(osc[i]);
    }
    return view;
}

namespace detail {

constexpr double kDaysPerYear = 365.25;
constexpr std::size_t kScanMinTailPoints = 8;
constexpr double kRssRiseFactor = 4.0;

} // namespace detail

// Scans tc on a day grid outward from the unconstrained optimum, refitting
// (alpha, omega, phi) at each point with warm starts from the neighbouring
// scan point. A bound is the last tc before the phase score drops below the
// threshold (or, failing that first, before the rss exceeds 4x the best
// fit's). Bounds that never break within max_scan_days are flagged open. An
// unbounded window on both sides is a flagged result, not an error.
inline SingularityWindow estimate_window(const PriceSeries& series,
                                         const FitConfig& cfg,
                                         const WindowParams& wp = {}) {
    if (!(wp.scan_step_days > 0.0))
        throw std::invalid_argument("scan step must be positive");
    const FitResult best = fit(series, cfg);

    SingularityWindow win;
    win.tc_best = best.params.tc;
    const double step = wp.scan_step_days / detail::kDaysPerYear;
    const int max_k =
        std::max(1, static_cast<int>(std::lround(wp.max_scan_days / wp.scan_step_days)));

    const double s_best =
        phase_score(series, best, wp.tail_periods, detail::kScanMinTailPoints);
    win.scan.push_back({best.params.tc, best.rss, s_best});
    if (s_best < wp.threshold) {
        // best fit itself fails the criterion: report a degenerate open window
        win.tc_low = win.tc_high = best.params.tc;
        win.open_low = win.open_high = true;
        return win;
    }

    FitConfig scan_cfg = cfg;
    scan_cfg.n_starts = std::max(8, cfg.n_starts / 4);

    bool saw_antiphase = false, saw_rss_rise = false;
    auto scan_side = [&](int dir, double& bound, bool& open,
                         std::vector<ScanPoint>& pts) {
        LpplParams prev = best.params;
        bound = best.params.tc;
        open = true;
        for (int k = 1; k <= max_k; ++k) {
            const double tc = best.params.tc + dir * k * step;
            // the scan cannot cross into the data window
            if (dir < 0 && best.orientation == Orientation::bubble &&
                tc <= series.times.back() + 0.25 * step)
                break;
            if (dir > 0 && best.orientation == Orientation::antibubble &&
                tc >= series.times.front() - 0.25 * step)
                break;
            const LpplParams warm[2] = {prev, best.params};
            const FitResult r = fit_fixed_tc(series, tc, scan_cfg, warm);
            const double s =
                phase_score(series, r, wp.tail_periods, detail::kScanMinTailPoints);
            pts.push_back({tc, r.rss, s});
            prev = r.params;
            if (s < wp.threshold) {
                open = false;
                saw_antiphase = true;
                return;  // bound stays at the previous step
            }
            if (r.rss > detail::kRssRiseFactor * best.rss) {
                open = false;
                saw_rss_rise = true;
                return;
            }
            bound = tc;
        }
    };

    std::vector<ScanPoint> lo_pts, hi_pts;
    scan_side(-1, win.tc_low, win.open_low, lo_pts);
    scan_side(+1, win.tc_high, win.open_high, hi_pts);
    win.criterion = (saw_rss_rise && !saw_antiphase) ? WindowCriterion::rss_rise
                                                     : WindowCriterion::antiphase;

    // assemble ascending in tc: reversed low side, best point, high side
    std::vector<ScanPoint> table(lo_pts.rbegin(), lo_pts.rend());
    table.insert(table.end(), win.scan.begin(), win.scan.end());
    table.insert(table.end(), hi_pts.begin(), hi_pts.end());
    win.scan = std::move(table);
    return win;
}

} // namespace lppl

#endif

#ifndef LPPL_REPORT_HPP
#define LPPL_REPORT_HPP

// Machine-readable run reports. Every report is self-describing: it echoes
// the command and config (seed included) and digests the input, so re-running
// the echoed command on the digested input reproduces the report
// byte-identically. Timings are deliberately kept out of the JSON (they go to
// stderr) so reports from identical runs compare equal.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "lppl/cascade.hpp"
#include "lppl/classify.hpp"
#include "lppl/fit.hpp"
#include "lppl/timebase.hpp"
#include "lppl/window.hpp"

namespace lppl {

using json = nlohmann::ordered_json;

constexpr int kReportSchemaVersion = 1;

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open input file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

// decimal year rendered both ways to keep downstream convention-proof
inline json time_json(double decimal_year) {
    return json{{"decimal_year", decimal_year},
                {"iso", format_iso(from_decimal_year(decimal_year))}};
}

inline json to_json(const LpplParams& p) {
    return json{{"A", p.A},         {"m", p.m},     {"alpha", p.alpha},
                {"C", p.C},         {"omega", p.omega}, {"phi", p.phi},
                {"tc", time_json(p.tc)}};
}

inline json to_json(const FitResult& f) {
    return json{{"params", to_json(f.params)},
                {"orientation",
                 f.orientation == Orientation::bubble ? "bubble" : "antibubble"},
                {"rss", f.rss},
                {"rmse", f.rmse},
                {"n_points", f.n_points},
                {"window", {f.window.lo, f.window.hi}},
                {"starts_converged", f.starts_converged},
                {"degenerate_basis", f.degenerate_basis},
                {"quasi_logarithmic", f.quasi_logarithmic}};
}

inline json to_json(const CascadeResult& c) {
    json layers = json::array();
    for (const auto& l : c.layers)
        layers.push_back(json{{"depth", l.depth},
                              {"a", l.params.a},
                              {"beta", l.params.beta},
                              {"omega", l.params.omega},
                              {"phi", l.params.phi},
                              {"tc", time_json(l.params.tc)},
                              {"rss_reduction", l.rss_reduction}});
    return json{{"base_fit", to_json(c.base_fit)},
                {"layers", layers},
                {"tc_spread_years", c.tc_spread}};
}

inline json to_json(const DegeneracyFlags& f) {
    return json{{"amplitude_below_floor", f.amplitude_below_floor},
                {"alpha_pinned", f.alpha_pinned},
                {"too_few_periods", f.too_few_periods}};
}

inline json to_json(const RegimeVerdict& v) {
    json out{{"label", to_string(v.label)},
             {"evidence",
              json{{"rss_ratio", v.evidence.rss_ratio},
                   {"noise_floor", v.evidence.noise_floor},
                   {"trend_only_rss", v.evidence.trend_only_rss},
                   {"ambiguous", v.evidence.ambiguous},
                   {"bubble_flags", to_json(v.evidence.bubble_flags)},
                   {"antibubble_flags", to_json(v.evidence.antibubble_flags)}}}};
    out["bubble_fit"] = v.bubble_fit ? to_json(*v.bubble_fit) : json(nullptr);
    out["antibubble_fit"] =
        v.antibubble_fit ? to_json(*v.antibubble_fit) : json(nullptr);
    return out;
}

inline json to_json(const AntibubbleProbe& p) {
    return json{{"fit", to_json(p.fit)},
                {"flags", to_json(p.flags)},
                {"extrema_match", p.extrema_match}};
}

inline json to_json(const SingularityWindow& w) {
    json scan = json::array();
    for (const auto& s : w.scan)
        scan.push_back(json{{"tc", s.tc}, {"rss", s.rss}, {"phase_score", s.phase_score}});
    return json{{"tc_low", time_json(w.tc_low)},
                {"tc_high", time_json(w.tc_high)},
                {"tc_best", time_json(w.tc_best)},
                {"criterion",
                 w.criterion == WindowCriterion::antiphase ? "antiphase" : "rss_rise"},
                {"open_low", w.open_low},
                {"open_high", w.open_high},
                {"scan", scan}};
}

// temp-file-then-rename so consumers never observe partial output
inline void write_text_atomic(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw input_error("cannot write output file: " + path);
        out << text;
    }
    fs::rename(tmp, target);
}

} // namespace lppl

#endif

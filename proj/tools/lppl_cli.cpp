// Command-line surface: ingestion, fitting, cascade extraction, regime
// classification, singularity-window estimation and synthetic simulation.
//
// Exit codes: 0 success, 2 input error, 3 optimization failure, 4 flag error.
// All randomness flows from --seed; identical flags and inputs produce
// byte-identical JSON reports. Output files are written atomically.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lppl/cascade.hpp"
#include "lppl/classify.hpp"
#include "lppl/fit.hpp"
#include "lppl/report.hpp"
#include "lppl/synth.hpp"
#include "lppl/timebase.hpp"
#include "lppl/window.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitOptimization = 3;
constexpr int kExitFlags = 4;

using Clock = std::chrono::steady_clock;

struct Stopwatch {
    Clock::time_point t0 = Clock::now();
    double seconds() const {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }
};

lppl::CalendarTime parse_date_flag(const std::string& text, const char* flag) {
    lppl::DateFormat fmt = lppl::DateFormat::unknown;
    const auto c = lppl::parse_date(text, fmt);
    if (!c)
        throw CLI::ValidationError(std::string(flag) +
                                   ": expected YYYY-MM-DD or DD.MM.YYYY");
    return *c;
}

struct InputFlags {
    std::string input;
    std::string date_col = "Date";
    std::string value_col = "Price";
    std::string from, to;
    std::string scale = "raw";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--input", input, "input CSV file")->required();
        cmd->add_option("--date-col", date_col, "date column name");
        cmd->add_option("--value-col", value_col, "value column name");
        cmd->add_option("--from", from, "window start (inclusive date)");
        cmd->add_option("--to", to, "window end (inclusive date)");
        cmd->add_option("--scale", scale, "fit on raw or log price")
            ->check(CLI::IsMember({"raw", "log"}));
    }

    std::string resolve_path() const {
        namespace fs = std::filesystem;
        if (fs::exists(input)) return input;
        if (const char* dir = std::getenv("LPPL_DATA_DIR")) {
            const fs::path candidate = fs::path(dir) / input;
            if (fs::exists(candidate)) return candidate.string();
        }
        return input;  // let ingest report the failure
    }

    lppl::IngestResult load(lppl::json& input_echo) const {
        lppl::IngestOptions opt;
        opt.date_column = date_col;
        opt.value_column = value_col;
        opt.scale = scale == "log" ? lppl::Scale::log : lppl::Scale::raw;
        if (!from.empty()) opt.from = parse_date_flag(from, "--from");
        if (!to.empty()) opt.to = parse_date_flag(to, "--to");
        if (opt.from && opt.to &&
            lppl::to_decimal_year(*opt.to) < lppl::to_decimal_year(*opt.from))
            throw CLI::ValidationError("--to precedes --from");

        const std::string path = resolve_path();
        auto result = lppl::ingest_csv(path, opt);
        input_echo = lppl::json{{"path", path},
                                {"digest", lppl::digest_file(path)},
                                {"n_rows", result.series.size()},
                                {"skipped_rows", result.skipped_rows},
                                {"scale", scale}};
        return result;
    }
};

struct BoundsFlags {
    double tc_min = 0.0, tc_max = 0.0;
    double alpha_min = 1e-6, alpha_max = 3.0;
    double omega_min = 2.0, omega_max = 200.0;
    int starts = 64;
    std::uint64_t seed = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--tc-min", tc_min, "lower tc bound (decimal year)");
        cmd->add_option("--tc-max", tc_max, "upper tc bound (decimal year)");
        cmd->add_option("--alpha-min", alpha_min, "lower exponent bound");
        cmd->add_option("--alpha-max", alpha_max, "upper exponent bound");
        cmd->add_option("--omega-min", omega_min, "lower log-frequency bound");
        cmd->add_option("--omega-max", omega_max, "upper log-frequency bound");
        cmd->add_option("--starts", starts, "multi-start count");
        cmd->add_option("--seed", seed, "seed for the start sequence");
    }

    lppl::FitConfig config(const lppl::PriceSeries& s) const {
        lppl::FitConfig cfg;
        if (tc_min != 0.0 || tc_max != 0.0) {
            cfg.tc_bounds = {tc_min, tc_max};
        } else {
            // default: a bubble-side interval spanning half the window length
            const double span = s.times.back() - s.times.front();
            cfg.tc_bounds = {s.times.back() + 2.0 / 365.25,
                             s.times.back() + 0.5 * span};
        }
        cfg.alpha_bounds = {alpha_min, alpha_max};
        cfg.omega_bounds = {omega_min, omega_max};
        cfg.n_starts = starts;
        cfg.seed = seed;
        return cfg;
    }

    lppl::json echo(const lppl::FitConfig& cfg) const {
        return lppl::json{{"tc_bounds", {cfg.tc_bounds.lo, cfg.tc_bounds.hi}},
                          {"alpha_bounds", {cfg.alpha_bounds.lo, cfg.alpha_bounds.hi}},
                          {"omega_bounds", {cfg.omega_bounds.lo, cfg.omega_bounds.hi}},
                          {"n_starts", cfg.n_starts},
                          {"seed", cfg.seed}};
    }
};

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

void write_report(const std::string& path, const lppl::json& report) {
    if (path.empty()) return;
    lppl::write_text_atomic(path, report.dump(2) + "\n");
}

std::string series_csv_text(const std::vector<double>& t,
                            const std::vector<double>& v) {
    std::ostringstream ss;
    lppl::write_series_csv(ss, t, v);
    return ss.str();
}

lppl::json make_report(const std::string& command, const lppl::json& config,
                       const lppl::json& input, const char* result_kind,
                       const lppl::json& result) {
    return lppl::json{{"schema", lppl::kReportSchemaVersion},
                      {"command", command},
                      {"config", config},
                      {"input", input},
                      {"result_kind", result_kind},
                      {"result", result}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"log-periodic power-law fitting toolkit"};
    app.require_subcommand(1);
    const std::string command = join_args(argc, argv);

    // ---- fit ----
    auto* cmd_fit = app.add_subcommand("fit", "fit the model to a price series");
    InputFlags fit_in;
    BoundsFlags fit_bounds;
    fit_in.add_to(cmd_fit);
    fit_bounds.add_to(cmd_fit);
    std::string fit_json_path, fit_curve_path;
    bool fit_extend = false;
    cmd_fit->add_option("--json", fit_json_path, "write the JSON report here");
    cmd_fit->add_option("--emit-fit-curve", fit_curve_path,
                        "write the fitted curve as a series CSV");
    cmd_fit->add_flag("--extend-to-tc", fit_extend,
                      "extend the emitted curve on a daily grid up to tc - 1 day "
                      "(display only, not a prediction)");

    // ---- cascade ----
    auto* cmd_cascade =
        app.add_subcommand("cascade", "extract superimposed oscillation layers");
    InputFlags cas_in;
    BoundsFlags cas_bounds;
    cas_in.add_to(cmd_cascade);
    cas_bounds.add_to(cmd_cascade);
    int cas_depth = 4;
    double cas_floor = 0.05;
    std::string cas_json_path, cas_residual_path;
    cmd_cascade->add_option("--max-depth", cas_depth, "maximum layer count");
    cmd_cascade->add_option("--floor", cas_floor,
                            "minimum rss reduction for an accepted layer");
    cmd_cascade->add_option("--json", cas_json_path, "write the JSON report here");
    cmd_cascade->add_option("--emit-residual", cas_residual_path,
                            "write the final residual as a series CSV");

    // ---- classify ----
    auto* cmd_classify =
        app.add_subcommand("classify", "negative/positive bubble vs antibubble");
    InputFlags cls_in;
    BoundsFlags cls_bounds;
    cls_in.add_to(cmd_classify);
    cls_bounds.add_to(cmd_classify);
    std::string cls_probe_tc, cls_json_path;
    cmd_classify->add_option("--probe-tc", cls_probe_tc,
                             "also run the fixed-tc antibubble probe at this date");
    cmd_classify->add_option("--json", cls_json_path, "write the JSON report here");

    // ---- window ----
    auto* cmd_window =
        app.add_subcommand("window", "bracket tc with an error window");
    InputFlags win_in;
    BoundsFlags win_bounds;
    win_in.add_to(cmd_window);
    win_bounds.add_to(cmd_window);
    lppl::WindowParams wp;
    std::string win_json_path, win_scan_path;
    cmd_window->add_option("--scan-step-days", wp.scan_step_days, "scan step");
    cmd_window->add_option("--threshold", wp.threshold,
                           "phase-score breakdown threshold");
    cmd_window->add_option("--tail-periods", wp.tail_periods,
                           "log-periods scored at the window end");
    cmd_window->add_option("--max-scan-days", wp.max_scan_days,
                           "scan range before a bound is declared open");
    cmd_window->add_option("--json", win_json_path, "write the JSON report here");
    cmd_window->add_option("--emit-scan", win_scan_path,
                           "write the scan table as CSV (t_c,rss,phase_score)");

    // ---- simulate ----
    auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic series");
    lppl::SynthSpec spec;
    spec.params = {10.0, 5.0, 0.5, 0.2, 9.0, 1.0, 2020.0};
    std::string sim_from, sim_to, sim_out;
    std::vector<std::string> sim_layers;
    double sim_sigma = 0.0;
    cmd_sim->add_option("--A", spec.params.A, "asymptote at tc");
    cmd_sim->add_option("--m", spec.params.m, "trend amplitude");
    cmd_sim->add_option("--alpha", spec.params.alpha, "power-law exponent");
    cmd_sim->add_option("--C", spec.params.C, "relative oscillation amplitude");
    cmd_sim->add_option("--omega", spec.params.omega, "log-frequency");
    cmd_sim->add_option("--phi", spec.params.phi, "phase");
    cmd_sim->add_option("--tc", spec.params.tc, "critical time (decimal year)");
    cmd_sim->add_option("--layer", sim_layers,
                        "extra oscillation layer as a,beta,omega,phi,tc");
    cmd_sim->add_option("--from", sim_from, "first sample date")->required();
    cmd_sim->add_option("--to", sim_to, "last sample date")->required();
    cmd_sim->add_option("--cadence-days", spec.cadence_days, "sample spacing");
    cmd_sim->add_flag("--business-days", spec.business_day_gaps,
                      "skip Saturdays and Sundays");
    cmd_sim->add_option("--noise-sigma-frac", sim_sigma,
                        "gaussian sigma as a fraction of the clean range");
    cmd_sim->add_option("--seed", spec.seed, "noise seed");
    cmd_sim->add_option("--out", sim_out, "output series CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitFlags;
    }

    try {
        Stopwatch total;
        if (cmd_fit->parsed()) {
            lppl::json input_echo;
            const auto ingest = fit_in.load(input_echo);
            const auto cfg = fit_bounds.config(ingest.series);
            Stopwatch sw;
            const auto result = lppl::fit(ingest.series, cfg);
            std::cerr << "fit: " << sw.seconds() << " s\n";

            lppl::json rj = lppl::to_json(result);
            if (!fit_curve_path.empty()) {
                std::vector<double> ts, vs;
                const double t_end = fit_extend
                                         ? result.params.tc - 1.0 / 365.25
                                         : ingest.series.times.back();
                for (double t = ingest.series.times.front(); t <= t_end + 1e-12;
                     t += 1.0 / 365.25) {
                    ts.push_back(t);
                    vs.push_back(lppl::model_value(result.params, t,
                                                   result.orientation));
                }
                lppl::write_text_atomic(fit_curve_path, series_csv_text(ts, vs));
                rj["fit_curve"] = lppl::json{{"path", fit_curve_path},
                                             {"extended_to_tc", fit_extend},
                                             {"predictive", false}};
            }
            write_report(fit_json_path, make_report(command, fit_bounds.echo(cfg),
                                                    input_echo, "fit", rj));
            std::cout << "tc = " << result.params.tc << " ("
                      << lppl::format_iso(lppl::from_decimal_year(result.params.tc))
                      << "), rss = " << result.rss << "\n";
        } else if (cmd_cascade->parsed()) {
            lppl::json input_echo;
            const auto ingest = cas_in.load(input_echo);
            const auto cfg = cas_bounds.config(ingest.series);
            Stopwatch sw;
            const auto result = lppl::run_cascade(ingest.series, cfg, cas_depth,
                                                  cas_floor);
            std::cerr << "cascade: " << sw.seconds() << " s\n";
            if (!cas_residual_path.empty()) {
                const auto& resid = result.layers.empty()
                                        ? result.base_fit.residuals
                                        : result.layers.back().output_residual;
                lppl::write_text_atomic(
                    cas_residual_path, series_csv_text(ingest.series.times, resid));
            }
            lppl::json cj = lppl::to_json(result);
            lppl::json config = cas_bounds.echo(cfg);
            config["max_depth"] = cas_depth;
            config["rss_reduction_floor"] = cas_floor;
            write_report(cas_json_path,
                         make_report(command, config, input_echo, "cascade", cj));
            std::cout << "layers = " << result.layers.size()
                      << ", tc_spread = " << result.tc_spread << " yr\n";
        } else if (cmd_classify->parsed()) {
            lppl::json input_echo;
            const auto ingest = cls_in.load(input_echo);
            const auto cfg = cls_bounds.config(ingest.series);
            Stopwatch sw;
            const auto verdict = lppl::classify(ingest.series, cfg);
            lppl::json vj = lppl::to_json(verdict);
            if (!cls_probe_tc.empty()) {
                // accepts a calendar date or a bare decimal year
                lppl::DateFormat fmt = lppl::DateFormat::unknown;
                const auto as_date = lppl::parse_date(cls_probe_tc, fmt);
                const double tc = as_date ? lppl::to_decimal_year(*as_date)
                                          : std::stod(cls_probe_tc);
                vj["antibubble_probe"] =
                    lppl::to_json(lppl::antibubble_probe(ingest.series, tc, cfg));
            }
            std::cerr << "classify: " << sw.seconds() << " s\n";
            write_report(cls_json_path, make_report(command, cls_bounds.echo(cfg),
                                                    input_echo, "classify", vj));
            std::cout << "label = " << lppl::to_string(verdict.label) << "\n";
        } else if (cmd_window->parsed()) {
            lppl::json input_echo;
            const auto ingest = win_in.load(input_echo);
            const auto cfg = win_bounds.config(ingest.series);
            Stopwatch sw;
            const auto win = lppl::estimate_window(ingest.series, cfg, wp);
            std::cerr << "window: " << sw.seconds() << " s\n";
            if (!win_scan_path.empty()) {
                std::ostringstream ss;
                ss << "t_c,rss,phase_score\n";
                char buf[96];
                for (const auto& p : win.scan) {
                    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.tc, p.rss,
                                  p.phase_score);
                    ss << buf;
                }
                lppl::write_text_atomic(win_scan_path, ss.str());
            }
            lppl::json config = win_bounds.echo(cfg);
            config["scan_step_days"] = wp.scan_step_days;
            config["threshold"] = wp.threshold;
            config["tail_periods"] = wp.tail_periods;
            config["max_scan_days"] = wp.max_scan_days;
            write_report(win_json_path, make_report(command, config, input_echo,
                                                    "window", lppl::to_json(win)));
            std::cout << "window = [" << win.tc_low << ", " << win.tc_high
                      << "] around tc_best = " << win.tc_best << "\n";
        } else if (cmd_sim->parsed()) {
            spec.start = lppl::to_decimal_year(parse_date_flag(sim_from, "--from"));
            spec.end = lppl::to_decimal_year(parse_date_flag(sim_to, "--to"));
            if (spec.end < spec.start)
                throw CLI::ValidationError("--to precedes --from");
            for (const auto& text : sim_layers) {
                lppl::OscLayerParams lp;
                if (std::sscanf(text.c_str(), "%lf,%lf,%lf,%lf,%lf", &lp.a,
                                &lp.beta, &lp.omega, &lp.phi, &lp.tc) != 5)
                    throw CLI::ValidationError("--layer expects a,beta,omega,phi,tc");
                spec.layers.push_back(lp);
            }
            if (sim_sigma > 0.0) {
                spec.noise = lppl::NoiseKind::gaussian;
                spec.sigma_frac = sim_sigma;
            }
            const auto series = lppl::generate(spec);
            lppl::write_text_atomic(sim_out,
                                    series_csv_text(series.times, series.values));
            std::cout << "wrote " << series.size() << " samples to " << sim_out
                      << "\n";
        }
        std::cerr << "total: " << total.seconds() << " s\n";
        return kExitOk;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlags;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFlags;
    } catch (const lppl::optimization_error& e) {
        std::cerr << "error: " << e.what() << "\n" << e.diagnostics;
        return kExitOptimization;
    } catch (const lppl::input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}

#ifndef LPPL_TIMEBASE_HPP
#define LPPL_TIMEBASE_HPP

// Calendar <-> decimal-year conversion and price-series ingestion.
//
// Decimal-year convention: year + (seconds since Jan 1 00:00 UTC of that
// year) / (seconds in that calendar year). Leap years use their true length,
// so the mapping is strictly monotone and exactly invertible.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lppl/errors.hpp"

namespace lppl {

constexpr int kMinYear = 1800;
constexpr int kMaxYear = 2200;

struct CalendarTime {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31
    int hour = 0;
    int minute = 0;
    double second = 0.0;
};

inline bool is_leap_year(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

inline int days_in_month(int y, int m) {
    static const int d[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap_year(y)) return 29;
    return d[m - 1];
}

namespace detail {

// Howard Hinnant's civil-date algorithm: days since 1970-01-01.
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

inline double seconds_in_year(int y) {
    return is_leap_year(y) ? 366.0 * 86400.0 : 365.0 * 86400.0;
}

inline double seconds_since_year_start(const CalendarTime& c) {
    const std::int64_t day = days_from_civil(c.year, c.month, c.day) -
                             days_from_civil(c.year, 1, 1);
    return static_cast<double>(day) * 86400.0 + c.hour * 3600.0 +
           c.minute * 60.0 + c.second;
}

} // namespace detail

inline void validate_calendar(const CalendarTime& c) {
    if (c.year < kMinYear || c.year > kMaxYear)
        throw std::range_error("instant outside supported years 1800-2200");
    if (c.month < 1 || c.month > 12 || c.day < 1 ||
        c.day > days_in_month(c.year, c.month) || c.hour < 0 || c.hour > 23 ||
        c.minute < 0 || c.minute > 59 || c.second < 0.0 || c.second >= 60.0)
        throw std::range_error("invalid calendar instant");
}

inline double to_decimal_year(const CalendarTime& c) {
    validate_calendar(c);
    return static_cast<double>(c.year) +
           detail::seconds_since_year_start(c) / detail::seconds_in_year(c.year);
}

inline CalendarTime from_decimal_year(double t) {
    if (!(t >= kMinYear && t < kMaxYear + 1))
        throw std::range_error("decimal year outside supported range 1800-2200");
    int y = static_cast<int>(std::floor(t));
    double secs = (t - y) * detail::seconds_in_year(y);
    // A decimal year carries ~1e-5 s of representation error over a year, so
    // values meant to be exact second boundaries can land a hair before them.
    // Snap to the nearest whole second when within 5 ms.
    const double snapped = std::round(secs);
    if (std::abs(secs - snapped) < 5e-3) secs = snapped;
    if (secs >= detail::seconds_in_year(y)) {
        ++y;
        secs = 0.0;
    }
    const std::int64_t day = static_cast<std::int64_t>(std::floor(secs / 86400.0));
    double rem = secs - static_cast<double>(day) * 86400.0;
    CalendarTime c;
    detail::civil_from_days(detail::days_from_civil(y, 1, 1) + day,
                            c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600.0);
    rem -= c.hour * 3600.0;
    c.minute = static_cast<int>(rem / 60.0);
    c.second = rem - c.minute * 60.0;
    return c;
}

struct TimePoint {
    double decimal_year = 0.0;
    CalendarTime calendar;
};

inline TimePoint make_time_point(const CalendarTime& c) {
    return TimePoint{to_decimal_year(c), c};
}

// ---------------------------------------------------------------------------
// Price series

enum class Scale { raw, log };

struct PriceSeries {
    std::vector<double> times;   // decimal years, strictly increasing
    std::vector<double> values;  // price (raw) or natural-log price
    Scale scale = Scale::raw;
    std::string source;

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
    double value_range() const {
        if (empty()) return 0.0;
        auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        return *hi - *lo;
    }
};

// All fitting requires at least this many observations.
constexpr std::size_t kMinFitPoints = 8;

inline void validate_series(const PriceSeries& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.values[i]) || !std::isfinite(s.times[i]))
            throw input_error("non-finite entry in price series");
        if (i > 0 && !(s.times[i] > s.times[i - 1]))
            throw input_error("series times not strictly increasing");
        if (s.scale == Scale::raw && !(s.values[i] > 0.0))
            throw input_error("raw-scale series contains non-positive value");
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion

enum class DateFormat { unknown, iso, dotted };

// Accepts "YYYY-MM-DD[ hh:mm[:ss]]" (iso) or "DD.MM.YYYY" (dotted).
inline std::optional<CalendarTime> parse_date(const std::string& text,
                                              DateFormat& fmt) {
    CalendarTime c;
    auto all_digits = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char ch) {
                   return std::isdigit(ch);
               });
    };
    std::string str = text;
    // strip surrounding whitespace
    const auto b = str.find_first_not_of(" \t\r");
    const auto e = str.find_last_not_of(" \t\r");
    if (b == std::string::npos) return std::nullopt;
    str = str.substr(b, e - b + 1);

    DateFormat this_fmt = DateFormat::unknown;
    if (str.size() >= 10 && str[4] == '-' && str[7] == '-') {
        this_fmt = DateFormat::iso;
        if (!all_digits(str.substr(0, 4)) || !all_digits(str.substr(5, 2)) ||
            !all_digits(str.substr(8, 2)))
            return std::nullopt;
        c.year = std::stoi(str.substr(0, 4));
        c.month = std::stoi(str.substr(5, 2));
        c.day = std::stoi(str.substr(8, 2));
        if (str.size() > 10) {  // optional time part
            std::string rest = str.substr(10);
            int h = 0, mi = 0;
            double sec = 0.0;
            if (std::sscanf(rest.c_str(), " %d:%d:%lf", &h, &mi, &sec) >= 2) {
                c.hour = h;
                c.minute = mi;
                c.second = sec;
            } else {
                return std::nullopt;
            }
        }
    } else if (str.size() == 10 && str[2] == '.' && str[5] == '.') {
        this_fmt = DateFormat::dotted;
        if (!all_digits(str.substr(0, 2)) || !all_digits(str.substr(3, 2)) ||
            !all_digits(str.substr(6, 4)))
            return std::nullopt;
        c.day = std::stoi(str.substr(0, 2));
        c.month = std::stoi(str.substr(3, 2));
        c.year = std::stoi(str.substr(6, 4));
    } else {
        return std::nullopt;
    }
    if (fmt == DateFormat::unknown)
        fmt = this_fmt;
    else if (fmt != this_fmt)
        throw input_error("mixed date formats within one file");
    try {
        validate_calendar(c);
    } catch (const std::range_error&) {
        return std::nullopt;
    }
    return c;
}

struct IngestOptions {
    std::string date_column = "Date";
    std::string value_column = "Price";
    std::optional<CalendarTime> from;  // inclusive window, optional
    std::optional<CalendarTime> to;
    Scale scale = Scale::raw;
};

struct IngestResult {
    PriceSeries series;
    std::size_t skipped_rows = 0;  // rows with missing/non-numeric values
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

} // namespace detail

inline IngestResult ingest_csv(const std::string& path, const IngestOptions& opt) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open input file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw input_error("empty input file: " + path);
    const auto header = detail::split_csv_line(line);
    std::ptrdiff_t date_idx = -1, value_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == opt.date_column) date_idx = static_cast<std::ptrdiff_t>(i);
        if (header[i] == opt.value_column) value_idx = static_cast<std::ptrdiff_t>(i);
    }
    if (date_idx < 0 || value_idx < 0)
        throw input_error("columns '" + opt.date_column + "'/'" +
                          opt.value_column + "' not found in header of " + path);

    const double t_from = opt.from ? to_decimal_year(*opt.from)
                                   : -std::numeric_limits<double>::infinity();
    const double t_to = opt.to ? to_decimal_year(*opt.to)
                               : std::numeric_limits<double>::infinity();

    DateFormat fmt = DateFormat::unknown;
    std::vector<std::pair<double, double>> rows;
    IngestResult result;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (static_cast<std::size_t>(date_idx) >= cells.size() ||
            static_cast<std::size_t>(value_idx) >= cells.size()) {
            ++result.skipped_rows;
            continue;
        }
        const auto date = parse_date(cells[date_idx], fmt);
        if (!date) {
            ++result.skipped_rows;
            continue;
        }
        const double t = to_decimal_year(*date);
        if (t < t_from || t > t_to) continue;

        const std::string& vs = cells[value_idx];
        char* end = nullptr;
        const double v = std::strtod(vs.c_str(), &end);
        const bool numeric =
            end != vs.c_str() &&
            std::all_of(static_cast<const char*>(end), vs.c_str() + vs.size(),
                        [](char ch) {
                            return std::isspace(static_cast<unsigned char>(ch));
                        });
        if (!numeric || !std::isfinite(v)) {
            ++result.skipped_rows;
            continue;
        }
        double value = v;
        if (opt.scale == Scale::log) {
            if (!(v > 0.0))
                throw input_error("non-positive value under log scale at line " +
                                  std::to_string(line_no));
            value = std::log(v);
        }
        rows.emplace_back(t, value);
    }
    if (rows.empty()) throw input_error("no parseable rows in " + path);

    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first == rows[i - 1].first)
            throw input_error("duplicate date rows in " + path);

    result.series.scale = opt.scale;
    result.series.source = path;
    result.series.times.reserve(rows.size());
    result.series.values.reserve(rows.size());
    for (const auto& [t, v] : rows) {
        result.series.times.push_back(t);
        result.series.values.push_back(v);
    }
    validate_series(result.series);
    return result;
}

// Standard series emission: header "decimal_year,value", 9 significant digits.
inline void write_series_csv(std::ostream& out, const std::vector<double>& times,
                             const std::vector<double>& values) {
    out << "decimal_year,value\n";
    char buf[64];
    for (std::size_t i = 0; i < times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", times[i], values[i]);
        out << buf;
    }
}

inline std::string format_iso(const CalendarTime& c) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%06.3fZ", c.year,
                  c.month, c.day, c.hour, c.minute, c.second);
    return buf;
}

} // namespace lppl

#endif

#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kobound/calibrate.hpp"
#include "kobound/errors.hpp"
#include "kobound/models.hpp"

namespace kobound {

inline constexpr const char* kSweepCsvHeader =
    "arch,h,v,b,n,seed,lambda,train_err,val_err,test_err,metric,fit_wall_ms,error_flag";
inline constexpr const char* kCalibrationCsvHeader = "arch,h,metric,floor,sigma,n_points,warning";

namespace detail {

/// %.17g: enough digits for a lossless double round trip.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_ms(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

inline double parse_double(const std::string& s, long line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError("bad number '" + s + "'", line);
    return v;
}

inline long long parse_int(const std::string& s, long line) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw ParseError("bad integer '" + s + "'", line);
    return v;
}

/// Flags travel in a CSV field, so commas and newlines become ';' / ' '.
inline std::string sanitize_flag(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    out << kSweepCsvHeader << '\n';
    for (const SweepRecord& r : records) {
        out << to_string(r.arch) << ',' << r.h << ',' << r.v << ',' << r.b << ',' << r.n << ','
            << r.seed << ',' << detail::fmt_double(r.lambda) << ','
            << detail::fmt_double(r.train_err) << ',' << detail::fmt_double(r.val_err) << ','
            << detail::fmt_double(r.test_err) << ',' << to_string(r.metric) << ','
            << detail::fmt_ms(r.fit_wall_ms) << ',' << detail::sanitize_flag(r.error_flag) << '\n';
    }
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records) {
    std::ofstream out(path);
    if (!out) throw InputError("write_sweep_csv: cannot open " + path);
    write_sweep_csv(out, records);
}

inline std::vector<SweepRecord> read_sweep_csv(std::istream& in) {
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty sweep CSV", 1);
    ++line_no;
    if (line != kSweepCsvHeader)
        throw ParseError("unexpected sweep CSV header '" + line + "'", line_no);

    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 13) throw ParseError("expected 13 fields", line_no);
        SweepRecord r;
        r.arch = arch_from_string(f[0]);
        r.h = static_cast<int>(detail::parse_int(f[1], line_no));
        r.v = static_cast<int>(detail::parse_int(f[2], line_no));
        r.b = static_cast<int>(detail::parse_int(f[3], line_no));
        r.n = detail::parse_int(f[4], line_no);
        r.seed = detail::parse_int(f[5], line_no);
        r.lambda = detail::parse_double(f[6], line_no);
        r.train_err = detail::parse_double(f[7], line_no);
        r.val_err = detail::parse_double(f[8], line_no);
        r.test_err = detail::parse_double(f[9], line_no);
        r.metric = metric_from_string(f[10]);
        r.fit_wall_ms = detail::parse_double(f[11], line_no);
        r.error_flag = f[12];
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<SweepRecord> read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("read_sweep_csv: cannot open " + path);
    return read_sweep_csv(in);
}

inline void write_calibration_csv(std::ostream& out, const std::vector<CalibrationFit>& fits) {
    out << kCalibrationCsvHeader << '\n';
    for (const CalibrationFit& f : fits) {
        out << to_string(f.arch) << ',' << f.h << ',' << to_string(f.metric) << ','
            << detail::fmt_double(f.floor) << ',' << detail::fmt_double(f.sigma) << ','
            << f.n_points << ',' << detail::sanitize_flag(f.warning) << '\n';
    }
}

inline void write_calibration_csv(const std::string& path, const std::vector<CalibrationFit>& fits) {
    std::ofstream out(path);
    if (!out) throw InputError("write_calibration_csv: cannot open " + path);
    write_calibration_csv(out, fits);
}

inline std::vector<CalibrationFit> read_calibration_csv(std::istream& in) {
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty calibration CSV", 1);
    ++line_no;
    if (line != kCalibrationCsvHeader)
        throw ParseError("unexpected calibration CSV header '" + line + "'", line_no);

    std::vector<CalibrationFit> fits;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 7) throw ParseError("expected 7 fields", line_no);
        CalibrationFit fit;
        fit.arch = arch_from_string(f[0]);
        fit.h = static_cast<int>(detail::parse_int(f[1], line_no));
        fit.metric = metric_from_string(f[2]);
        fit.floor = detail::parse_double(f[3], line_no);
        fit.sigma = detail::parse_double(f[4], line_no);
        fit.n_points = static_cast<int>(detail::parse_int(f[5], line_no));
        fit.warning = f[6];
        fits.push_back(std::move(fit));
    }
    return fits;
}

inline std::vector<CalibrationFit> read_calibration_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("read_calibration_csv: cannot open " + path);
    return read_calibration_csv(in);
}

}  // namespace kobound

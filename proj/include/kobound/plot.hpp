#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "kobound/calibrate.hpp"
#include "kobound/csv.hpp"
#include "kobound/errors.hpp"

namespace kobound {

/// One architecture's curve in a panel: per-N seed mean with min/max band,
/// plus the calibrated bound evaluated at the same N.
struct SweepCurve {
    Arch arch = Arch::ko;
    std::vector<long long> n;
    std::vector<double> mean, lo, hi;
    std::vector<double> bound;
};

struct PlotPanel {
    int h = 0;
    Metric metric = Metric::mse;
    std::vector<SweepCurve> curves;
};

struct PlotData {
    std::vector<PlotPanel> panels;
};

/// Aggregates sweep records into per-(h, arch) curves and attaches bound
/// values from the matching calibration rows. Throws when records and fits
/// do not cover each other.
inline PlotData build_plot_data(const std::vector<SweepRecord>& records,
                                const std::vector<CalibrationFit>& fits) {
    if (records.empty()) throw InputError("build_plot_data: no sweep records");

    struct Agg {
        double sum = 0.0, lo = 0.0, hi = 0.0;
        int count = 0;
    };
    std::map<int, std::map<Arch, std::map<long long, Agg>>> grouped;
    std::map<int, Metric> panel_metric;
    for (const SweepRecord& r : records) {
        if (!r.error_flag.empty()) continue;
        auto& agg = grouped[r.h][r.arch][r.n];
        if (agg.count == 0) {
            agg.lo = agg.hi = r.test_err;
        } else {
            agg.lo = std::min(agg.lo, r.test_err);
            agg.hi = std::max(agg.hi, r.test_err);
        }
        agg.sum += r.test_err;
        ++agg.count;
        panel_metric[r.h] = r.metric;
    }
    if (grouped.empty()) throw InputError("build_plot_data: every record is error-flagged");

    const auto find_fit = [&](Arch arch, int h, Metric metric) -> const CalibrationFit& {
        for (const CalibrationFit& f : fits)
            if (f.arch == arch && f.h == h && f.metric == metric) return f;
        throw InputError("build_plot_data: no calibration row for " + to_string(arch) + ", h=" +
                         std::to_string(h) + " (mismatched files?)");
    };

    PlotData data;
    for (const auto& [h, by_arch] : grouped) {
        PlotPanel panel;
        panel.h = h;
        panel.metric = panel_metric[h];
        for (const auto& [arch, by_n] : by_arch) {
            SweepCurve curve;
            curve.arch = arch;
            const CalibrationFit& fit = find_fit(arch, h, panel.metric);
            for (const auto& [n, agg] : by_n) {
                curve.n.push_back(n);
                curve.mean.push_back(agg.sum / agg.count);
                curve.lo.push_back(agg.lo);
                curve.hi.push_back(agg.hi);
                curve.bound.push_back(calibrated_bound(fit, static_cast<double>(n)));
            }
            panel.curves.push_back(std::move(curve));
        }
        data.panels.push_back(std::move(panel));
    }
    return data;
}

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline const char* arch_color(Arch a) { return a == Arch::ko ? "#1f77b4" : "#d62728"; }

}  // namespace detail

/// Self-contained SVG: one log-log panel per scale, solid seed-mean lines
/// with min/max bands and dashed calibrated-bound lines.
inline std::string render_sweep_svg(const PlotData& data) {
    if (data.panels.empty()) throw InputError("render_sweep_svg: nothing to plot");
    const double panel_w = 320, panel_h = 280, margin_l = 64, margin_r = 24, margin_t = 42,
                 margin_b = 52, gap = 34;
    const double width = margin_l + data.panels.size() * (panel_w + gap) - gap + margin_r;
    const double height = margin_t + panel_h + margin_b;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<style>text{font-family:sans-serif;font-size:12px}.title{font-size:14px}</style>\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t p = 0; p < data.panels.size(); ++p) {
        const PlotPanel& panel = data.panels[p];
        const double x0 = margin_l + p * (panel_w + gap);
        const double y0 = margin_t;

        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        double n_lo = std::numeric_limits<double>::infinity(), n_hi = 0.0;
        for (const SweepCurve& c : panel.curves) {
            for (double v : c.lo) lo = std::min(lo, v);
            for (double v : c.hi) hi = std::max(hi, v);
            for (double v : c.bound) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            for (long long n : c.n) {
                n_lo = std::min(n_lo, static_cast<double>(n));
                n_hi = std::max(n_hi, static_cast<double>(n));
            }
        }
        lo = std::max(lo, 1e-300);
        const double ly0 = std::log10(lo) - 0.08, ly1 = std::log10(hi) + 0.08;
        const double lx0 = std::log10(n_lo) - 0.04, lx1 = std::log10(n_hi) + 0.04;
        const auto sx = [&](double n) {
            return x0 + (std::log10(n) - lx0) / (lx1 - lx0) * panel_w;
        };
        const auto sy = [&](double v) {
            return y0 + panel_h - (std::log10(std::max(v, 1e-300)) - ly0) / (ly1 - ly0) * panel_h;
        };

        svg << "<rect x=\"" << detail::fmt2(x0) << "\" y=\"" << detail::fmt2(y0) << "\" width=\""
            << panel_w << "\" height=\"" << panel_h
            << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        svg << "<text class=\"title\" x=\"" << detail::fmt2(x0 + panel_w / 2) << "\" y=\""
            << detail::fmt2(y0 - 14) << "\" text-anchor=\"middle\">H = " << panel.h
            << "</text>\n";

        // y ticks at powers of ten
        for (int e = static_cast<int>(std::ceil(ly0)); e <= static_cast<int>(std::floor(ly1)); ++e) {
            const double y = sy(std::pow(10.0, e));
            svg << "<line x1=\"" << detail::fmt2(x0) << "\" y1=\"" << detail::fmt2(y) << "\" x2=\""
                << detail::fmt2(x0 + panel_w) << "\" y2=\"" << detail::fmt2(y)
                << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n"
                << "<text x=\"" << detail::fmt2(x0 - 6) << "\" y=\"" << detail::fmt2(y + 4)
                << "\" text-anchor=\"end\">1e" << e << "</text>\n";
        }
        // x ticks at the swept N values (first curve carries them all)
        if (!panel.curves.empty())
            for (long long n : panel.curves.front().n) {
                const double x = sx(static_cast<double>(n));
                svg << "<line x1=\"" << detail::fmt2(x) << "\" y1=\""
                    << detail::fmt2(y0 + panel_h) << "\" x2=\"" << detail::fmt2(x) << "\" y2=\""
                    << detail::fmt2(y0 + panel_h + 5) << "\" stroke=\"#444\"/>\n"
                    << "<text x=\"" << detail::fmt2(x) << "\" y=\""
                    << detail::fmt2(y0 + panel_h + 18) << "\" text-anchor=\"middle\">" << n
                    << "</text>\n";
            }
        svg << "<text x=\"" << detail::fmt2(x0 + panel_w / 2) << "\" y=\""
            << detail::fmt2(y0 + panel_h + 36) << "\" text-anchor=\"middle\">training samples N"
            << "</text>\n";
        if (p == 0)
            svg << "<text x=\"16\" y=\"" << detail::fmt2(y0 + panel_h / 2)
                << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
                << detail::fmt2(y0 + panel_h / 2) << ")\">test "
                << to_string(panel.metric) << "</text>\n";

        for (const SweepCurve& c : panel.curves) {
            const char* color = detail::arch_color(c.arch);
            // min/max band
            std::ostringstream band;
            for (std::size_t i = 0; i < c.n.size(); ++i)
                band << detail::fmt2(sx(static_cast<double>(c.n[i]))) << ','
                     << detail::fmt2(sy(c.hi[i])) << ' ';
            for (std::size_t i = c.n.size(); i-- > 0;)
                band << detail::fmt2(sx(static_cast<double>(c.n[i]))) << ','
                     << detail::fmt2(sy(c.lo[i])) << ' ';
            svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color
                << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

            const auto polyline = [&](const std::vector<double>& ys, bool dashed) {
                svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
                if (dashed) svg << " stroke-dasharray=\"6 4\"";
                svg << " points=\"";
                for (std::size_t i = 0; i < c.n.size(); ++i)
                    svg << detail::fmt2(sx(static_cast<double>(c.n[i]))) << ','
                        << detail::fmt2(sy(ys[i])) << ' ';
                svg << "\"/>\n";
            };
            polyline(c.mean, false);
            polyline(c.bound, true);
        }
    }

    // legend (top-left of the first panel)
    const double lx = margin_l + 10, ly = margin_t + 14;
    int row = 0;
    for (Arch arch : {Arch::ko, Arch::fc}) {
        const char* color = detail::arch_color(arch);
        svg << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ly + 16 * row)
            << "\" x2=\"" << detail::fmt2(lx + 22) << "\" y2=\"" << detail::fmt2(ly + 16 * row)
            << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"/>\n"
            << "<text x=\"" << detail::fmt2(lx + 28) << "\" y=\""
            << detail::fmt2(ly + 16 * row + 4) << "\">" << to_string(arch) << " mean</text>\n";
        ++row;
        svg << "<line x1=\"" << detail::fmt2(lx) << "\" y1=\"" << detail::fmt2(ly + 16 * row)
            << "\" x2=\"" << detail::fmt2(lx + 22) << "\" y2=\"" << detail::fmt2(ly + 16 * row)
            << "\" stroke=\"" << color << "\" stroke-width=\"1.6\" stroke-dasharray=\"6 4\"/>\n"
            << "<text x=\"" << detail::fmt2(lx + 28) << "\" y=\""
            << detail::fmt2(ly + 16 * row + 4) << "\">" << to_string(arch) << " bound</text>\n";
        ++row;
    }

    svg << "</svg>\n";
    return svg.str();
}

/// Reads both CSVs, validates that they match, and writes the figure. No
/// file is written when validation fails.
inline void emit_plot(const std::string& sweep_csv, const std::string& calibration_csv,
                      const std::string& out_path) {
    const std::vector<SweepRecord> records = read_sweep_csv(sweep_csv);
    const std::vector<CalibrationFit> fits = read_calibration_csv(calibration_csv);
    const std::string svg = render_sweep_svg(build_plot_data(records, fits));
    std::ofstream out(out_path);
    if (!out) throw InputError("emit_plot: cannot open " + out_path);
    out << svg;
}

}  // namespace kobound

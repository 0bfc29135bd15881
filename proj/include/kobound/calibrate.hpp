#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kobound/errors.hpp"
#include "kobound/models.hpp"
#include "kobound/tomo.hpp"

namespace kobound {

/// One sweep measurement: architecture, scale, training-set size, seed, the
/// selected ridge coefficient, and the resulting errors. error_flag is empty
/// for clean rows and carries a short message when the fit failed.
struct SweepRecord {
    Arch arch = Arch::ko;
    int h = 0, v = 0, b = 0;
    long long n = 0;
    long long seed = 0;
    double lambda = 0.0;
    double train_err = 0.0, val_err = 0.0, test_err = 0.0;
    Metric metric = Metric::mse;
    double fit_wall_ms = 0.0;
    std::string error_flag;
};

/// The two observable constants of the calibrated bound
/// floor + sigma * ln(N)/N for one (architecture, scale, metric) group.
struct CalibrationFit {
    Arch arch = Arch::ko;
    int h = 0;
    Metric metric = Metric::mse;
    double floor = 0.0;  // >= 0
    double sigma = 0.0;  // >= 0 (clamped)
    int n_points = 0;    // distinct N values used
    std::string warning; // empty when the fit needed no clamping
};

inline double log_over_n(double n) { return std::log(n) / n; }

/// Calibrates (floor, sigma) from the per-N seed means of one (arch, h)
/// group. The curve is anchored at the smallest mean error e*(N*); sigma is
/// the steepest slope (e(N) - e*) / (t(N) - t*) toward larger t, which makes
/// the bound an upper envelope of the means through the anchor; the stored
/// floor is the anchor value pulled back to t = 0. Exact curves of the form
/// f + s * t are recovered exactly. Negative slopes clamp to 0 and a warning
/// is attached.
inline CalibrationFit fit_calibration(std::span<const SweepRecord> records) {
    if (records.empty()) throw InputError("fit_calibration: no records");

    std::map<long long, std::pair<double, int>> by_n;  // n -> (sum, count)
    for (const SweepRecord& r : records) {
        if (!r.error_flag.empty()) continue;
        if (r.arch != records.front().arch || r.h != records.front().h ||
            r.metric != records.front().metric)
            throw InputError("fit_calibration: records span more than one (arch, h, metric)");
        if (r.n < 2) throw InputError("fit_calibration: all N must be >= 2");
        auto& [sum, count] = by_n[r.n];
        sum += r.test_err;
        ++count;
    }
    if (by_n.size() < 2) throw InputError("fit_calibration: need at least 2 distinct N values");

    std::vector<std::pair<double, double>> curve;  // (t, mean error), t = ln N / N
    for (const auto& [n, agg] : by_n)
        curve.emplace_back(log_over_n(static_cast<double>(n)), agg.first / agg.second);

    // Anchor: smallest mean error; ties resolve toward larger N (smaller t).
    std::size_t anchor = 0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].second < curve[anchor].second ||
            (curve[i].second == curve[anchor].second && curve[i].first < curve[anchor].first))
            anchor = i;
    const double t_star = curve[anchor].first;
    const double floor_raw = curve[anchor].second;

    CalibrationFit fit;
    fit.arch = records.front().arch;
    fit.h = records.front().h;
    fit.metric = records.front().metric;
    fit.n_points = static_cast<int>(curve.size());

    double sigma = -std::numeric_limits<double>::infinity();
    bool any_chord = false;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (i == anchor || curve[i].first == t_star) continue;
        sigma = std::max(sigma, (curve[i].second - floor_raw) / (curve[i].first - t_star));
        any_chord = true;
    }
    if (!any_chord) {
        fit.sigma = 0.0;
        fit.warning = "degenerate_grid";
    } else if (sigma < 0.0) {
        fit.sigma = 0.0;
        fit.warning = "sigma_clamped";
    } else {
        fit.sigma = sigma;
    }

    fit.floor = floor_raw - fit.sigma * t_star;
    if (fit.floor < 0.0) {
        fit.floor = 0.0;
        fit.warning += fit.warning.empty() ? "floor_clamped" : "+floor_clamped";
    }
    return fit;
}

/// Groups records by (arch, h, metric) and calibrates each group; rows come
/// back sorted by (h, arch, metric).
inline std::vector<CalibrationFit> calibrate_sweep_records(std::span<const SweepRecord> records) {
    std::map<std::tuple<int, Arch, Metric>, std::vector<SweepRecord>> groups;
    for (const SweepRecord& r : records) groups[{r.h, r.arch, r.metric}].push_back(r);
    std::vector<CalibrationFit> fits;
    fits.reserve(groups.size());
    for (const auto& [key, group] : groups) fits.push_back(fit_calibration(group));
    return fits;
}

/// Calibrated risk estimate floor + sigma * ln(n)/n.
inline double calibrated_bound(const CalibrationFit& fit, double n) {
    if (!(n >= 2.0)) throw InputError("calibrated_bound: need N >= 2");
    return fit.floor + fit.sigma * log_over_n(n);
}

/// Smallest integer N >= 2 whose calibrated bound reaches the target. The
/// tail N >= 3 is monotone (ln N / N decreases beyond e), so after direct
/// checks at 2 and 3 the answer comes from bisection.
inline long long invert_for_n(const CalibrationFit& fit, double epsilon) {
    if (!(epsilon > fit.floor))
        throw InfeasibleTargetError(
            "invert_for_n: target must exceed the floor (the bound never reaches it)");
    if (fit.sigma <= 0.0) return 2;

    const auto feasible = [&](long long n) {
        return calibrated_bound(fit, static_cast<double>(n)) <= epsilon;
    };
    if (feasible(2)) return 2;
    if (feasible(3)) return 3;
    long long hi = 4;
    while (!feasible(hi)) {
        if (hi > (1LL << 61)) throw NumericError("invert_for_n: no feasible N found");
        hi *= 2;
    }
    long long lo = hi / 2;  // infeasible (so is 3; hi/2 >= 3 once hi >= 8)
    if (hi == 4) lo = 3;
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

struct RatioReport {
    double structural_factor = 0.0;  // sigma_fc / sigma_ko
    double budget_factor = 0.0;      // (eps - floor_ko) / (eps - floor_fc)
    double double_ratio = 0.0;       // product; equals (N_fc/lnN_fc)/(N_ko/lnN_ko)
};

/// Two-factor sample-complexity comparison at a matched target error.
inline RatioReport sample_complexity_ratio(const CalibrationFit& fit_ko,
                                           const CalibrationFit& fit_fc, double epsilon) {
    if (!(epsilon > fit_ko.floor) || !(epsilon > fit_fc.floor))
        throw InfeasibleTargetError("sample_complexity_ratio: target must exceed both floors");
    if (fit_ko.sigma == 0.0)
        throw UndefinedRatioError("sample_complexity_ratio: sigma_ko is zero");
    RatioReport r;
    r.structural_factor = fit_fc.sigma / fit_ko.sigma;
    r.budget_factor = (epsilon - fit_ko.floor) / (epsilon - fit_fc.floor);
    r.double_ratio = r.structural_factor * r.budget_factor;
    return r;
}

/// Matched-kappa closed form H^2 / (4 ||K||^2 ||A^T||^2); identical to
/// (A1_fc * p_fc) / (A1_ko * p_ko).
inline double structural_sparsity_factor(int h, double norm_k, double norm_at) {
    if (!(norm_k > 0.0) || !(norm_at > 0.0))
        throw InputError("structural_sparsity_factor: norms must be > 0");
    const double h2 = static_cast<double>(h) * h;
    return h2 / (4.0 * norm_k * norm_k * norm_at * norm_at);
}

struct ParameterCounts {
    long long p_ko = 0;   // V * B
    long long p_fc = 0;   // H^2 * V * B
    long long ratio = 0;  // H^2
};

inline ParameterCounts parameter_counts(const Geometry& g) {
    validate(g);
    ParameterCounts c;
    c.p_ko = static_cast<long long>(g.v) * g.b;
    c.ratio = static_cast<long long>(g.h) * g.h;
    c.p_fc = c.p_ko * c.ratio;
    return c;
}

struct MemoryTable {
    long long ko_fp32_bytes = 0;
    long long ko_adam_bytes = 0;  // 16 bytes per parameter
    long long fc_fp32_bytes = 0;
    long long fc_adam_bytes = 0;
};

inline MemoryTable memory_table(const Geometry& g) {
    const ParameterCounts c = parameter_counts(g);
    return {4 * c.p_ko, 16 * c.p_ko, 4 * c.p_fc, 16 * c.p_fc};
}

/// Human-readable bytes: KiB/MiB/GiB ladder (1024 bases), promoted while the
/// value is >= 100 and a larger unit exists; three significant digits.
inline std::string format_mem(long long bytes) {
    static const char* units[] = {"KiB", "MiB", "GiB"};
    double value = static_cast<double>(bytes) / 1024.0;
    int unit = 0;
    while (value >= 100.0 && unit < 2) {
        value /= 1024.0;
        ++unit;
    }
    char buf[48];
    if (value < 10.0)
        std::snprintf(buf, sizeof buf, "%.2f %s", value, units[unit]);
    else if (value < 100.0)
        std::snprintf(buf, sizeof buf, "%.1f %s", value, units[unit]);
    else
        std::snprintf(buf, sizeof buf, "%.0f %s", value, units[unit]);
    return buf;
}

/// Three-significant-digit scientific form, e.g. 1509949440 -> "1.51e+09".
inline std::string format_sci3(long long value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", static_cast<double>(value));
    return buf;
}

}  // namespace kobound

// Command-line front end: sweep execution, calibration, sample-budget
// prediction, scale tables, theorem verification, and figure emission.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include "kobound/calibrate.hpp"
#include "kobound/config.hpp"
#include "kobound/csv.hpp"
#include "kobound/plot.hpp"
#include "kobound/scale_table.hpp"
#include "kobound/sweep.hpp"
#include "kobound/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

int cmd_sweep(const std::string& config_path, const std::string& out_path) {
    kobound::SweepConfig cfg;
    if (!config_path.empty()) cfg = kobound::sweep_config_from(kobound::parse_config_file(config_path));
    const kobound::SweepResult result = kobound::run_sweep(cfg);
    kobound::write_sweep_csv(out_path, result.records);
    std::printf("wrote %zu records to %s (%.1f s)\n", result.records.size(), out_path.c_str(),
                result.total_wall_seconds);
    return kExitOk;
}

int cmd_calibrate(const std::string& in_path, const std::string& out_path) {
    const auto records = kobound::read_sweep_csv(in_path);
    const auto fits = kobound::calibrate_sweep_records(records);
    kobound::write_calibration_csv(out_path, fits);
    std::printf("wrote %zu calibration rows to %s\n", fits.size(), out_path.c_str());
    return kExitOk;
}

int cmd_predict(const std::string& calib_path, const std::string& arch_str, int h, double eps,
                const std::string& metric_str) {
    const auto fits = kobound::read_calibration_csv(calib_path);
    const kobound::Arch arch = kobound::arch_from_string(arch_str);
    const kobound::Metric metric = kobound::metric_from_string(metric_str);
    const kobound::CalibrationFit* fit = nullptr;
    for (const auto& f : fits)
        if (f.arch == arch && f.h == h && f.metric == metric) fit = &f;
    if (!fit)
        throw kobound::InputError("no calibration row for arch=" + arch_str +
                                  ", h=" + std::to_string(h) + ", metric=" + metric_str);

    const long long n = kobound::invert_for_n(*fit, eps);
    std::printf("arch=%s h=%d floor=%.6g sigma=%.6g\n", arch_str.c_str(), h, fit->floor,
                fit->sigma);
    std::printf("target %.6g reached at N = %lld (bound there: %.6g)\n", eps, n,
                kobound::calibrated_bound(*fit, static_cast<double>(n)));
    return kExitOk;
}

int cmd_scale_table(const std::string& config_path, const std::string& out_path) {
    std::vector<kobound::Geometry> geoms =
        config_path.empty() ? kobound::default_scale_geometries()
                            : kobound::scale_geometries_from(kobound::parse_config_file(config_path));
    const auto rows = kobound::build_scale_rows(geoms);
    std::fputs(kobound::render_scale_table_text(rows).c_str(), stdout);
    if (!out_path.empty()) kobound::write_scale_table_csv(out_path, rows);
    return kExitOk;
}

int cmd_verify(std::uint64_t seed, int networks, int inputs) {
    kobound::VerifyOptions opts;
    opts.seed = seed;
    opts.n_networks = networks;
    opts.n_inputs = inputs;
    const kobound::VerifySuiteReport report = kobound::run_verification_suite(opts);
    std::printf("pointwise inequality : max(LHS - RHS) = %.3e over %d networks x %d inputs  [%s]\n",
                report.max_pointwise_violation, report.networks, report.inputs_per_network,
                report.max_pointwise_violation <= opts.tolerance ? "ok" : "VIOLATED");
    std::printf("recursion identities : max relative error = %.3e  [%s]\n",
                report.max_recursion_rel_err,
                report.max_recursion_rel_err <= 1e-12 ? "ok" : "VIOLATED");
    std::printf("composition lemma    : max empirical excess = %.3e  [%s]\n",
                report.max_lemma1_excess,
                report.max_lemma1_excess <= opts.tolerance ? "ok" : "VIOLATED");
    return report.pass ? kExitOk : kExitVerifyFailed;
}

int cmd_plot(const std::string& sweep_path, const std::string& calib_path,
             const std::string& out_path) {
    kobound::emit_plot(sweep_path, calib_path, out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"known-operator risk bounds and the desk-scale CT surrogate"};
    app.require_subcommand(1);

    std::string config_path, out_path, in_path, sweep_path, calib_path, arch_str, metric_str = "mse";
    int h = 0;
    double eps = 0.0;
    std::uint64_t seed = 1;
    int networks = 200, inputs = 100;

    auto* sweep = app.add_subcommand("sweep", "run the sample-efficiency sweep");
    sweep->add_option("--config", config_path, "sweep config file");
    sweep->add_option("--out", out_path, "output sweep CSV")->required();

    auto* calibrate = app.add_subcommand("calibrate", "fit (floor, sigma) per (arch, h)");
    calibrate->add_option("--in", in_path, "input sweep CSV")->required();
    calibrate->add_option("--out", out_path, "output calibration CSV")->required();

    auto* predict = app.add_subcommand("predict-n", "invert the calibrated bound for a target error");
    predict->add_option("--calib", calib_path, "calibration CSV")->required();
    predict->add_option("--arch", arch_str, "ko or fc")->required();
    predict->add_option("--h", h, "image scale")->required();
    predict->add_option("--eps", eps, "target error")->required();
    predict->add_option("--metric", metric_str, "mse or rrmse2 (default mse)");

    auto* scale = app.add_subcommand("scale-table", "parameter and memory accounting per scale");
    scale->add_option("--config", config_path, "config with [scale_table] scales = h:v:b ...");
    scale->add_option("--out", out_path, "also write rows as CSV");

    auto* verify = app.add_subcommand("verify-theorem", "randomized check of the risk inequality");
    verify->add_option("--seed", seed, "RNG seed (default 1)");
    verify->add_option("--networks", networks, "number of random networks (default 200)");
    verify->add_option("--inputs", inputs, "inputs per network (default 100)");

    auto* plot = app.add_subcommand("plot", "sweep figure with calibrated-bound overlays");
    plot->add_option("--sweep", sweep_path, "sweep CSV")->required();
    plot->add_option("--calib", calib_path, "calibration CSV")->required();
    plot->add_option("--out", out_path, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sweep->parsed()) return cmd_sweep(config_path, out_path);
        if (calibrate->parsed()) return cmd_calibrate(in_path, out_path);
        if (predict->parsed()) return cmd_predict(calib_path, arch_str, h, eps, metric_str);
        if (scale->parsed()) return cmd_scale_table(config_path, out_path);
        if (verify->parsed()) return cmd_verify(seed, networks, inputs);
        if (plot->parsed()) return cmd_plot(sweep_path, calib_path, out_path);
    } catch (const kobound::InfeasibleTargetError& e) {
        std::cerr << "infeasible target: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

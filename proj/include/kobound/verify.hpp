#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kobound/config.hpp"
#include "kobound/errors.hpp"
#include "kobound/riskbound.hpp"
#include "kobound/rng.hpp"

namespace kobound {

struct VerifyOptions {
    std::uint64_t seed = 1;
    int n_networks = 200;
    int n_inputs = 100;
    int n_lipschitz_lists = 1000;
    int n_lemma1_networks = 50;
    int n_lemma1_pairs = 200;
    double tolerance = 1e-9;
};

struct VerifySuiteReport {
    double max_pointwise_violation = 0.0;  // max(LHS - RHS) over the whole suite
    double max_recursion_rel_err = 0.0;    // amplification recursion identities
    double max_lemma1_excess = 0.0;        // empirical Lipschitz minus certified product
    int networks = 0;
    int inputs_per_network = 0;
    bool pass = false;
};

namespace detail {

/// Checks 2 l_l^2 A_k^(l-1) = A_k^(l), A_l^(l) = 2 (l >= 2) and A_1^(1) = 1
/// on every prefix of the given Lipschitz list; returns the worst relative
/// deviation.
inline double recursion_identity_error(std::span<const double> lipschitz) {
    double worst = 0.0;
    const int l_count = static_cast<int>(lipschitz.size());
    std::vector<double> prev = {1.0};  // A^(1)
    worst = std::max(worst, std::abs(amplification_factors(lipschitz.first(1))[0] - 1.0));
    for (int l = 2; l <= l_count; ++l) {
        const std::vector<double> cur = amplification_factors(lipschitz.first(l));
        const double ll2 = lipschitz[l - 1] * lipschitz[l - 1];
        for (int k = 0; k < l - 1; ++k) {
            const double expected = 2.0 * ll2 * prev[k];
            const double scale = std::max({std::abs(expected), std::abs(cur[k]), 1.0});
            worst = std::max(worst, std::abs(expected - cur[k]) / scale);
        }
        worst = std::max(worst, std::abs(cur[l - 1] - 2.0));
        prev = cur;
    }
    return worst;
}

}  // namespace detail

/// Theorem verification suite: (1) the pointwise inequality on randomized
/// linear(+relu) networks with perturbed learned layers, (2) the
/// amplification recursion identities, (3) the composed-Lipschitz product
/// bound against sampled difference quotients.
inline VerifySuiteReport run_verification_suite(const VerifyOptions& opts = {}) {
    VerifySuiteReport report;
    report.networks = opts.n_networks;
    report.inputs_per_network = opts.n_inputs;

    SplitMix64 rng(opts.seed);
    double max_violation = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < opts.n_networks; ++i) {
        const ConcreteNetwork net = make_random_concrete_network(rng);
        const PointwiseReport pw = verify_pointwise_bound(net, opts.n_inputs, rng);
        max_violation = std::max(max_violation, pw.max_violation);
    }
    report.max_pointwise_violation = max_violation;

    for (int i = 0; i < opts.n_lipschitz_lists; ++i) {
        const int l_count = 1 + static_cast<int>(rng.next_index(6));
        std::vector<double> lipschitz(l_count);
        for (double& l : lipschitz) l = rng.next_in(0.0, 2.0);
        report.max_recursion_rel_err =
            std::max(report.max_recursion_rel_err, detail::recursion_identity_error(lipschitz));
    }

    for (int i = 0; i < opts.n_lemma1_networks; ++i) {
        const ConcreteNetwork net = make_random_concrete_network(rng);
        const double certified = lipschitz_product(certified_lipschitz(net));
        const auto composed = [&](const Eigen::VectorXd& x) {
            Eigen::VectorXd y = x;
            for (const ConcreteLayer& layer : net.layers)
                y = detail::apply_map(layer.true_map, layer.relu, y);
            return y;
        };
        const double empirical =
            estimate_lipschitz_empirical(composed, net.input_domain, opts.n_lemma1_pairs, rng);
        report.max_lemma1_excess = std::max(report.max_lemma1_excess, empirical - certified);
    }

    report.pass = report.max_pointwise_violation <= opts.tolerance &&
                  report.max_recursion_rel_err <= 1e-12 &&
                  report.max_lemma1_excess <= opts.tolerance;
    return report;
}

/// NetworkSpec from repeated [layer] config sections. Recognized keys:
/// lipschitz, known, barron_c, width_n, params_p, kappa.
inline NetworkSpec parse_network_spec(const Config& cfg) {
    NetworkSpec net;
    for (const ConfigSection& sec : cfg.sections) {
        if (sec.name != "layer") continue;
        LayerSpec layer;
        for (const auto& [key, value] : sec.entries) {
            if (key == "lipschitz")
                layer.lipschitz = detail::to_double(value);
            else if (key == "known")
                layer.known = detail::to_bool(value);
            else if (key == "barron_c")
                layer.barron_c = detail::to_double(value);
            else if (key == "width_n")
                layer.width_n = detail::to_double(value);
            else if (key == "params_p")
                layer.params_p = detail::to_double(value);
            else if (key == "kappa")
                layer.kappa = detail::to_double(value);
            else
                throw InputError("layer config: unknown key '" + key + "'");
        }
        net.layers.push_back(layer);
    }
    if (net.layers.empty()) throw InputError("network config: no [layer] sections");
    return net;
}

}  // namespace kobound

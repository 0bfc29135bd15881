#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kobound/errors.hpp"
#include "kobound/rng.hpp"
#include "kobound/tomo.hpp"

namespace kobound {

/// One layer of a layered network: its Lipschitz constant, whether it is a
/// known (fixed, analytically specified) operator, and the per-layer risk
/// constants of a learned block. Known layers ignore the risk constants.
struct LayerSpec {
    double lipschitz = 1.0;  // >= 0
    bool known = false;
    double barron_c = 0.0;  // C >= 0
    double width_n = 1.0;   // n >= 1
    double params_p = 1.0;  // p >= 1
    double kappa = 1.0;     // > 0
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
};

/// Error-amplification factors of an L-layer composition:
///   A_1 = 2^(L-1) * prod_{j=2..L} l_j^2,
///   A_l = 2^(L-l+1) * prod_{j=l+1..L} l_j^2   (2 <= l <= L),
/// with empty products equal to 1, so A_L = 2 for L >= 2 and A_1 = 1 when
/// L = 1. Powers of two are exact; suffix products accumulate from the tail.
inline std::vector<double> amplification_factors(std::span<const double> lipschitz) {
    const int l_count = static_cast<int>(lipschitz.size());
    if (l_count < 1) throw InputError("amplification_factors: need at least one layer");
    for (double l : lipschitz)
        if (!(l >= 0.0)) throw InputError("amplification_factors: Lipschitz constants must be >= 0");
    if (l_count == 1) return {1.0};

    std::vector<double> a(l_count);
    double suffix = 1.0;  // prod_{j > i} l_j^2, built from the last layer down
    for (int i = l_count - 1; i >= 1; --i) {
        a[i] = std::ldexp(suffix, l_count - i);
        suffix *= lipschitz[i] * lipschitz[i];
    }
    a[0] = std::ldexp(suffix, l_count - 1);
    return a;
}

/// Barron-type per-layer risk C^2/n + kappa * p * ln(N) / N. Natural log;
/// any base change is absorbed into kappa.
inline double layer_risk(double c, double n, double kappa, double p, double n_samples) {
    if (!(n >= 1.0)) throw InputError("layer_risk: width n must be >= 1");
    if (!(p >= 1.0)) throw InputError("layer_risk: parameter count p must be >= 1");
    if (!(kappa > 0.0)) throw InputError("layer_risk: kappa must be > 0");
    if (!(c >= 0.0)) throw InputError("layer_risk: complexity C must be >= 0");
    if (!(n_samples >= 2.0)) throw InputError("layer_risk: need N >= 2 (ln N degenerates at 1)");
    return c * c / n + kappa * p * std::log(n_samples) / n_samples;
}

struct BoundReport {
    std::vector<double> amplifications;
    std::vector<double> per_layer_terms;  // exactly 0 for known layers
    double total = 0.0;
    double n_samples = 0.0;
};

/// Network risk bound: sum over learned layers of A_l times the layer risk.
/// Known operators contribute exactly zero.
inline BoundReport deep_risk_bound(const NetworkSpec& net, double n_samples) {
    const int l_count = static_cast<int>(net.layers.size());
    if (l_count < 1) throw InputError("deep_risk_bound: need at least one layer");
    std::vector<double> lipschitz(l_count);
    for (int i = 0; i < l_count; ++i) lipschitz[i] = net.layers[i].lipschitz;

    BoundReport report;
    report.amplifications = amplification_factors(lipschitz);
    report.per_layer_terms.resize(l_count, 0.0);
    report.n_samples = n_samples;
    for (int i = 0; i < l_count; ++i) {
        const LayerSpec& layer = net.layers[i];
        if (layer.known) continue;
        report.per_layer_terms[i] =
            report.amplifications[i] *
            layer_risk(layer.barron_c, layer.width_n, layer.kappa, layer.params_p, n_samples);
    }
    for (double t : report.per_layer_terms) report.total += t;
    return report;
}

/// Lipschitz constant of a composition is at most the product of the layer
/// constants; the empty composition is the identity.
inline double lipschitz_product(std::span<const double> lipschitz) {
    double prod = 1.0;
    for (double l : lipschitz) prod *= l;
    return prod;
}

/// Amplifications of the four-layer reconstruction pipeline
/// (weighting, filter, backprojection, relu):
/// (8 k^2 a^2, 8 a^2, 4, 2) with k = ||K||_2, a = ||A^T||_2.
inline std::array<double, 4> ct_amplifications(double norm_k, double norm_at) {
    if (!(norm_k >= 0.0) || !(norm_at >= 0.0))
        throw InputError("ct_amplifications: norms must be >= 0");
    const double k2 = norm_k * norm_k, a2 = norm_at * norm_at;
    return {8.0 * k2 * a2, 8.0 * a2, 4.0, 2.0};
}

// ---------------------------------------------------------------------------
// Concrete (evaluable) networks for the pointwise-inequality verifier.
// Layers are linear maps optionally composed with relu, so every Lipschitz
// constant is certifiable as a spectral norm.
// ---------------------------------------------------------------------------

struct ConcreteLayer {
    Eigen::MatrixXd true_map;
    Eigen::MatrixXd learned_map;  // equals true_map when the layer is known
    bool relu = false;            // applied after the linear map in both chains
};

struct Box {
    Eigen::VectorXd lo, hi;
};

struct ConcreteNetwork {
    std::vector<ConcreteLayer> layers;
    Box input_domain;
};

namespace detail {

inline Eigen::VectorXd apply_map(const Eigen::MatrixXd& m, bool with_relu,
                                 const Eigen::VectorXd& x) {
    Eigen::VectorXd y = m * x;
    if (with_relu) y = y.cwiseMax(0.0);
    return y;
}

inline Eigen::VectorXd sample_box(const Box& box, SplitMix64& rng) {
    Eigen::VectorXd x(box.lo.size());
    for (long i = 0; i < x.size(); ++i) x[i] = box.lo[i] + rng.next_unit() * (box.hi[i] - box.lo[i]);
    return x;
}

}  // namespace detail

/// Certified layer constants: the spectral norm of the true linear map
/// (relu is 1-Lipschitz and does not increase it).
inline std::vector<double> certified_lipschitz(const ConcreteNetwork& net) {
    std::vector<double> l;
    l.reserve(net.layers.size());
    for (const ConcreteLayer& layer : net.layers) l.push_back(operator_norm(layer.true_map).value);
    return l;
}

struct PointwiseReport {
    double max_violation = -std::numeric_limits<double>::infinity();  // max(LHS - RHS)
    std::vector<double> max_layer_error;                              // max ||e_k|| per layer
    int samples = 0;
};

/// Samples inputs from the domain box and checks, pointwise,
///   ||f_L(x) - f_hat_L(x)||^2 <= sum_k A_k ||e_k(f_hat_{k-1}(x))||^2,
/// where e_k is evaluated at the learned chain's intermediates and A_k come
/// from the certified Lipschitz constants. max_violation <= 0 means the
/// inequality held at every sample.
inline PointwiseReport verify_pointwise_bound(const ConcreteNetwork& net, int n_inputs,
                                              SplitMix64& rng) {
    const int l_count = static_cast<int>(net.layers.size());
    if (l_count < 1) throw InputError("verify_pointwise_bound: empty network");
    if (n_inputs < 1) throw InputError("verify_pointwise_bound: need at least one input");

    const std::vector<double> lipschitz = certified_lipschitz(net);
    const std::vector<double> amps = amplification_factors(lipschitz);

    PointwiseReport report;
    report.max_layer_error.assign(l_count, 0.0);
    report.samples = n_inputs;
    for (int s = 0; s < n_inputs; ++s) {
        Eigen::VectorXd x = detail::sample_box(net.input_domain, rng);
        Eigen::VectorXd f_true = x, f_learned = x;
        double rhs = 0.0;
        for (int k = 0; k < l_count; ++k) {
            const ConcreteLayer& layer = net.layers[k];
            const Eigen::VectorXd err =
                detail::apply_map(layer.true_map, layer.relu, f_learned) -
                detail::apply_map(layer.learned_map, layer.relu, f_learned);
            const double err_norm2 = err.squaredNorm();
            rhs += amps[k] * err_norm2;
            report.max_layer_error[k] = std::max(report.max_layer_error[k], std::sqrt(err_norm2));
            f_true = detail::apply_map(layer.true_map, layer.relu, f_true);
            f_learned = detail::apply_map(layer.learned_map, layer.relu, f_learned);
        }
        const double lhs = (f_true - f_learned).squaredNorm();
        if (!std::isfinite(lhs) || !std::isfinite(rhs))
            throw NumericError("verify_pointwise_bound: non-finite evaluation");
        report.max_violation = std::max(report.max_violation, lhs - rhs);
    }
    return report;
}

/// Sampled lower bound on the Lipschitz constant of an arbitrary map:
/// max over random pairs of ||f(x) - f(x')|| / ||x - x'||.
template <typename MapFn>
double estimate_lipschitz_empirical(MapFn&& map, const Box& domain, int n_pairs,
                                    SplitMix64& rng) {
    if (n_pairs < 1) throw InputError("estimate_lipschitz_empirical: need n_pairs >= 1");
    double best = 0.0;
    for (int i = 0; i < n_pairs; ++i) {
        const Eigen::VectorXd x = detail::sample_box(domain, rng);
        const Eigen::VectorXd x2 = detail::sample_box(domain, rng);
        const double dist = (x - x2).norm();
        if (dist == 0.0) continue;  // coincident pair
        best = std::max(best, (map(x) - map(x2)).norm() / dist);
    }
    return best;
}

struct RandomNetworkOptions {
    int min_layers = 2;
    int max_layers = 5;
    int max_dim = 16;
    double entry_scale = 1.0;         // true-map entries uniform in [-s, s]
    double perturbation = 0.1;        // learned = true + uniform [-p, p] entries
    double known_probability = 0.35;  // chance a layer is a known operator
    double relu_probability = 0.5;
};

/// Random linear(+relu) network with learned layers perturbed off the true
/// ones; used by the theorem verifier and the randomized test suites.
inline ConcreteNetwork make_random_concrete_network(SplitMix64& rng,
                                                    const RandomNetworkOptions& opts = {}) {
    const int l_count =
        opts.min_layers +
        static_cast<int>(rng.next_index(static_cast<std::uint64_t>(opts.max_layers - opts.min_layers + 1)));
    ConcreteNetwork net;
    int dim_in = 1 + static_cast<int>(rng.next_index(static_cast<std::uint64_t>(opts.max_dim)));
    net.input_domain.lo = Eigen::VectorXd::Constant(dim_in, -1.0);
    net.input_domain.hi = Eigen::VectorXd::Constant(dim_in, 1.0);
    for (int l = 0; l < l_count; ++l) {
        const int dim_out = 1 + static_cast<int>(rng.next_index(static_cast<std::uint64_t>(opts.max_dim)));
        ConcreteLayer layer;
        layer.true_map.resize(dim_out, dim_in);
        for (long i = 0; i < layer.true_map.size(); ++i)
            layer.true_map.data()[i] = rng.next_in(-opts.entry_scale, opts.entry_scale);
        layer.relu = rng.next_unit() < opts.relu_probability;
        if (rng.next_unit() < opts.known_probability) {
            layer.learned_map = layer.true_map;
        } else {
            layer.learned_map = layer.true_map;
            for (long i = 0; i < layer.learned_map.size(); ++i)
                layer.learned_map.data()[i] += rng.next_in(-opts.perturbation, opts.perturbation);
        }
        net.layers.push_back(std::move(layer));
        dim_in = dim_out;
    }
    return net;
}

/// Report rows: layer index, amplification, per-layer term, and the shared
/// total in the last column.
inline void write_bound_report_csv(const std::string& path, const BoundReport& report) {
    std::ofstream out(path);
    if (!out) throw InputError("write_bound_report_csv: cannot open " + path);
    out << "layer,amplification,term,total\n";
    char buf[96];
    for (std::size_t i = 0; i < report.per_layer_terms.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i + 1,
                      report.amplifications[i], report.per_layer_terms[i], report.total);
        out << buf;
    }
}

}  // namespace kobound

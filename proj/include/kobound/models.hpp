#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kobound/errors.hpp"
#include "kobound/image.hpp"
#include "kobound/rng.hpp"
#include "kobound/tomo.hpp"

namespace kobound {

enum class Arch { ko, fc };
enum class Metric { mse, rrmse2 };

inline std::string to_string(Arch a) { return a == Arch::ko ? "ko" : "fc"; }
inline std::string to_string(Metric m) { return m == Metric::mse ? "mse" : "rrmse2"; }

inline Arch arch_from_string(const std::string& s) {
    if (s == "ko") return Arch::ko;
    if (s == "fc") return Arch::fc;
    throw InputError("unknown architecture '" + s + "' (expected ko or fc)");
}

inline Metric metric_from_string(const std::string& s) {
    if (s == "mse") return Metric::mse;
    if (s == "rrmse2") return Metric::rrmse2;
    throw InputError("unknown metric '" + s + "' (expected mse or rrmse2)");
}

/// Operator-aware model: a learned diagonal weighting over the fixed analytic
/// inverse, y_hat = A_pinv diag(w) x.
struct KoModel {
    std::shared_ptr<const ForwardModel> fm;
    Eigen::VectorXd weights;  // length V*B
    bool relu_at_eval = false;
};

/// Fully connected counterfactual: one dense projection-to-image map,
/// y_hat = M x.
struct FcModel {
    Eigen::MatrixXd m;  // H^2 x (V*B)
    int image_side = 0;
    bool relu_at_eval = false;
};

using AnyModel = std::variant<KoModel, FcModel>;

/// Supervised pairs (sinogram, phantom) sharing one geometry.
struct Dataset {
    Geometry geometry;
    std::vector<std::pair<Sinogram, Image>> pairs;

    int size() const { return static_cast<int>(pairs.size()); }
};

namespace detail {

inline Eigen::MatrixXd stack_sinograms(const Dataset& data) {
    const long vb = static_cast<long>(data.geometry.v) * data.geometry.b;
    Eigen::MatrixXd x(vb, data.size());
    for (int s = 0; s < data.size(); ++s) x.col(s) = flatten(data.pairs[s].first);
    return x;
}

inline Eigen::MatrixXd stack_images(const Dataset& data) {
    const long hh = static_cast<long>(data.geometry.h) * data.geometry.h;
    Eigen::MatrixXd y(hh, data.size());
    for (int s = 0; s < data.size(); ++s) y.col(s) = flatten(data.pairs[s].second);
    return y;
}

}  // namespace detail

inline Image predict(const KoModel& mdl, const Sinogram& x) {
    const Geometry& g = mdl.fm->geometry;
    if (x.views() != g.v || x.bins() != g.b)
        throw InputError("predict: sinogram shape does not match model geometry");
    Eigen::VectorXd yf = mdl.fm->a_pinv * mdl.weights.cwiseProduct(flatten(x));
    Image img = image_from_flat(yf, g.h);
    return mdl.relu_at_eval ? relu(img) : img;
}

inline Image predict(const FcModel& mdl, const Sinogram& x) {
    const Eigen::VectorXd xf = flatten(x);
    if (mdl.m.cols() != xf.size())
        throw InputError("predict: sinogram length does not match model");
    Image img = image_from_flat(mdl.m * xf, mdl.image_side);
    return mdl.relu_at_eval ? relu(img) : img;
}

inline Image predict(const AnyModel& mdl, const Sinogram& x) {
    return std::visit([&](const auto& m) { return predict(m, x); }, mdl);
}

/// Mean over pixels of the squared difference.
inline double mse(const Image& pred, const Image& truth) {
    if (pred.side() != truth.side()) throw InputError("mse: image shapes differ");
    return (pred.pixels - truth.pixels).squaredNorm() / static_cast<double>(truth.pixels.size());
}

/// Squared relative error (||truth - pred|| / ||truth||)^2.
inline double rrmse2(const Image& pred, const Image& truth) {
    if (pred.side() != truth.side()) throw InputError("rrmse2: image shapes differ");
    const double denom = truth.pixels.squaredNorm();
    if (denom == 0.0) throw InputError("rrmse2: zero-norm reference image");
    return (truth.pixels - pred.pixels).squaredNorm() / denom;
}

inline double eval_metric(Metric metric, const Image& pred, const Image& truth) {
    return metric == Metric::mse ? mse(pred, truth) : rrmse2(pred, truth);
}

template <typename Model>
double mean_metric(const Model& mdl, const Dataset& data, Metric metric = Metric::mse) {
    if (data.size() == 0) throw InputError("mean_metric: empty dataset");
    double acc = 0.0;
    for (const auto& [x, y] : data.pairs) acc += eval_metric(metric, predict(mdl, x), y);
    return acc / data.size();
}

/// Closed-form ridge fit of the diagonal weighting: minimizes
/// sum_s ||y_s - A_pinv (w .* x_s)||^2 + lambda ||w||^2 via the (V*B)^2
/// normal equations (G .* sum_s x_s x_s^T + lambda I) w = sum_s x_s .* (P^T y_s)
/// with G = P^T P.
inline KoModel fit_ko_ridge(const Dataset& data, std::shared_ptr<const ForwardModel> fm,
                            double lambda) {
    if (data.size() == 0) throw InputError("fit_ko_ridge: empty dataset");
    if (lambda < 0.0) throw InputError("fit_ko_ridge: lambda must be >= 0");

    const Eigen::MatrixXd x = detail::stack_sinograms(data);
    const Eigen::MatrixXd y = detail::stack_images(data);
    Eigen::MatrixXd normal = fm->a_pinv_gram.cwiseProduct(x * x.transpose());
    normal.diagonal().array() += lambda;
    const Eigen::VectorXd rhs =
        (fm->a_pinv.transpose() * y).cwiseProduct(x).rowwise().sum();

    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success)
        throw NumericError("fit_ko_ridge: normal matrix not positive definite; use lambda > 0");
    KoModel mdl;
    mdl.fm = std::move(fm);
    mdl.weights = llt.solve(rhs);
    if (!mdl.weights.allFinite())
        throw NumericError("fit_ko_ridge: non-finite weights; use lambda > 0");
    return mdl;
}

/// Closed-form ridge fit of the dense map M = Y X^T (X X^T + lambda I)^-1.
/// For N < V*B the (X^T X + lambda I)^-1 X^T form computes the same matrix
/// through an N x N solve (push-through identity).
inline FcModel fit_fc_ridge(const Dataset& data, double lambda) {
    if (data.size() == 0) throw InputError("fit_fc_ridge: empty dataset");
    if (!(lambda > 0.0)) throw InputError("fit_fc_ridge: lambda must be > 0");

    const Eigen::MatrixXd x = detail::stack_sinograms(data);
    const Eigen::MatrixXd y = detail::stack_images(data);
    const long n = x.cols(), vb = x.rows();

    FcModel mdl;
    mdl.image_side = data.geometry.h;
    if (n < vb) {
        Eigen::MatrixXd k = x.transpose() * x;
        k.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() != Eigen::Success) throw NumericError("fit_fc_ridge: factorization failed");
        mdl.m = y * llt.solve(x.transpose());
    } else {
        Eigen::MatrixXd s = x * x.transpose();
        s.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(s);
        if (llt.info() != Eigen::Success) throw NumericError("fit_fc_ridge: factorization failed");
        mdl.m = llt.solve(x * y.transpose()).transpose();
    }
    if (!mdl.m.allFinite()) throw NumericError("fit_fc_ridge: non-finite solution");
    return mdl;
}

/// Training objective of the diagonal weighting on a sample subset: mean over
/// the subset of the per-pixel mean squared prediction error.
inline double ko_loss(const Eigen::VectorXd& w, const Dataset& data, const ForwardModel& fm,
                      std::span<const int> idx) {
    if (idx.empty()) throw InputError("ko_loss: empty index set");
    const double hh = static_cast<double>(fm.geometry.h) * fm.geometry.h;
    double acc = 0.0;
    for (int s : idx) {
        const Eigen::VectorXd xf = flatten(data.pairs[s].first);
        const Eigen::VectorXd yf = flatten(data.pairs[s].second);
        acc += (fm.a_pinv * w.cwiseProduct(xf) - yf).squaredNorm() / hh;
    }
    return acc / static_cast<double>(idx.size());
}

inline Eigen::VectorXd ko_loss_gradient(const Eigen::VectorXd& w, const Dataset& data,
                                        const ForwardModel& fm, std::span<const int> idx) {
    if (idx.empty()) throw InputError("ko_loss_gradient: empty index set");
    const double hh = static_cast<double>(fm.geometry.h) * fm.geometry.h;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(w.size());
    for (int s : idx) {
        const Eigen::VectorXd xf = flatten(data.pairs[s].first);
        const Eigen::VectorXd yf = flatten(data.pairs[s].second);
        const Eigen::VectorXd resid = fm.a_pinv * w.cwiseProduct(xf) - yf;
        grad += xf.cwiseProduct(fm.a_pinv.transpose() * resid);
    }
    return grad * (2.0 / (static_cast<double>(idx.size()) * hh));
}

struct SgdOptions {
    double lr = 2e-2;
    int iters = 5000;
    int batch = 4;
};

struct SgdResult {
    KoModel model;
    std::vector<double> loss_trace;  // minibatch loss before each step
};

/// Minibatch gradient descent on the diagonal weights from the all-ones
/// initialization (the analytic FBP's neutral weighting). Batch indices are
/// drawn uniformly with replacement from the provided stream.
inline SgdResult fit_ko_sgd(const Dataset& data, std::shared_ptr<const ForwardModel> fm,
                            const SgdOptions& opts, SplitMix64& rng) {
    const int n = data.size();
    if (n == 0) throw InputError("fit_ko_sgd: empty dataset");
    if (!(opts.lr > 0.0) && opts.lr != 0.0) throw InputError("fit_ko_sgd: lr must be >= 0");
    if (opts.iters < 1) throw InputError("fit_ko_sgd: iters must be >= 1");
    if (opts.batch < 1 || opts.batch > n) throw InputError("fit_ko_sgd: batch must be in [1, N]");

    SgdResult result;
    const long vb = static_cast<long>(fm->geometry.v) * fm->geometry.b;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(vb);
    std::vector<int> idx(opts.batch);
    result.loss_trace.reserve(opts.iters);
    for (int it = 0; it < opts.iters; ++it) {
        for (int& i : idx) i = static_cast<int>(rng.next_index(static_cast<std::uint64_t>(n)));
        const double loss = ko_loss(w, data, *fm, idx);
        if (!std::isfinite(loss))
            throw NumericError("fit_ko_sgd: loss diverged at iteration " + std::to_string(it));
        result.loss_trace.push_back(loss);
        w -= opts.lr * ko_loss_gradient(w, data, *fm, idx);
    }
    result.model.fm = std::move(fm);
    result.model.weights = std::move(w);
    return result;
}

struct SelectedFit {
    double lambda = 0.0;
    double val_error = 0.0;
    AnyModel model;
};

/// Fits one model per grid value on the training set, evaluates mean MSE on
/// the validation set, and returns the minimizer; ties break toward the
/// smallest lambda. Grid points whose fit throws are skipped.
inline SelectedFit select_lambda(const Dataset& train, const Dataset& val,
                                 std::span<const double> grid, Arch arch,
                                 std::shared_ptr<const ForwardModel> fm,
                                 bool relu_at_eval = false) {
    if (grid.empty()) throw InputError("select_lambda: empty lambda grid");
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end());

    bool found = false;
    SelectedFit best;
    std::string last_error = "no grid points";
    for (double lambda : sorted) {
        try {
            AnyModel mdl;
            if (arch == Arch::ko) {
                KoModel ko = fit_ko_ridge(train, fm, lambda);
                ko.relu_at_eval = relu_at_eval;
                mdl = std::move(ko);
            } else {
                FcModel fc = fit_fc_ridge(train, lambda);
                fc.relu_at_eval = relu_at_eval;
                mdl = std::move(fc);
            }
            const double err = mean_metric(mdl, val, Metric::mse);
            if (!found || err < best.val_error) {
                best = SelectedFit{lambda, err, std::move(mdl)};
                found = true;
            }
        } catch (const NumericError& e) {
            last_error = e.what();
        }
    }
    if (!found) throw NumericError("select_lambda: every grid point failed; last: " + last_error);
    return best;
}

/// Weight dump: header line `<arch>,<h>,<v>,<b>`, then the weights in
/// row-major order, one row per line (the diagonal weighting is one line).
inline void write_weights_csv(const std::string& path, const KoModel& mdl) {
    std::ofstream out(path);
    if (!out) throw InputError("write_weights_csv: cannot open " + path);
    const Geometry& g = mdl.fm->geometry;
    out << "ko," << g.h << ',' << g.v << ',' << g.b << '\n';
    char buf[32];
    for (long i = 0; i < mdl.weights.size(); ++i) {
        if (i) out << ',';
        std::snprintf(buf, sizeof buf, "%.17g", mdl.weights[i]);
        out << buf;
    }
    out << '\n';
}

inline void write_weights_csv(const std::string& path, const FcModel& mdl,
                              const Geometry& geometry) {
    std::ofstream out(path);
    if (!out) throw InputError("write_weights_csv: cannot open " + path);
    out << "fc," << geometry.h << ',' << geometry.v << ',' << geometry.b << '\n';
    char buf[32];
    for (long i = 0; i < mdl.m.rows(); ++i) {
        for (long j = 0; j < mdl.m.cols(); ++j) {
            if (j) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", mdl.m(i, j));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace kobound

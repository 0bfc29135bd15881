#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "kobound/errors.hpp"
#include "kobound/image.hpp"

namespace kobound {

/// Parallel-beam acquisition: h-pixel image side, v views over
/// angular_range_deg, b detector bins per view.
struct Geometry {
    int h = 0;
    int v = 0;
    int b = 0;
    double angular_range_deg = 180.0;
};

inline void validate(const Geometry& g) {
    if (g.h < 2) throw InputError("geometry: h must be >= 2");
    if (g.v < 1) throw InputError("geometry: v must be >= 1");
    if (g.b < 1) throw InputError("geometry: b must be >= 1");
}

/// Desk-scale defaults: v = round(1.25 h) equally spaced views over 180
/// degrees, b = h bins.
inline Geometry surrogate_geometry(int h) {
    Geometry g;
    g.h = h;
    g.v = static_cast<int>(std::lround(1.25 * h));
    g.b = h;
    return g;
}

/// View angle of view index v, in radians. Endpoint excluded: theta_v =
/// v * range / V.
inline double view_angle(const Geometry& g, int view) {
    return (static_cast<double>(view) * g.angular_range_deg / g.v) * std::numbers::pi / 180.0;
}

struct Sinogram {
    Eigen::MatrixXd values;  // views x bins

    Sinogram() = default;
    Sinogram(int views, int bins) : values(Eigen::MatrixXd::Zero(views, bins)) {}

    int views() const { return static_cast<int>(values.rows()); }
    int bins() const { return static_cast<int>(values.cols()); }
};

/// View-major flattening: entry v*B + j holds values(v, j).
inline Eigen::VectorXd flatten(const Sinogram& s) {
    Eigen::VectorXd out(static_cast<long>(s.views()) * s.bins());
    for (int v = 0; v < s.views(); ++v)
        for (int j = 0; j < s.bins(); ++j) out[static_cast<long>(v) * s.bins() + j] = s.values(v, j);
    return out;
}

inline Sinogram sinogram_from_flat(const Eigen::VectorXd& x, int views, int bins) {
    if (x.size() != static_cast<long>(views) * bins)
        throw InputError("sinogram_from_flat: length does not match views*bins");
    Sinogram s(views, bins);
    for (int v = 0; v < views; ++v)
        for (int j = 0; j < bins; ++j) s.values(v, j) = x[static_cast<long>(v) * bins + j];
    return s;
}

namespace detail {

/// Index-space source location for output pixel (i, j) rotated by `angle`
/// about the image center c = (h-1)/2. Equivalent to rotating the pixel's
/// continuous coordinate by -angle (the 2/h scale cancels in the rotation).
struct SourcePoint {
    double row, col;
};

inline SourcePoint rotated_source(int i, int j, int h, double cos_a, double sin_a) {
    const double c = 0.5 * (h - 1);
    const double di = i - c, dj = j - c;
    return {c + di * cos_a + dj * sin_a, c - di * sin_a + dj * cos_a};
}

}  // namespace detail

/// Bilinear rotation: output (i, j) samples the input at the location of
/// (i, j) rotated by -angle about the center; out-of-bounds samples are 0.
/// angle = 0 reproduces the input bit-exactly.
inline Image rotate_bilinear(const Image& img, double angle) {
    const int h = img.side();
    const double cos_a = std::cos(angle), sin_a = std::sin(angle);
    Image out(h);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < h; ++j) {
            const auto src = detail::rotated_source(i, j, h, cos_a, sin_a);
            const double fr = std::floor(src.row), fc = std::floor(src.col);
            const int r0 = static_cast<int>(fr), c0 = static_cast<int>(fc);
            const double wr = src.row - fr, wc = src.col - fc;
            double acc = 0.0;
            for (int dr = 0; dr < 2; ++dr) {
                const int r = r0 + dr;
                if (r < 0 || r >= h) continue;
                const double wrow = dr ? wr : 1.0 - wr;
                if (wrow == 0.0) continue;
                for (int dc = 0; dc < 2; ++dc) {
                    const int c = c0 + dc;
                    if (c < 0 || c >= h) continue;
                    const double w = wrow * (dc ? wc : 1.0 - wc);
                    if (w != 0.0) acc += w * img.pixels(r, c);
                }
            }
            out.pixels(i, j) = acc;
        }
    }
    return out;
}

/// Rotate-and-sum projector: row v of the sinogram is the column-wise sum of
/// the image rotated by theta_v. Requires b == h, since bins are identified
/// with image columns.
inline Sinogram forward_project(const Image& img, const Geometry& g) {
    validate(g);
    if (img.side() != g.h) throw InputError("forward_project: image side != geometry h");
    if (g.b != g.h)
        throw InputError("forward_project: rotate-and-sum requires b == h (got b=" +
                         std::to_string(g.b) + ", h=" + std::to_string(g.h) + ")");
    Sinogram sino(g.v, g.b);
    for (int v = 0; v < g.v; ++v) {
        const Image rot = rotate_bilinear(img, view_angle(g, v));
        for (int j = 0; j < g.b; ++j) sino.values(v, j) = rot.pixels.col(j).sum();
    }
    return sino;
}

/// Dense system matrix A, (V*B) x H^2: column p is the forward projection of
/// the basis image with a 1 at pixel p. Assembled by scattering the bilinear
/// sampling weights of every view, which is the linearity expansion of
/// forward_project, so A * flatten(img) agrees with forward_project(img) up
/// to summation order.
inline Eigen::MatrixXd assemble_system_matrix(const Geometry& g) {
    validate(g);
    if (g.b != g.h) throw InputError("assemble_system_matrix: requires b == h");
    const int h = g.h;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<long>(g.v) * g.b,
                                              static_cast<long>(h) * h);
    for (int v = 0; v < g.v; ++v) {
        const double angle = view_angle(g, v);
        const double cos_a = std::cos(angle), sin_a = std::sin(angle);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < h; ++j) {
                const long row = static_cast<long>(v) * g.b + j;  // bin = column index
                const auto src = detail::rotated_source(i, j, h, cos_a, sin_a);
                const double fr = std::floor(src.row), fc = std::floor(src.col);
                const int r0 = static_cast<int>(fr), c0 = static_cast<int>(fc);
                const double wr = src.row - fr, wc = src.col - fc;
                for (int dr = 0; dr < 2; ++dr) {
                    const int r = r0 + dr;
                    if (r < 0 || r >= h) continue;
                    const double wrow = dr ? wr : 1.0 - wr;
                    for (int dc = 0; dc < 2; ++dc) {
                        const int c = c0 + dc;
                        if (c < 0 || c >= h) continue;
                        const double w = wrow * (dc ? wc : 1.0 - wc);
                        if (w != 0.0) a(row, static_cast<long>(r) * h + c) += w;
                    }
                }
            }
        }
    }
    return a;
}

/// Tikhonov-regularized pseudo-inverse (A^T A + alpha I)^-1 A^T via a dense
/// SPD Cholesky solve.
inline Eigen::MatrixXd tikhonov_pseudo_inverse(const Eigen::MatrixXd& a, double alpha = 0.1) {
    if (!(alpha > 0.0)) throw InputError("tikhonov_pseudo_inverse: alpha must be > 0");
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw NumericError("tikhonov_pseudo_inverse: Cholesky factorization failed");
    Eigen::MatrixXd pinv = llt.solve(a.transpose());
    if (!pinv.allFinite())
        throw NumericError("tikhonov_pseudo_inverse: non-finite entries in solution");
    return pinv;
}

/// Discrete Ram-Lak taps (Kak & Slaney): center 1/4, odd offsets n ->
/// -1/(pi^2 n^2), even nonzero offsets -> 0, wrapped circulantly so index m
/// carries the minimum-magnitude offset congruent to m mod b.
inline Eigen::VectorXd ramp_filter_circulant(int b) {
    if (b < 2) throw InputError("ramp_filter_circulant: need at least 2 bins");
    Eigen::VectorXd kernel(b);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int m = 0; m < b; ++m) {
        const long n = (m <= b / 2) ? m : m - b;
        if (n == 0)
            kernel[m] = 0.25;
        else if (n % 2 != 0)
            kernel[m] = -1.0 / (pi2 * static_cast<double>(n) * static_cast<double>(n));
        else
            kernel[m] = 0.0;
    }
    return kernel;
}

/// Circular convolution of each sinogram row with the kernel:
/// out(v, j) = sum_m kernel[m] * in(v, (j - m) mod b).
inline Sinogram apply_circulant_filter(const Sinogram& sino, const Eigen::VectorXd& kernel) {
    const int b = sino.bins();
    if (kernel.size() != b) throw InputError("apply_circulant_filter: kernel length != bins");
    Sinogram out(sino.views(), b);
    for (int v = 0; v < sino.views(); ++v)
        for (int j = 0; j < b; ++j) {
            double acc = 0.0;
            for (int m = 0; m < b; ++m) acc += kernel[m] * sino.values(v, (j - m + b) % b);
            out.values(v, j) = acc;
        }
    return out;
}

/// The b x b matrix of the circular convolution, C(i, j) = kernel[(i-j) mod b].
inline Eigen::MatrixXd circulant_matrix(const Eigen::VectorXd& kernel) {
    const int b = static_cast<int>(kernel.size());
    Eigen::MatrixXd c(b, b);
    for (int i = 0; i < b; ++i)
        for (int j = 0; j < b; ++j) c(i, j) = kernel[((i - j) % b + b) % b];
    return c;
}

struct SpectralNormEstimate {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Largest singular value by power iteration on M^T M, started from the
/// normalized all-ones vector so repeated runs cache identically. Stops when
/// successive estimates differ by less than tol relatively.
inline SpectralNormEstimate operator_norm(const Eigen::MatrixXd& m, double tol = 1e-9,
                                          int max_iter = 10000) {
    if (!(tol > 0.0)) throw InputError("operator_norm: tol must be > 0");
    if (max_iter < 1) throw InputError("operator_norm: max_iter must be >= 1");
    if (m.size() == 0 || m.isZero(0.0)) return {0.0, true, 0};

    Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
    v /= v.norm();
    double prev = 0.0;
    SpectralNormEstimate est;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = m.transpose() * (m * v);
        const double lambda = y.norm();  // Rayleigh growth of M^T M
        est.iterations = it;
        if (lambda == 0.0) {
            // start vector fell in the null space; cannot make progress
            est.value = 0.0;
            est.converged = false;
            return est;
        }
        est.value = std::sqrt(lambda);
        if (it > 1 && std::abs(est.value - prev) < tol * est.value) {
            est.converged = true;
            return est;
        }
        prev = est.value;
        v = y / lambda;
    }
    est.converged = false;
    return est;
}

/// Forward-model bundle: the system matrix with its Tikhonov pseudo-inverse,
/// the circulant reconstruction filter, and cached operator norms.
struct ForwardModel {
    Geometry geometry;
    Eigen::MatrixXd a;            // (V*B) x H^2
    Eigen::MatrixXd a_pinv;       // H^2 x (V*B)
    Eigen::MatrixXd a_pinv_gram;  // a_pinv^T a_pinv, cached for ridge fits
    Eigen::VectorXd filter_k;     // length-B circulant taps
    double norm_k = 0.0;          // ||K||_2
    double norm_at = 0.0;         // ||A^T||_2
};

inline ForwardModel make_forward_model(const Geometry& g, double alpha = 0.1) {
    validate(g);
    ForwardModel fm;
    fm.geometry = g;
    fm.a = assemble_system_matrix(g);
    fm.a_pinv = tikhonov_pseudo_inverse(fm.a, alpha);
    fm.a_pinv_gram = fm.a_pinv.transpose() * fm.a_pinv;
    fm.filter_k = ramp_filter_circulant(g.b);
    fm.norm_k = operator_norm(circulant_matrix(fm.filter_k)).value;
    fm.norm_at = operator_norm(fm.a.transpose()).value;
    return fm;
}

/// A^T applied to the flattened sinogram, reshaped to an image.
inline Image backproject(const Sinogram& sino, const ForwardModel& fm) {
    const Geometry& g = fm.geometry;
    if (sino.views() != g.v || sino.bins() != g.b)
        throw InputError("backproject: sinogram shape does not match geometry");
    Eigen::VectorXd img = fm.a.transpose() * flatten(sino);
    return image_from_flat(img, g.h);
}

inline Image relu(const Image& img) {
    Image out = img;
    out.pixels = out.pixels.cwiseMax(0.0);
    return out;
}

}  // namespace kobound

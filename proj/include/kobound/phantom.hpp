#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "kobound/errors.hpp"
#include "kobound/image.hpp"
#include "kobound/rng.hpp"

namespace kobound {

/// One random ellipse of the phantom population. Orientation is in radians,
/// half-open on [0, pi).
struct Ellipse {
    double amplitude;   // [0.2, 1.0]
    double cx, cy;      // each in [-0.5, 0.5]
    double a, b;        // semi-axes, each in [0.08, 0.4]
    double orientation; // [0, pi)

    /// True if (x, y) lies inside: translate by -center, rotate by
    /// -orientation, then test (u/a)^2 + (v/b)^2 <= 1.
    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double c = std::cos(orientation), s = std::sin(orientation);
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        return (u / a) * (u / a) + (v / b) * (v / b) <= 1.0;
    }
};

inline constexpr double kIntensityCap = 1.5;

/// Draws the six fields in fixed order (amplitude, cx, cy, a, b, orientation),
/// one uniform each, so streams can be audited draw by draw.
template <typename UnitSource>
Ellipse sample_ellipse(UnitSource& rng) {
    Ellipse e;
    e.amplitude = 0.2 + rng.next_unit() * 0.8;
    e.cx = -0.5 + rng.next_unit();
    e.cy = -0.5 + rng.next_unit();
    e.a = 0.08 + rng.next_unit() * 0.32;
    e.b = 0.08 + rng.next_unit() * 0.32;
    e.orientation = rng.next_unit() * std::numbers::pi;
    return e;
}

/// Random-ellipse phantom: the ellipse count k is drawn first (uniform on
/// {1,2,3,4}), then k ellipses, 6 draws each. A pixel's intensity is the sum
/// of the amplitudes of the ellipses containing its center, clipped to
/// [0, 1.5]. No edge anti-aliasing.
template <typename UnitSource>
Image generate_phantom(UnitSource& rng, int h) {
    if (h < 2) throw InputError("generate_phantom: side must be >= 2");

    const int k = 1 + static_cast<int>(std::min(3.0, std::floor(rng.next_unit() * 4.0)));
    std::vector<Ellipse> ellipses;
    ellipses.reserve(k);
    for (int i = 0; i < k; ++i) ellipses.push_back(sample_ellipse(rng));

    Image img(h);
    for (int i = 0; i < h; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / h;
        for (int j = 0; j < h; ++j) {
            const double x = 2.0 * (j + 0.5) / h - 1.0;
            double value = 0.0;
            for (const Ellipse& e : ellipses)
                if (e.contains(x, y)) value += e.amplitude;
            img.pixels(i, j) = std::min(value, kIntensityCap);
        }
    }
    return img;
}

/// `count` phantoms from a single SplitMix64 stream; element i is what
/// generate_phantom returns after i earlier phantoms consumed the stream.
inline std::vector<Image> generate_pool(std::uint64_t seed, int count, int h) {
    if (count < 1) throw InputError("generate_pool: count must be >= 1");
    SplitMix64 rng(seed);
    std::vector<Image> pool;
    pool.reserve(count);
    for (int i = 0; i < count; ++i) pool.push_back(generate_phantom(rng, h));
    return pool;
}

/// Debug export: one image per file, row-major, one CSV row per pixel row.
inline void write_image_csv(const std::string& path, const Image& img) {
    std::ofstream out(path);
    if (!out) throw InputError("write_image_csv: cannot open " + path);
    const int h = img.side();
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < h; ++j) {
            if (j) out << ',';
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", img.pixels(i, j));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace kobound

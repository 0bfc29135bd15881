#pragma once

#include <Eigen/Dense>

#include "kobound/errors.hpp"

namespace kobound {

/// Square grayscale image. pixels(i, j) is row i (top to bottom), column j
/// (left to right). The continuous domain is [-1, 1]^2 with pixel (i, j)
/// centered at x = 2(j + 0.5)/h - 1, y = 1 - 2(i + 0.5)/h.
struct Image {
    Eigen::MatrixXd pixels;

    Image() = default;
    explicit Image(int side) : pixels(Eigen::MatrixXd::Zero(side, side)) {}

    int side() const { return static_cast<int>(pixels.rows()); }
};

/// Row-major flattening: entry i*h + j holds pixels(i, j).
inline Eigen::VectorXd flatten(const Image& img) {
    const int h = img.side();
    Eigen::VectorXd v(static_cast<long>(h) * h);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) v[static_cast<long>(i) * h + j] = img.pixels(i, j);
    return v;
}

inline Image image_from_flat(const Eigen::VectorXd& v, int h) {
    if (v.size() != static_cast<long>(h) * h)
        throw InputError("image_from_flat: length does not match side*side");
    Image img(h);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j) img.pixels(i, j) = v[static_cast<long>(i) * h + j];
    return img;
}

}  // namespace kobound

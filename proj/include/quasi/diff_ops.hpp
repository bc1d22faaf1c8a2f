#pragma once

#include <cmath>
#include <cstddef>

#include "quasi/image.hpp"

namespace quasi {

/// Forward differences of an image. The last column of gx and the last row of gy are zero.
struct GradientField {
    Image2D gx;
    Image2D gy;

    GradientField() = default;
    GradientField(std::size_t width, std::size_t height, double fill = 0.0)
        : gx(width, height, fill), gy(width, height, fill) {}
    GradientField(Image2D x, Image2D y) : gx(std::move(x)), gy(std::move(y)) {
        require_same_shape(gx, gy, "gradient field components");
    }

    std::size_t width() const noexcept { return gx.width(); }
    std::size_t height() const noexcept { return gx.height(); }

    friend bool operator==(const GradientField&, const GradientField&) = default;
};

inline GradientField operator+(GradientField a, const GradientField& b) {
    return {std::move(a.gx) + b.gx, std::move(a.gy) + b.gy};
}

inline GradientField operator-(GradientField a, const GradientField& b) {
    return {std::move(a.gx) - b.gx, std::move(a.gy) - b.gy};
}

inline double dot(const GradientField& a, const GradientField& b) {
    return dot(a.gx, b.gx) + dot(a.gy, b.gy);
}

inline GradientField gradient(const Image2D& f) {
    const std::size_t w = f.width(), h = f.height();
    GradientField g(w, h);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (x + 1 < w) g.gx(x, y) = f(x + 1, y) - f(x, y);
            if (y + 1 < h) g.gy(x, y) = f(x, y + 1) - f(x, y);
        }
    }
    return g;
}

/// Adjoint of gradient(): the negative divergence under the same Neumann convention.
/// Entries of g in the last column (gx) and last row (gy) do not contribute.
inline Image2D gradient_adjoint(const GradientField& g) {
    require_same_shape(g.gx, g.gy, "gradient_adjoint");
    const std::size_t w = g.width(), h = g.height();
    Image2D out(w, h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0.0;
            if (x + 1 < w) acc -= g.gx(x, y);
            if (x >= 1) acc += g.gx(x - 1, y);
            if (y + 1 < h) acc -= g.gy(x, y);
            if (y >= 1) acc += g.gy(x, y - 1);
            out(x, y) = acc;
        }
    }
    return out;
}

/// grad^T grad f without materializing the intermediate field.
inline Image2D gradient_normal(const Image2D& f) {
    const std::size_t w = f.width(), h = f.height();
    Image2D out(w, h, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const double c = f(x, y);
            double acc = 0.0;
            if (x + 1 < w) acc += c - f(x + 1, y);
            if (x >= 1) acc += c - f(x - 1, y);
            if (y + 1 < h) acc += c - f(x, y + 1);
            if (y >= 1) acc += c - f(x, y - 1);
            out(x, y) = acc;
        }
    }
    return out;
}

/// Anisotropic total variation: sum of |gx| + |gy|.
inline double tv_value(const Image2D& f) {
    const GradientField g = gradient(f);
    return l1_norm(g.gx) + l1_norm(g.gy);
}

}  // namespace quasi

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "quasi/image.hpp"

namespace quasi {

/// Sliding-window p-quantile. Windows are square with odd side length and use replicate padding.
struct QuantileConfig {
    double p = 0.5;
    std::size_t window = 3;

    void validate() const {
        detail::require(p >= 0.0 && p <= 1.0, ErrorKind::Config, "quantile p must lie in [0, 1]");
        detail::require(window >= 1 && window % 2 == 1, ErrorKind::Config,
                        "quantile window must be an odd positive integer");
    }

    /// 0-based order-statistic rank within a full window of n = window^2 elements.
    std::size_t rank() const {
        const std::size_t n = window * window;
        return static_cast<std::size_t>(std::lround(p * static_cast<double>(n - 1)));
    }
};

/// Compressed form of the binary row-stochastic matrix Q: row i has its single 1 in column
/// source[i]. Applying Q is a gather, applying Q^T a scatter-add.
class QuantileLinearization {
public:
    QuantileLinearization() = default;
    QuantileLinearization(std::size_t width, std::size_t height, std::vector<std::uint32_t> source)
        : width_(width), height_(height), source_(std::move(source)) {
        detail::require(source_.size() == width_ * height_, ErrorKind::DimensionMismatch,
                        "linearization size does not match image size");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return source_.size(); }
    std::uint32_t source(std::size_t i) const noexcept { return source_[i]; }
    const std::vector<std::uint32_t>& sources() const noexcept { return source_; }

    friend bool operator==(const QuantileLinearization&, const QuantileLinearization&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint32_t> source_;
};

namespace detail {

struct WindowSelection {
    double value;
    std::uint32_t source;
};

/// Visits every pixel with the flat indices of its replicate-padded window and hands back the
/// selected order statistic together with its smallest-index source.
template <class Sink>
void scan_quantile_windows(const Image2D& f, const QuantileConfig& cfg, Sink&& sink) {
    cfg.validate();
    const auto w = static_cast<std::ptrdiff_t>(f.width());
    const auto h = static_cast<std::ptrdiff_t>(f.height());
    const auto r = static_cast<std::ptrdiff_t>(cfg.window / 2);
    const std::size_t rank = cfg.rank();

    std::vector<std::uint32_t> idx(cfg.window * cfg.window);
    std::vector<double> vals(idx.size());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
                const std::ptrdiff_t yy = std::clamp(y + dy, std::ptrdiff_t{0}, h - 1);
                for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
                    const std::ptrdiff_t xx = std::clamp(x + dx, std::ptrdiff_t{0}, w - 1);
                    idx[n] = static_cast<std::uint32_t>(yy * w + xx);
                    vals[n] = f[idx[n]];
                    ++n;
                }
            }
            std::nth_element(vals.begin(), vals.begin() + static_cast<long>(rank), vals.end());
            const double q = vals[rank];
            std::uint32_t best = UINT32_MAX;
            for (std::uint32_t j : idx)
                if (f[j] == q && j < best) best = j;
            sink(static_cast<std::size_t>(y * w + x), WindowSelection{q, best});
        }
    }
}

}  // namespace detail

/// Pixelwise p-quantile of the window centred on each pixel.
inline Image2D quantile_filter(const Image2D& f, const QuantileConfig& cfg) {
    Image2D out(f.width(), f.height());
    detail::scan_quantile_windows(f, cfg, [&](std::size_t i, detail::WindowSelection s) { out[i] = s.value; });
    return out;
}

/// Position of the selected quantile in every window. Ties go to the smallest flat index, and a
/// replicated border element resolves to the in-bounds pixel it copies.
inline QuantileLinearization assemble_linearization(const Image2D& f, const QuantileConfig& cfg) {
    detail::require(f.size() < UINT32_MAX, ErrorKind::InvalidInput, "image too large for 32-bit indices");
    std::vector<std::uint32_t> src(f.size());
    detail::scan_quantile_windows(f, cfg, [&](std::size_t i, detail::WindowSelection s) { src[i] = s.source; });
    return {f.width(), f.height(), std::move(src)};
}

inline void require_matching(const QuantileLinearization& q, const Image2D& x) {
    detail::require(q.width() == x.width() && q.height() == x.height(), ErrorKind::DimensionMismatch,
                    "linearization is " + std::to_string(q.width()) + "x" + std::to_string(q.height()) +
                        ", image is " + std::to_string(x.width()) + "x" + std::to_string(x.height()));
}

/// (Q x)_i = x[source[i]]
inline Image2D apply_q(const QuantileLinearization& q, const Image2D& x) {
    require_matching(q, x);
    Image2D out(x.width(), x.height());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[q.source(i)];
    return out;
}

/// (Q^T x)_j = sum over i with source[i] == j of x_i
inline Image2D apply_q_transpose(const QuantileLinearization& q, const Image2D& x) {
    require_matching(q, x);
    Image2D out(x.width(), x.height(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) out[q.source(i)] += x[i];
    return out;
}

/// x - Q x
inline Image2D apply_i_minus_q(const QuantileLinearization& q, const Image2D& x) {
    require_matching(q, x);
    Image2D out(x.width(), x.height());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - x[q.source(i)];
    return out;
}

/// x - Q^T x
inline Image2D apply_i_minus_q_transpose(const QuantileLinearization& q, const Image2D& x) {
    require_matching(q, x);
    Image2D out = x;
    for (std::size_t i = 0; i < x.size(); ++i) out[q.source(i)] -= x[i];
    return out;
}

/// L1 distance between f and its quantile-filtered version.
inline double quasi_prior_value(const Image2D& f, const QuantileConfig& cfg) {
    double acc = 0.0;
    detail::scan_quantile_windows(f, cfg, [&](std::size_t i, detail::WindowSelection s) {
        acc += std::abs(f[i] - s.value);
    });
    return acc;
}

}  // namespace quasi

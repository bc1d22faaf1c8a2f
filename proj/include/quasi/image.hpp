#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quasi/error.hpp"

namespace quasi {

/// Single-channel real image, row-major. Pixel (x, y) lives at y * width + x.
class Image2D {
public:
    Image2D() = default;

    Image2D(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), data_(width * height, fill) {}

    Image2D(std::size_t width, std::size_t height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        detail::require(data_.size() == width_ * height_, ErrorKind::DimensionMismatch,
                        "pixel buffer of length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(width_) + "x" +
                            std::to_string(height_));
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
    double operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> pixels() noexcept { return data_; }
    std::span<const double> pixels() const noexcept { return data_; }
    const std::vector<double>& vector() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    bool same_shape(const Image2D& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Image2D&, const Image2D&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Image2D& a, const Image2D& b, const char* what) {
    detail::require(a.same_shape(b), ErrorKind::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.width()) + "x" +
                        std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()));
}

// Small elementwise helpers used throughout the solver.

inline Image2D operator+(Image2D a, const Image2D& b) {
    require_same_shape(a, b, "image addition");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline Image2D operator-(Image2D a, const Image2D& b) {
    require_same_shape(a, b, "image subtraction");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}

inline Image2D operator*(double s, Image2D a) {
    for (auto& v : a) v *= s;
    return a;
}

inline double dot(const Image2D& a, const Image2D& b) {
    require_same_shape(a, b, "dot product");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double l1_norm(const Image2D& a) {
    double acc = 0.0;
    for (double v : a) acc += std::abs(v);
    return acc;
}

enum class Domain { Linear, Log };

inline const char* to_string(Domain d) { return d == Domain::Linear ? "linear" : "log"; }

/// K registered frames of identical size, all in the same intensity domain.
class BScanStack {
public:
    BScanStack(std::vector<Image2D> frames, Domain domain)
        : frames_(std::move(frames)), domain_(domain) {
        detail::require(!frames_.empty(), ErrorKind::InvalidInput, "stack needs at least one frame");
        for (std::size_t k = 1; k < frames_.size(); ++k)
            detail::require(frames_[k].same_shape(frames_[0]), ErrorKind::DimensionMismatch,
                            "frame " + std::to_string(k) + " differs in size from frame 0");
    }

    std::size_t count() const noexcept { return frames_.size(); }
    std::size_t width() const noexcept { return frames_.front().width(); }
    std::size_t height() const noexcept { return frames_.front().height(); }
    Domain domain() const noexcept { return domain_; }

    const Image2D& operator[](std::size_t k) const noexcept { return frames_[k]; }
    const std::vector<Image2D>& frames() const noexcept { return frames_; }

    /// First `k` frames as a new stack.
    BScanStack take(std::size_t k) const {
        detail::require(k >= 1 && k <= frames_.size(), ErrorKind::Config,
                        "requested " + std::to_string(k) + " frames from a stack of " +
                            std::to_string(frames_.size()));
        return {std::vector<Image2D>(frames_.begin(), frames_.begin() + static_cast<long>(k)),
                domain_};
    }

    friend bool operator==(const BScanStack&, const BScanStack&) = default;

private:
    std::vector<Image2D> frames_;
    Domain domain_;
};

inline constexpr double kDefaultIntensityFloor = 1e-6;

/// Pixelwise ln(max(x, floor)).
inline BScanStack to_log(const BScanStack& stack, double floor = kDefaultIntensityFloor) {
    detail::require(stack.domain() == Domain::Linear, ErrorKind::InvalidInput,
                    "to_log expects a linear-domain stack");
    detail::require(floor > 0.0 && std::isfinite(floor), ErrorKind::InvalidInput,
                    "intensity floor must be positive");
    std::vector<Image2D> out;
    out.reserve(stack.count());
    for (std::size_t k = 0; k < stack.count(); ++k) {
        Image2D img = stack[k];
        for (double& v : img) {
            detail::require(std::isfinite(v), ErrorKind::InvalidInput,
                            "non-finite pixel in frame " + std::to_string(k));
            v = std::log(std::max(v, floor));
        }
        out.push_back(std::move(img));
    }
    return {std::move(out), Domain::Log};
}

inline Image2D exp_image(Image2D img) {
    for (double& v : img) {
        const double e = std::exp(v);
        detail::require(std::isfinite(e), ErrorKind::NumericRange,
                        "exp overflow for log value " + std::to_string(v));
        v = e;
    }
    return img;
}

inline BScanStack from_log(const BScanStack& stack) {
    detail::require(stack.domain() == Domain::Log, ErrorKind::InvalidInput,
                    "from_log expects a log-domain stack");
    std::vector<Image2D> out;
    out.reserve(stack.count());
    for (const auto& f : stack.frames()) out.push_back(exp_image(f));
    return {std::move(out), Domain::Linear};
}

/// Pixelwise arithmetic mean of all frames.
inline Image2D frame_mean(const BScanStack& stack) {
    Image2D mean(stack.width(), stack.height(), 0.0);
    for (const auto& f : stack.frames())
        for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
    const double inv = 1.0 / static_cast<double>(stack.count());
    for (double& v : mean) v *= inv;
    return mean;
}

/// Log compression of a normalized linear image onto [0, 1]: 0 at the floor, 1 at intensity 1.
inline Image2D to_display(const Image2D& linear, double floor = kDefaultIntensityFloor) {
    Image2D out = linear;
    const double lf = std::log(floor);
    for (double& v : out) v = (std::log(std::max(v, floor)) - lf) / -lf;
    return out;
}

}  // namespace quasi

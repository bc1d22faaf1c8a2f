#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "quasi/image.hpp"

namespace quasi {

/// Integer translation. Applying Shift{dx, dy} moves image content by +dx columns and +dy rows.
struct Shift {
    int dx = 0;
    int dy = 0;
    friend bool operator==(const Shift&, const Shift&) = default;
};

/// out(x, y) = img(x - dx, y - dy), with coordinates clamped to the frame (edge replication).
inline Image2D shift_image(const Image2D& img, Shift s) {
    const auto w = static_cast<long>(img.width());
    const auto h = static_cast<long>(img.height());
    Image2D out(img.width(), img.height());
    for (long y = 0; y < h; ++y) {
        const long sy = std::clamp(y - s.dy, 0L, h - 1);
        for (long x = 0; x < w; ++x) {
            const long sx = std::clamp(x - s.dx, 0L, w - 1);
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
                img(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
        }
    }
    return out;
}

/// Normalized cross-correlation between reference(x, y) and moving(x - dx, y - dy) over the
/// pixels where both are defined. Returns -2 when either side is flat on the overlap.
inline double overlap_ncc(const Image2D& reference, const Image2D& moving, Shift s) {
    const long w = static_cast<long>(reference.width());
    const long h = static_cast<long>(reference.height());
    const long x0 = std::max(0L, static_cast<long>(s.dx)), x1 = std::min(w, w + s.dx);
    const long y0 = std::max(0L, static_cast<long>(s.dy)), y1 = std::min(h, h + s.dy);
    if (x1 <= x0 || y1 <= y0) return -2.0;

    double sr = 0, sm = 0, srr = 0, smm = 0, srm = 0;
    for (long y = y0; y < y1; ++y) {
        for (long x = x0; x < x1; ++x) {
            const double r = reference(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
            const double m = moving(static_cast<std::size_t>(x - s.dx), static_cast<std::size_t>(y - s.dy));
            sr += r;
            sm += m;
            srr += r * r;
            smm += m * m;
            srm += r * m;
        }
    }
    const double n = static_cast<double>((x1 - x0) * (y1 - y0));
    const double vr = srr - sr * sr / n;
    const double vm = smm - sm * sm / n;
    if (vr <= 0.0 || vm <= 0.0) return -2.0;
    return (srm - sr * sm / n) / std::sqrt(vr * vm);
}

/// Correction that best aligns `moving` onto `reference`, searched exhaustively within
/// +-radius. Ties prefer the smaller displacement.
inline Shift estimate_shift(const Image2D& reference, const Image2D& moving, int radius = 16) {
    require_same_shape(reference, moving, "registration");
    const int rx = std::min(radius, static_cast<int>(reference.width() - 1) / 2);
    const int ry = std::min(radius, static_cast<int>(reference.height() - 1) / 2);
    Shift best{};
    double best_score = -3.0;
    for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
            const double score = overlap_ncc(reference, moving, {dx, dy});
            const bool closer = std::abs(dx) + std::abs(dy) < std::abs(best.dx) + std::abs(best.dy);
            if (score > best_score || (score == best_score && closer)) {
                best_score = score;
                best = {dx, dy};
            }
        }
    }
    return best;
}

/// Copy used only for matching: log-compressed (for linear input) and 3x3 box-smoothed, which
/// keeps bright speckle from dominating the correlation.
inline Image2D matching_image(const Image2D& img, Domain domain, double floor = kDefaultIntensityFloor) {
    Image2D src = img;
    if (domain == Domain::Linear)
        for (double& v : src) v = std::log(std::max(v, floor));
    const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
    Image2D out(img.width(), img.height());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            double sum = 0.0;
            int n = 0;
            for (long yy = std::max(0L, y - 1); yy <= std::min(h - 1, y + 1); ++yy)
                for (long xx = std::max(0L, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
                    sum += src(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
                    ++n;
                }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = sum / n;
        }
    return out;
}

struct RegistrationResult {
    BScanStack stack;
    std::vector<Shift> shifts;  ///< correction applied to each frame; zero for the central one
    std::size_t reference_index = 0;
};

inline bool is_flat(const Image2D& img) {
    return std::all_of(img.begin(), img.end(), [&](double v) { return v == img[0]; });
}

/// Aligns every frame to the central one (index K / 2) by integer translation. Matching runs on
/// matching_image copies; the shifts are applied to the original frames.
inline RegistrationResult register_stack(const BScanStack& stack, int radius = 16) {
    detail::require(radius >= 0, ErrorKind::Config, "registration search radius must be >= 0");
    const std::size_t centre = stack.count() / 2;
    if (stack.count() == 1) return {stack, {Shift{}}, 0};

    for (std::size_t k = 0; k < stack.count(); ++k)
        detail::require(!is_flat(stack[k]), ErrorKind::Registration,
                        "frame " + std::to_string(k) + " is constant and cannot be registered");

    const Image2D reference = matching_image(stack[centre], stack.domain());
    std::vector<Image2D> frames;
    std::vector<Shift> shifts;
    for (std::size_t k = 0; k < stack.count(); ++k) {
        if (k == centre) {
            frames.push_back(stack[k]);
            shifts.push_back({});
            continue;
        }
        const Shift s = estimate_shift(reference, matching_image(stack[k], stack.domain()), radius);
        frames.push_back(s == Shift{} ? stack[k] : shift_image(stack[k], s));
        shifts.push_back(s);
    }
    return {BScanStack(std::move(frames), stack.domain()), std::move(shifts), centre};
}

}  // namespace quasi

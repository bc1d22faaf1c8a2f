#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quasi/image.hpp"

namespace quasi {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE). Identical images give +inf.
inline double psnr(const Image2D& test, const Image2D& reference, double peak = 1.0) {
    require_same_shape(test, reference, "psnr");
    detail::require(peak > 0.0, ErrorKind::InvalidInput, "PSNR peak must be positive");
    detail::require(!test.empty(), ErrorKind::InvalidInput, "PSNR of an empty image");
    double sse = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const double d = test[i] - reference[i];
        sse += d * d;
    }
    if (sse == 0.0) return kInfinity;
    const double mse = sse / static_cast<double>(test.size());
    return 10.0 * std::log10(peak * peak / mse);
}

// SSIM with the usual 11x11 Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, averaged over
// all fully contained window positions.

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

inline std::array<double, kSsimWindow> ssim_kernel_1d() {
    std::array<double, kSsimWindow> k{};
    const double c = static_cast<double>(kSsimWindow / 2);
    double sum = 0.0;
    for (std::size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - c;
        k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace detail {

/// Separable "valid" Gaussian filtering; output is (w - 10) x (h - 10).
inline Image2D gaussian_valid(const Image2D& in) {
    const auto k = ssim_kernel_1d();
    const std::size_t w = in.width(), h = in.height();
    const std::size_t ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
    Image2D rows(ow, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < kSsimWindow; ++t) acc += k[t] * in(x + t, y);
            rows(x, y) = acc;
        }
    Image2D out(ow, oh);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t t = 0; t < kSsimWindow; ++t) acc += k[t] * rows(x, y + t);
            out(x, y) = acc;
        }
    return out;
}

}  // namespace detail

inline double ssim(const Image2D& test, const Image2D& reference, double peak = 1.0) {
    require_same_shape(test, reference, "ssim");
    detail::require(test.width() >= kSsimWindow && test.height() >= kSsimWindow, ErrorKind::InvalidInput,
                    "SSIM needs images of at least 11x11");
    detail::require(peak > 0.0, ErrorKind::InvalidInput, "SSIM peak must be positive");

    Image2D xx = test, yy = reference, xy = test;
    for (std::size_t i = 0; i < test.size(); ++i) {
        xx[i] = test[i] * test[i];
        yy[i] = reference[i] * reference[i];
        xy[i] = test[i] * reference[i];
    }
    const Image2D mx = detail::gaussian_valid(test);
    const Image2D my = detail::gaussian_valid(reference);
    const Image2D sxx = detail::gaussian_valid(xx);
    const Image2D syy = detail::gaussian_valid(yy);
    const Image2D sxy = detail::gaussian_valid(xy);

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
               ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    return acc / static_cast<double>(mx.size());
}

struct Region {
    std::size_t x = 0, y = 0, w = 0, h = 0;
};

/// Hand-placed foreground regions and an optional background region for MSR/CNR.
struct RegionSet {
    std::vector<Region> foreground;
    std::optional<Region> background;
};

struct RegionStats {
    double mean = 0.0;
    double sd = 0.0;  ///< population convention (divide by n)
};

inline RegionStats region_stats(const Image2D& img, const Region& r) {
    detail::require(r.w > 0 && r.h > 0, ErrorKind::InvalidInput, "empty region");
    detail::require(r.x + r.w <= img.width() && r.y + r.h <= img.height(), ErrorKind::InvalidInput,
                    "region exceeds image bounds");
    double sum = 0.0;
    for (std::size_t y = r.y; y < r.y + r.h; ++y)
        for (std::size_t x = r.x; x < r.x + r.w; ++x) sum += img(x, y);
    const double n = static_cast<double>(r.w * r.h);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t y = r.y; y < r.y + r.h; ++y)
        for (std::size_t x = r.x; x < r.x + r.w; ++x) {
            const double d = img(x, y) - mean;
            ss += d * d;
        }
    return {mean, std::sqrt(ss / n)};
}

/// Mean over foreground regions of mean / sd. A flat region yields +inf.
inline double msr(const Image2D& img, const RegionSet& regions) {
    detail::require(!regions.foreground.empty(), ErrorKind::InvalidInput, "MSR needs foreground regions");
    double acc = 0.0;
    for (const auto& r : regions.foreground) {
        const RegionStats s = region_stats(img, r);
        acc += s.sd == 0.0 ? kInfinity : s.mean / s.sd;
    }
    return acc / static_cast<double>(regions.foreground.size());
}

/// Mean over foreground regions of |mu_f - mu_b| / sqrt((sd_f^2 + sd_b^2) / 2).
inline double cnr(const Image2D& img, const RegionSet& regions) {
    detail::require(!regions.foreground.empty(), ErrorKind::InvalidInput, "CNR needs foreground regions");
    detail::require(regions.background.has_value(), ErrorKind::InvalidInput, "CNR needs a background region");
    const RegionStats bg = region_stats(img, *regions.background);
    double acc = 0.0;
    for (const auto& r : regions.foreground) {
        const RegionStats fg = region_stats(img, r);
        const double contrast = std::abs(fg.mean - bg.mean);
        const double noise = std::sqrt(0.5 * (fg.sd * fg.sd + bg.sd * bg.sd));
        if (noise == 0.0)
            acc += contrast == 0.0 ? 0.0 : kInfinity;
        else
            acc += contrast / noise;
    }
    return acc / static_cast<double>(regions.foreground.size());
}

/// Parses `fg|bg x y w h` lines. Blank lines and lines starting with '#' are skipped.
inline RegionSet parse_regions(std::istream& in) {
    RegionSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        long long x, y, w, h;
        const bool ok = static_cast<bool>(ls >> x >> y >> w >> h);
        std::string rest;
        detail::require(ok && !(ls >> rest) && x >= 0 && y >= 0 && w > 0 && h > 0, ErrorKind::Io,
                        "malformed region on line " + std::to_string(lineno));
        const Region r{static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(w),
                       static_cast<std::size_t>(h)};
        if (tag == "fg") {
            set.foreground.push_back(r);
        } else if (tag == "bg") {
            detail::require(!set.background, ErrorKind::Io, "second background region on line " + std::to_string(lineno));
            set.background = r;
        } else {
            throw Error(ErrorKind::Io, "unknown region tag '" + tag + "' on line " + std::to_string(lineno));
        }
    }
    return set;
}

inline RegionSet load_regions(const std::string& path) {
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), ErrorKind::Io, "cannot open region file " + path);
    return parse_regions(in);
}

}  // namespace quasi

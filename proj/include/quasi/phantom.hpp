#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "quasi/image.hpp"

namespace quasi {

/// Elliptical region overriding the layer intensity (vessel cross sections and the like).
struct Inclusion {
    double cx = 0.0, cy = 0.0;
    double rx = 1.0, ry = 1.0;
    double intensity = 1.0;
};

/// Layered speckle phantom. Layer i spans rows [boundaries[i-1], boundaries[i]), with the first
/// layer starting at row 0 and the last running to the bottom, so intensities has one more entry
/// than boundaries. A non-empty row_offset (one entry per column) displaces every boundary in
/// that column by the same amount.
struct PhantomSpec {
    std::size_t width = 128;
    std::size_t height = 128;
    std::vector<std::size_t> boundaries;
    std::vector<double> row_offset;
    std::vector<double> intensities{0.5};
    std::vector<Inclusion> inclusions;
    unsigned looks = 4;  ///< speckle looks L; Gamma(L, 1/L) multiplier
    std::uint64_t seed = 0;
};

struct Phantom {
    Image2D clean;
    BScanStack stack;  ///< linear domain
};

inline void validate(const PhantomSpec& spec) {
    using detail::require;
    require(spec.width > 0 && spec.height > 0, ErrorKind::InvalidInput, "phantom size must be positive");
    require(spec.looks >= 1, ErrorKind::InvalidInput, "speckle looks must be >= 1");
    require(spec.intensities.size() == spec.boundaries.size() + 1, ErrorKind::InvalidInput,
            "phantom needs exactly one more layer intensity than boundaries");
    for (std::size_t i = 0; i < spec.boundaries.size(); ++i) {
        require(spec.boundaries[i] > 0 && spec.boundaries[i] < spec.height, ErrorKind::InvalidInput,
                "layer boundary outside image rows");
        require(i == 0 || spec.boundaries[i] > spec.boundaries[i - 1], ErrorKind::InvalidInput,
                "layer boundaries must be strictly increasing");
    }
    require(spec.row_offset.empty() || spec.row_offset.size() == spec.width, ErrorKind::InvalidInput,
            "row_offset needs one entry per column");
    for (double v : spec.row_offset) require(std::isfinite(v), ErrorKind::InvalidInput, "row_offset must be finite");
    for (double v : spec.intensities)
        require(v > 0.0 && v <= 1.0, ErrorKind::InvalidInput, "layer intensities must lie in (0, 1]");
    for (const auto& inc : spec.inclusions)
        require(inc.rx > 0.0 && inc.ry > 0.0 && inc.intensity > 0.0 && inc.intensity <= 1.0,
                ErrorKind::InvalidInput, "invalid inclusion");
}

inline Image2D render_clean(const PhantomSpec& spec) {
    validate(spec);
    Image2D clean(spec.width, spec.height);
    for (std::size_t x = 0; x < spec.width; ++x) {
        const double off = spec.row_offset.empty() ? 0.0 : spec.row_offset[x];
        std::size_t layer = 0;
        for (std::size_t y = 0; y < spec.height; ++y) {
            while (layer < spec.boundaries.size() &&
                   static_cast<double>(y) >= static_cast<double>(spec.boundaries[layer]) + off)
                ++layer;
            clean(x, y) = spec.intensities[layer];
        }
    }
    for (const auto& inc : spec.inclusions) {
        for (std::size_t y = 0; y < spec.height; ++y) {
            const double dy = (static_cast<double>(y) - inc.cy) / inc.ry;
            for (std::size_t x = 0; x < spec.width; ++x) {
                const double dx = (static_cast<double>(x) - inc.cx) / inc.rx;
                if (dx * dx + dy * dy <= 1.0) clean(x, y) = inc.intensity;
            }
        }
    }
    return clean;
}

/// Clean layered image plus K frames of independent multiplicative Gamma(L, 1/L) speckle.
/// Deterministic for a given seed.
inline Phantom generate_phantom(const PhantomSpec& spec, std::size_t k) {
    detail::require(k >= 1, ErrorKind::InvalidInput, "phantom needs K >= 1 frames");
    Image2D clean = render_clean(spec);

    std::mt19937_64 rng(spec.seed);
    const double shape = static_cast<double>(spec.looks);
    std::gamma_distribution<double> speckle(shape, 1.0 / shape);

    std::vector<Image2D> frames;
    frames.reserve(k);
    for (std::size_t f = 0; f < k; ++f) {
        Image2D noisy = clean;
        for (double& v : noisy) v *= speckle(rng);
        frames.push_back(std::move(noisy));
    }
    return {std::move(clean), BScanStack(std::move(frames), Domain::Linear)};
}

/// A retina-like test scene: dark vitreous, a stack of bright and dark layers of varying
/// thickness that undulate across the scan, and a few vessel cross sections. Geometry scales
/// with the image size; the seed drives the vessel placement, the undulation and the speckle.
inline PhantomSpec retina_phantom(std::size_t width, std::size_t height, unsigned looks,
                                  std::uint64_t seed) {
    PhantomSpec spec;
    spec.width = width;
    spec.height = height;
    spec.looks = looks;
    spec.seed = seed;

    // Relative layer tops, from the vitreous down to the choroid.
    const double tops[] = {0.22, 0.30, 0.36, 0.47, 0.52, 0.60, 0.64, 0.70, 0.82};
    const double levels[] = {0.04, 0.75, 0.35, 0.55, 0.20, 0.45, 0.15, 0.95, 0.60, 0.30};
    std::size_t prev = 0;
    spec.intensities = {levels[0]};
    for (std::size_t i = 0; i < std::size(tops); ++i) {
        auto row = static_cast<std::size_t>(tops[i] * static_cast<double>(height));
        if (row <= prev || row >= height) continue;
        spec.boundaries.push_back(row);
        spec.intensities.push_back(levels[i + 1]);
        prev = row;
    }

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> ux(0.08, 0.92), uy(0.30, 0.62), ur(0.015, 0.04);
    std::uniform_real_distribution<double> ui(0.05, 0.9);
    for (int v = 0; v < 4; ++v) {
        Inclusion inc;
        inc.cx = ux(rng) * static_cast<double>(width);
        inc.cy = uy(rng) * static_cast<double>(height);
        inc.rx = std::max(1.5, ur(rng) * static_cast<double>(width));
        inc.ry = std::max(1.5, ur(rng) * static_cast<double>(height));
        inc.intensity = ui(rng);
        spec.inclusions.push_back(inc);
    }

    // Gentle undulation plus a pit, so that the layers vary along x as well.
    std::uniform_real_distribution<double> ucyc(0.5, 1.5), uphase(0.0, 6.283185307179586), upit(0.3, 0.7);
    const double cycles = ucyc(rng), phase = uphase(rng), pit = upit(rng) * static_cast<double>(width);
    const double amp = 0.02 * static_cast<double>(height), depth = 0.03 * static_cast<double>(height);
    const double sigma = 0.1 * static_cast<double>(width);
    spec.row_offset.resize(width);
    for (std::size_t x = 0; x < width; ++x) {
        const double t = static_cast<double>(x);
        const double d = (t - pit) / sigma;
        spec.row_offset[x] = amp * std::sin(6.283185307179586 * cycles * t / static_cast<double>(width) + phase) +
                             depth * std::exp(-d * d);
    }
    return spec;
}

}  // namespace quasi

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "quasi/image.hpp"
#include "quasi/phantom.hpp"

using namespace quasi;

namespace {

BScanStack single(double v) { return {{Image2D(1, 1, v)}, Domain::Linear}; }

}  // namespace

TEST(ImageCore, RejectsMismatchedBuffer) {
    EXPECT_THROW(Image2D(3, 2, std::vector<double>(5)), Error);
    EXPECT_NO_THROW(Image2D(3, 2, std::vector<double>(6)));
}

TEST(ImageCore, StackRequiresFramesOfOneSize) {
    EXPECT_THROW(BScanStack({}, Domain::Linear), Error);
    EXPECT_THROW(BScanStack({Image2D(2, 2), Image2D(2, 3)}, Domain::Linear), Error);
}

TEST(ImageCore, ToLogExamples) {
    EXPECT_DOUBLE_EQ(to_log(single(std::numbers::e))[0][0], 1.0);
    EXPECT_DOUBLE_EQ(to_log(single(1.0))[0][0], 0.0);
    // zero is clamped to the floor: ln(1e-6)
    EXPECT_NEAR(to_log(single(0.0), 1e-6)[0][0], -13.815510557964274, 1e-12);
    EXPECT_EQ(to_log(single(1.0)).domain(), Domain::Log);
}

TEST(ImageCore, ToLogErrors) {
    EXPECT_THROW(to_log(single(std::nan(""))), Error);
    EXPECT_THROW(to_log(single(INFINITY)), Error);
    EXPECT_THROW(to_log(single(1.0), 0.0), Error);
    EXPECT_THROW(to_log(to_log(single(1.0))), Error);
}

TEST(ImageCore, FromLogExamples) {
    auto lg = [](double v) { return BScanStack({Image2D(1, 1, v)}, Domain::Log); };
    EXPECT_DOUBLE_EQ(from_log(lg(0.0))[0][0], 1.0);
    EXPECT_DOUBLE_EQ(from_log(lg(1.0))[0][0], std::numbers::e);
    EXPECT_NEAR(from_log(lg(std::log(0.5)))[0][0], 0.5, 1e-16);
    try {
        from_log(lg(1000.0));
        FAIL() << "expected overflow";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NumericRange);
    }
}

TEST(ImageCore, LogRoundTripProperty) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Image2D img = oracle::random_image(17, 9, rng, 1e-6, 1.0);
        const BScanStack back = from_log(to_log(BScanStack({img}, Domain::Linear)));
        for (std::size_t i = 0; i < img.size(); ++i)
            ASSERT_LE(std::abs(back[0][i] - img[i]), 4 * std::numeric_limits<double>::epsilon() * img[i]);
    }
}

TEST(Phantom, SingleLayerIsConstant) {
    PhantomSpec spec;
    spec.width = 10;
    spec.height = 7;
    spec.intensities = {0.5};
    const Phantom p = generate_phantom(spec, 2);
    for (double v : p.clean) EXPECT_EQ(v, 0.5);
    EXPECT_EQ(p.stack.count(), 2u);
    EXPECT_EQ(p.stack.domain(), Domain::Linear);
}

TEST(Phantom, LayersFollowBoundaries) {
    PhantomSpec spec;
    spec.width = 4;
    spec.height = 6;
    spec.boundaries = {2, 5};
    spec.intensities = {0.1, 0.6, 0.9};
    const Image2D c = render_clean(spec);
    EXPECT_EQ(c(0, 0), 0.1);
    EXPECT_EQ(c(3, 1), 0.1);
    EXPECT_EQ(c(2, 2), 0.6);
    EXPECT_EQ(c(2, 4), 0.6);
    EXPECT_EQ(c(1, 5), 0.9);
}

TEST(Phantom, RowOffsetShiftsBoundariesPerColumn) {
    PhantomSpec spec;
    spec.width = 3;
    spec.height = 6;
    spec.boundaries = {2};
    spec.intensities = {0.1, 0.6};
    spec.row_offset = {0.0, 1.0, -1.5};
    const Image2D c = render_clean(spec);
    EXPECT_EQ(c(0, 1), 0.1);
    EXPECT_EQ(c(0, 2), 0.6);
    EXPECT_EQ(c(1, 2), 0.1);
    EXPECT_EQ(c(1, 3), 0.6);
    EXPECT_EQ(c(2, 0), 0.1);
    EXPECT_EQ(c(2, 1), 0.6);
    spec.row_offset = {0.0};
    EXPECT_THROW(render_clean(spec), Error);
}

TEST(Phantom, InvalidSpecs) {
    PhantomSpec spec;
    EXPECT_THROW(generate_phantom(spec, 0), Error);
    spec.boundaries = {10};
    EXPECT_THROW(generate_phantom(spec, 1), Error);  // intensity count
    spec.intensities = {0.2, 0.3};
    spec.boundaries = {0};
    EXPECT_THROW(generate_phantom(spec, 1), Error);
    spec.boundaries = {40, 30};
    spec.intensities = {0.2, 0.3, 0.4};
    EXPECT_THROW(generate_phantom(spec, 1), Error);
    spec.boundaries = {30};
    spec.intensities = {0.2, 0.0};
    EXPECT_THROW(generate_phantom(spec, 1), Error);
}

TEST(Phantom, DeterministicForSeed) {
    const PhantomSpec spec = retina_phantom(64, 48, 4, 1234);
    const Phantom a = generate_phantom(spec, 3);
    const Phantom b = generate_phantom(spec, 3);
    EXPECT_TRUE(a.stack == b.stack);
    EXPECT_TRUE(a.clean == b.clean);
    const Phantom c = generate_phantom(retina_phantom(64, 48, 4, 1235), 3);
    EXPECT_FALSE(a.stack == c.stack);
}

TEST(Phantom, HighLooksApproachesClean) {
    PhantomSpec spec = retina_phantom(128, 128, 1'000'000, 3);
    const Phantom p = generate_phantom(spec, 1);
    std::size_t within = 0;
    for (std::size_t i = 0; i < p.clean.size(); ++i)
        if (std::abs(p.stack[0][i] / p.clean[i] - 1.0) < 0.01) ++within;
    EXPECT_GE(static_cast<double>(within), 0.99 * static_cast<double>(p.clean.size()));
}

TEST(Phantom, SpeckleHasUnitMean) {
    for (unsigned looks : {4u, 8u}) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const Phantom p = generate_phantom(retina_phantom(128, 128, looks, seed), 1);
            double acc = 0.0;
            for (std::size_t i = 0; i < p.clean.size(); ++i) acc += p.stack[0][i] / p.clean[i];
            const double mean = acc / static_cast<double>(p.clean.size());
            EXPECT_GE(mean, 0.99);
            EXPECT_LE(mean, 1.01);
        }
    }
}

TEST(ImageCore, DisplayMappingSpansUnitInterval) {
    Image2D img(3, 1, std::vector<double>{0.0, 1e-6, 1.0});
    const Image2D d = to_display(img);
    EXPECT_DOUBLE_EQ(d[0], 0.0);
    EXPECT_DOUBLE_EQ(d[1], 0.0);
    EXPECT_DOUBLE_EQ(d[2], 1.0);
}

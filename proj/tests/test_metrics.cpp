#include <gtest/gtest.h>

#include "agu/metrics.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using agu::ImagePlane;
using agu::KernelConfig;
using agu::Rng;

TEST(NoiseEstimate, ConstantImageIsZero) {
    EXPECT_DOUBLE_EQ(agu::noise_estimate(ImagePlane(16, 16, 88.0f)), 0.0);
}

TEST(NoiseEstimate, RecoversInjectedSigma) {
    for (double sigma : {3.0, 5.0, 8.0}) {
        double sum = 0.0;
        for (uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed * 7 + 1);
            ImagePlane img(64, 64, 128.0f);
            for (float& v : img.data) v = agu::clamp_intensity(v + sigma * rng.gaussian());
            sum += agu::noise_estimate(img);
        }
        const double mean = sum / 10.0;
        EXPECT_NEAR(mean, sigma, 0.15 * sigma) << "sigma " << sigma;
    }
}

TEST(NoiseEstimate, TranslationInvariant) {
    Rng rng(5);
    const ImagePlane img = testutil::random_integer_plane(20, 20, rng, 0, 200);
    ImagePlane shifted = img;
    for (float& v : shifted.data) v += 37.0f; // integer-valued, no clamping
    EXPECT_NEAR(agu::noise_estimate(img), agu::noise_estimate(shifted), 1e-9);
}

TEST(NoiseEstimate, TinyImageRejected) {
    EXPECT_THROW(agu::noise_estimate(ImagePlane(2, 5)), agu::InvalidInput);
}

TEST(Sharpness, ConstantImageIsZero) {
    EXPECT_NEAR(agu::sharpness(ImagePlane(20, 20, 50.0f)), 0.0, 1e-9);
}

TEST(Sharpness, StepEdgeMatchesDenseConvOracle) {
    KernelConfig cfg;
    ImagePlane img(24, 16, 0.0f);
    for (int y = 0; y < img.height; ++y)
        for (int x = 12; x < img.width; ++x) img.at(x, y) = 255.0f;
    const ImagePlane resp = ref::log_response(img, cfg);
    const int half = cfg.log_size / 2;
    double acc = 0.0;
    int64_t n = 0;
    for (int y = half; y < img.height - half; ++y)
        for (int x = half; x < img.width - half; ++x) {
            acc += std::abs(static_cast<double>(resp.at(x, y)));
            ++n;
        }
    EXPECT_NEAR(agu::sharpness(img, cfg), acc / static_cast<double>(n), 1e-6);
}

TEST(Sharpness, BlurStrictlyReduces) {
    const agu::ColorImage scene = testutil::render_scene(48, 48, 2);
    const ImagePlane gray = agu::rgb_to_gray(scene);
    const ImagePlane blurred = agu::box_mean(gray, 2);
    EXPECT_LT(agu::sharpness(blurred), agu::sharpness(gray));
}

TEST(Sharpness, ScalesLinearlyWithContrast) {
    Rng rng(9);
    const ImagePlane img = testutil::random_plane(24, 24, rng, 0, 255);
    const double base = agu::sharpness(img);
    for (double alpha : {0.25, 0.5, 1.0}) {
        ImagePlane scaled = img;
        for (float& v : scaled.data) v = static_cast<float>(v * alpha);
        EXPECT_NEAR(agu::sharpness(scaled), alpha * base, 1e-6 * std::max(1.0, alpha * base));
    }
}

TEST(Psnr, IdenticalImagesAreInfinite) {
    Rng rng(11);
    const ImagePlane img = testutil::random_plane(10, 10, rng);
    EXPECT_TRUE(std::isinf(agu::psnr(img, img)));
}

TEST(Psnr, UnitOffsetIsClosedForm) {
    Rng rng(13);
    const ImagePlane a = testutil::random_plane(16, 16, rng, 0, 254);
    ImagePlane b = a;
    for (float& v : b.data) v += 1.0f;
    EXPECT_NEAR(agu::psnr(a, b), 20.0 * std::log10(255.0), 1e-3);
    EXPECT_NEAR(agu::psnr(a, b), 48.1308, 1e-3);
}

TEST(Psnr, SymmetricAndChecksDims) {
    Rng rng(17);
    const ImagePlane a = testutil::random_plane(12, 12, rng);
    const ImagePlane b = testutil::random_plane(12, 12, rng);
    EXPECT_DOUBLE_EQ(agu::psnr(a, b), agu::psnr(b, a));
    EXPECT_THROW(agu::psnr(a, ImagePlane(11, 12)), agu::InvalidInput);
}

TEST(Ssim, SelfSimilarityIsOne) {
    Rng rng(19);
    const ImagePlane img = testutil::random_plane(24, 20, rng);
    EXPECT_NEAR(agu::ssim(img, img), 1.0, 1e-9);
}

TEST(Ssim, ConstantPatchesClosedForm) {
    const ImagePlane zeros(16, 16, 0.0f);
    const ImagePlane full(16, 16, 255.0f);
    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double expect = c1 / (255.0 * 255.0 + c1); // variance terms vanish
    EXPECT_NEAR(agu::ssim(zeros, full), expect, 1e-6);
}

TEST(Ssim, SymmetricAndBounded) {
    Rng rng(23);
    const ImagePlane a = testutil::random_plane(16, 16, rng);
    const ImagePlane b = testutil::random_plane(16, 16, rng);
    EXPECT_NEAR(agu::ssim(a, b), agu::ssim(b, a), 1e-12);
    EXPECT_LE(agu::ssim(a, b), 1.0);
}

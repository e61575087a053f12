#include <gtest/gtest.h>

#include "agu/classify.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using agu::ClassConfig;
using agu::ClassMap;
using agu::ImagePlane;
using agu::KernelConfig;
using agu::Rng;

TEST(EdgeClasses, ConstantPlaneIsCenterClass) {
    const ClassConfig ccfg;
    const KernelConfig kcfg;
    const ImagePlane img(20, 16, 90.0f);
    const ClassMap map = agu::edge_classes(img, kcfg, ccfg);
    for (const int32_t c : map.labels) EXPECT_EQ(c, ccfg.center_class());
}

TEST(EdgeClasses, StepEdgeMatchesIndependentBinningOracle) {
    const ClassConfig ccfg;
    const KernelConfig kcfg;
    ImagePlane img(24, 18, 10.0f);
    for (int y = 0; y < img.height; ++y)
        for (int x = 12; x < img.width; ++x) img.at(x, y) = 245.0f;
    const ClassMap got = agu::edge_classes(img, kcfg, ccfg);
    const ClassMap want = ref::edge_classes(img, kcfg, ccfg);
    ASSERT_EQ(got.labels.size(), want.labels.size());
    for (size_t i = 0; i < got.labels.size(); ++i) EXPECT_EQ(got.labels[i], want.labels[i]);
    // a real edge must populate classes away from the center
    bool off_center = false;
    for (const int32_t c : got.labels)
        if (std::abs(c - ccfg.center_class()) > 5) off_center = true;
    EXPECT_TRUE(off_center);
}

TEST(BrightnessClasses, EqualImagesAreCenterClass) {
    Rng rng(5);
    const ImagePlane img = testutil::random_plane(15, 11, rng);
    const ClassConfig ccfg;
    const ClassMap map = agu::brightness_classes(img, img, ccfg);
    for (const int32_t c : map.labels) EXPECT_EQ(c, ccfg.center_class());
}

TEST(BrightnessClasses, HalfRangeOffsetLandsInClass90) {
    const ClassConfig ccfg; // N = 121
    const ImagePlane guide(6, 6, 50.0f);
    const ImagePlane enhanced(6, 6, 177.5f); // delta = 127.5
    const ClassMap map = agu::brightness_classes(enhanced, guide, ccfg);
    for (const int32_t c : map.labels) EXPECT_EQ(c, 90);
}

TEST(BrightnessClasses, ExtremeDeltasHitBoundaryClasses) {
    const ClassConfig ccfg;
    const ImagePlane zeros(4, 4, 0.0f);
    const ImagePlane full(4, 4, 255.0f);
    for (const int32_t c : agu::brightness_classes(full, zeros, ccfg).labels) EXPECT_EQ(c, 120);
    for (const int32_t c : agu::brightness_classes(zeros, full, ccfg).labels) EXPECT_EQ(c, 0);
}

TEST(BrightnessClasses, LabelsAlwaysInRange) {
    Rng rng(19);
    const ClassConfig ccfg;
    for (int trial = 0; trial < 20; ++trial) {
        const ImagePlane a = testutil::random_plane(9, 9, rng);
        const ImagePlane b = testutil::random_plane(9, 9, rng);
        for (const int32_t c : agu::brightness_classes(a, b, ccfg).labels) {
            EXPECT_GE(c, 0);
            EXPECT_LE(c, 120);
        }
    }
}

TEST(BrightnessClasses, DimensionMismatchThrows) {
    const ClassConfig ccfg;
    EXPECT_THROW(agu::brightness_classes(ImagePlane(4, 4), ImagePlane(5, 4), ccfg),
                 agu::InvalidInput);
}

TEST(BrightnessClasses, MonotoneInDelta) {
    const ClassConfig ccfg;
    const ImagePlane guide(1, 1, 100.0f);
    int32_t prev = -1;
    for (double v = 0.0; v <= 255.0; v += 0.5) {
        ImagePlane e(1, 1, static_cast<float>(v));
        const int32_t c = agu::brightness_classes(e, guide, ccfg).labels[0];
        EXPECT_GE(c, prev);
        prev = c;
    }
}

TEST(BrightnessClasses, ShiftInvariance) {
    Rng rng(23);
    const ClassConfig ccfg;
    const ImagePlane a = testutil::random_integer_plane(12, 12, rng, 0, 200);
    const ImagePlane b = testutil::random_integer_plane(12, 12, rng, 0, 200);
    ImagePlane a2 = a, b2 = b;
    for (float& v : a2.data) v += 37.0f;
    for (float& v : b2.data) v += 37.0f;
    const ClassMap m1 = agu::brightness_classes(a, b, ccfg);
    const ClassMap m2 = agu::brightness_classes(a2, b2, ccfg);
    for (size_t i = 0; i < m1.labels.size(); ++i) EXPECT_EQ(m1.labels[i], m2.labels[i]);
}

TEST(ClassConfig, RejectsEvenOrTinyClassCounts) {
    EXPECT_THROW((ClassConfig{120, 255.0}).validate(), agu::InvalidConfig);
    EXPECT_THROW((ClassConfig{1, 255.0}).validate(), agu::InvalidConfig);
    EXPECT_THROW((ClassConfig{121, 0.0}).validate(), agu::InvalidConfig);
    EXPECT_NO_THROW((ClassConfig{121, 255.0}).validate());
}

TEST(ClassMap, NearestResizeKeepsLabels) {
    ClassMap map(2, 2, 5);
    map.at(0, 0) = 0;
    map.at(1, 0) = 1;
    map.at(0, 1) = 2;
    map.at(1, 1) = 3;
    const ClassMap up = agu::nearest_resize(map, 4, 4);
    EXPECT_EQ(up.at(0, 0), 0);
    EXPECT_EQ(up.at(3, 0), 1);
    EXPECT_EQ(up.at(0, 3), 2);
    EXPECT_EQ(up.at(3, 3), 3);
}

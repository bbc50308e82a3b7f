#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "catdse/errors.hpp"
#include "catdse/platform.hpp"
#include "helpers.hpp"

using namespace catdse;

TEST(Platform, Vck5000Defaults) {
    const PlatformProfile p = vck5000_default();
    EXPECT_EQ(p.total_aie, 400);
    EXPECT_EQ(p.total_buffer_bytes, 25'060'966);
    EXPECT_EQ(p.total_buffer_bytes, static_cast<Count>(23.9 * 1024 * 1024));
    EXPECT_EQ(p.m_window_bytes, 32768);
    EXPECT_DOUBLE_EQ(p.aie_clock_ghz, 1.25);
    EXPECT_DOUBLE_EQ(p.pl_clock_mhz, 300.0);
    EXPECT_EQ(derive_plio_aie(p), 4);
}

TEST(Platform, ShippedProfileMatchesBuiltin) {
    EXPECT_EQ(load_profile_file(testutil::data_path("profiles/vck5000.json")), vck5000_default());
}

TEST(Platform, PlioAieFloorAndClamp) {
    PlatformProfile p = vck5000_default();
    p.t_calc_ns = 100.0;
    p.t_window_ns = 33.0;
    EXPECT_EQ(derive_plio_aie(p), 3);
    p.t_window_ns = 500.0;
    EXPECT_EQ(derive_plio_aie(p), 1);
}

TEST(Platform, PlioAieMonotoneInCalcTime) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> calc(1.0, 10000.0), window(1.0, 5000.0), grow(0.0, 3000.0);
    for (int i = 0; i < 1000; ++i) {
        PlatformProfile p = vck5000_default();
        p.t_calc_ns = calc(rng);
        p.t_window_ns = window(rng);
        const Count base = derive_plio_aie(p);
        EXPECT_EQ(base, std::max<Count>(1, static_cast<Count>(std::floor(p.t_calc_ns / p.t_window_ns))));
        PlatformProfile q = p;
        q.t_calc_ns += grow(rng);
        EXPECT_GE(derive_plio_aie(q), base);
        q = p;
        q.t_window_ns += grow(rng);
        EXPECT_LE(derive_plio_aie(q), base);
    }
}

TEST(Platform, JsonRoundTripAndStrictKeys) {
    const PlatformProfile p = vck5000_default();
    EXPECT_EQ(load_profile(to_json(p)), p);
    nlohmann::json doc = to_json(p);
    doc["extra"] = 1;
    EXPECT_THROW(load_profile(doc), ConfigError);
    doc = to_json(p);
    doc.erase("t_calc_ns");
    EXPECT_THROW(load_profile(doc), ConfigError);
    doc = to_json(p);
    doc["total_aie"] = "many";
    EXPECT_THROW(load_profile(doc), ConfigError);
    EXPECT_THROW(load_profile_file("/nonexistent/profile.json"), ConfigError);
}

TEST(Platform, EffectiveProfileCapsCores) {
    const PlatformProfile p = vck5000_default();
    EXPECT_EQ(effective_profile(p, testutil::limited()).total_aie, 64);
    EXPECT_EQ(effective_profile(p, testutil::bert()).total_aie, 400);
    TransformerConfig big = testutil::bert();
    big.allowable_aie = 1000;
    EXPECT_EQ(effective_profile(p, big).total_aie, 400);
}

#include <gtest/gtest.h>

#include "wbench/errors.hpp"
#include "wbench/quality.hpp"

using namespace wbench;
using namespace wbench::quality;

namespace {

const QualityConfig kCfg;

Image flat(std::uint8_t v, int w = 4, int h = 3) {
  return {w, h, 3, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, v)};
}

}  // namespace

TEST(Quality, Aesthetic) {
  EXPECT_DOUBLE_EQ(*aesthetic_score({5, 5, 5}), 50);
  EXPECT_DOUBLE_EQ(*aesthetic_score({10, 10}), 100);
  EXPECT_DOUBLE_EQ(*aesthetic_score({4, 6, 8}), 60);
  EXPECT_FALSE(aesthetic_score({}).has_value());
}

TEST(Quality, Imaging) {
  EXPECT_DOUBLE_EQ(*imaging_score({70, 70}), 70);
  EXPECT_DOUBLE_EQ(*imaging_score({0}), 0);
  EXPECT_DOUBLE_EQ(*imaging_score({60, 80, 100}), 80);
  EXPECT_FALSE(imaging_score({}).has_value());
}

TEST(Quality, Flicker) {
  EXPECT_EQ(*flicker_score({flat(9), flat(9), flat(9)}), 100);
  EXPECT_EQ(*flicker_score({flat(0), flat(255), flat(0)}), 0);
  EXPECT_NEAR(*flicker_from_mae({25.5, 25.5}), 90, 1e-12);
  EXPECT_FALSE(flicker_score({flat(1)}).has_value());
  EXPECT_THROW(frame_mae(flat(0, 4, 3), flat(0, 3, 4)), FormatError);
}

TEST(Quality, DynamicDegree) {
  EXPECT_EQ(*dynamic_degree(std::vector<double>(6, 10.0), kCfg), 100);
  EXPECT_EQ(*dynamic_degree(std::vector<double>(6, 0.0), kCfg), 0);
  EXPECT_EQ(dynamic_nmin(6, kCfg), 3);
  EXPECT_EQ(*dynamic_degree({3, 3, 3, 0, 0, 0}, kCfg), 100);
  EXPECT_EQ(*dynamic_degree({3, 3, 0, 0, 0, 0}, kCfg), 0);
  EXPECT_EQ(*dynamic_degree({2.0, 2.0}, kCfg), 0);
  EXPECT_FALSE(dynamic_degree({}, kCfg).has_value());
}

TEST(Quality, MotionSmoothness) {
  EXPECT_EQ(*motion_smoothness({0, 0}), 100);
  EXPECT_EQ(*motion_smoothness({255, 255}), 0);
  EXPECT_NEAR(*motion_smoothness({51}), 80, 1e-12);
  EXPECT_FALSE(motion_smoothness({}).has_value());
}

TEST(Quality, HpsNormalization) {
  EXPECT_EQ(hps_norm(5.21, kCfg), 0.0);
  EXPECT_EQ(hps_norm(8.66, kCfg), 100.0);
  EXPECT_NEAR(hps_norm(6.935, kCfg), 50.0, 1e-9);
  EXPECT_EQ(hps_norm(1.0, kCfg), 0.0);
  EXPECT_EQ(hps_norm(12.0, kCfg), 100.0);
}

#include <gtest/gtest.h>

#include <numbers>

#include "samalm/geometry.hpp"
#include "samalm/random.hpp"

namespace samalm {
namespace {

TEST(Geometry, BasicVectorAlgebra) {
  const Vec2 a{3.0, 4.0};
  EXPECT_DOUBLE_EQ(norm(a), 5.0);
  EXPECT_DOUBLE_EQ(dot(a, Vec2{1.0, 0.0}), 3.0);
  EXPECT_DOUBLE_EQ(det(Vec2{1.0, 0.0}, Vec2{0.0, 1.0}), 1.0);
  EXPECT_EQ((a + Vec2{1.0, 1.0}), (Vec2{4.0, 5.0}));
  EXPECT_DOUBLE_EQ(distance(Vec2{}, a), 5.0);
}

TEST(Geometry, NormalizedZeroStaysZero) {
  EXPECT_EQ(normalized(Vec2{}), Vec2{});
  EXPECT_NEAR(norm(normalized(Vec2{0.3, -7.0})), 1.0, 1e-15);
}

TEST(Geometry, WrapAngleRange) {
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -std::numbers::pi - 1e-12);
    EXPECT_LE(w, std::numbers::pi + 1e-12);
    EXPECT_NEAR(std::remainder(w - a, 2.0 * std::numbers::pi), 0.0, 1e-9);
  }
}

TEST(Random, DeriveSeedIsStableAndSpreads) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
}

TEST(Random, RngReproducible) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.bits(), b.bits());
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(c.index(3), 3u);
  }
}

}  // namespace
}  // namespace samalm

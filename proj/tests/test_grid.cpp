#include <gtest/gtest.h>

#include <cmath>

#include "fnls/grid.hpp"

using namespace fnls;

namespace {

GridSpec grid2(int M = 16, double L = 4.0) { return GridSpec{2, 0.75, L, M}; }

} // namespace

TEST(GridSpec, RejectsBadParameters) {
  EXPECT_THROW((GridSpec{2, 0.75, 4.0, 12}.validate()), GridError);
  EXPECT_THROW((GridSpec{2, 0.75, 4.0, 4}.validate()), GridError);
  EXPECT_THROW((GridSpec{4, 0.75, 4.0, 16}.validate()), GridError);
  EXPECT_THROW((GridSpec{2, 0.0, 4.0, 16}.validate()), GridError);
  EXPECT_THROW((GridSpec{2, 1.2, 4.0, 16}.validate()), GridError);
  EXPECT_THROW((GridSpec{2, 0.75, -1.0, 16}.validate()), GridError);
  EXPECT_NO_THROW((GridSpec{3, 0.5, 4.0, 8}.validate()));
}

TEST(GridSpec, LatticeGeometry) {
  const GridSpec g = grid2(16, 4.0);
  EXPECT_EQ(g.total(), 256u);
  EXPECT_DOUBLE_EQ(g.spacing(), 0.5);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25);
  EXPECT_DOUBLE_EQ(g.coordinate(0), -4.0);
  EXPECT_DOUBLE_EQ(g.coordinate(g.origin_index()), 0.0);
  const Point o = g.position(g.flatten({8, 8, 0}));
  EXPECT_DOUBLE_EQ(o[0], 0.0);
  EXPECT_DOUBLE_EQ(o[1], 0.0);
}

TEST(GridSpec, FrequencyLatticeCoversSignedModes) {
  const GridSpec g = grid2(16, 4.0);
  EXPECT_EQ(g.signed_mode(0), 0);
  EXPECT_EQ(g.signed_mode(7), 7);
  EXPECT_EQ(g.signed_mode(8), -8);
  EXPECT_EQ(g.signed_mode(15), -1);
  EXPECT_TRUE(g.is_nyquist(8));
  EXPECT_NEAR(g.frequency(1), std::numbers::pi / 4.0, 1e-15);
  EXPECT_NEAR(g.frequency(8), -2.0 * std::numbers::pi, 1e-15);
}

TEST(GridSpec, FlattenRoundTrip) {
  const GridSpec g{3, 0.5, 2.0, 8};
  for (std::size_t i = 0; i < g.total(); ++i) EXPECT_EQ(g.flatten(g.unflatten(i)), i);
  EXPECT_EQ(g.flatten({-1, 0, 0}), g.flatten({7, 0, 0}));
  EXPECT_EQ(g.flatten({9, 0, 0}), g.flatten({1, 0, 0}));
}

TEST(GridSpec, MinimumImageDisplacement) {
  const GridSpec g = grid2(16, 4.0);
  const Point d = g.periodic_delta({-3.5, 0, 0}, {3.5, 1, 0});
  EXPECT_NEAR(d[0], -1.0, 1e-14);
  EXPECT_NEAR(d[1], 1.0, 1e-14);
  const Point w = g.wrap({5.0, -4.5, 0});
  EXPECT_NEAR(w[0], -3.0, 1e-14);
  EXPECT_NEAR(w[1], 3.5, 1e-14);
}

TEST(Field, PayloadMustMatchGrid) {
  EXPECT_THROW(Field(grid2(), std::vector<double>(10, 0.0)), GridError);
  Field u = Field::from_function(grid2(), [](const Point& x) { return x[0] + 2 * x[1]; });
  Field v = 2.0 * u - u;
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_DOUBLE_EQ(v[i], u[i]);
}

TEST(Field, LatticeShiftAndRecenter) {
  const GridSpec g = grid2(16, 4.0);
  Field u = Field::from_function(g, [](const Point& x) { return std::exp(-((x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1])); });
  Field back = shift_lattice(shift_lattice(u, {3, -5, 0}), {-3, 5, 0});
  EXPECT_EQ(back.values, u.values);

  Field c = recenter(u);
  EXPECT_EQ(argmax(c), g.flatten({g.origin_index(), g.origin_index(), 0}));
  EXPECT_EQ(recenter(c).values, c.values);
}

TEST(Field, RefinedPeakLocatesOffGridMaximum) {
  const GridSpec g = grid2(64, 8.0);
  const Point c{0.13, -0.31, 0};
  Field u = Field::from_function(g, [&](const Point& x) {
    const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
    return std::exp(-r2);
  });
  const Point p = refined_peak(u);
  EXPECT_LT(distance(p, c), 0.25 * g.spacing());
}

TEST(Region, MembershipAndCounts) {
  const GridSpec g = grid2(32, 4.0);
  const Region B = Region::ball({0, 0, 0}, 1.0);
  EXPECT_TRUE(B.contains({0.5, 0.5, 0}));
  EXPECT_FALSE(B.contains({1.0, 0.5, 0}));
  EXPECT_EQ(Region::whole().count(g), g.total());
  EXPECT_EQ(Region::complement(B).count(g) + B.count(g), g.total());
  EXPECT_NEAR(B.measure(g), std::numbers::pi, 0.2);

  const Region A = Region::annulus({0, 0, 0}, 1.0, 2.0);
  EXPECT_TRUE(A.contains({1.5, 0, 0}));
  EXPECT_FALSE(A.contains({0.5, 0, 0}));
  const Region U = Region::unite({B, A});
  EXPECT_EQ(U.count(g), Region::ball({0, 0, 0}, 2.0).count(g));
}

TEST(Region, DilationAndScaling) {
  const Region B = Region::ball({1, 0, 0}, 1.0);
  EXPECT_DOUBLE_EQ(B.dilated(0.5).radius(), 1.5);
  EXPECT_DOUBLE_EQ(B.dilated(-2.0).radius(), 0.0);
  const Region S = B.scaled(2.0);
  EXPECT_DOUBLE_EQ(S.radius(), 2.0);
  EXPECT_DOUBLE_EQ(S.center()[0], 2.0);
  EXPECT_DOUBLE_EQ(B.bounding_radius(), 2.0);
  EXPECT_TRUE(std::isinf(Region::whole().bounding_radius()));
  const Region Bc = Region::complement(B).dilated(0.5);
  EXPECT_TRUE(Bc.contains({1.0, 0.7, 0}));
  EXPECT_FALSE(Bc.contains({1.0, 0.3, 0}));
}

TEST(Region, TextRoundTrip) {
  const Region r = Region::unite({Region::ball({0.5, -1, 0}, 1.25), Region::complement(Region::annulus({0, 0, 0}, 1, 3)),
                                  Region::box({-1, -1, 0}, {1, 2, 0})});
  const Region q = Region::parse(r.to_text());
  EXPECT_EQ(q.to_text(), r.to_text());
  const GridSpec g = grid2(32, 4.0);
  EXPECT_EQ(q.mask(g), r.mask(g));
}

TEST(Region, ParseErrors) {
  EXPECT_THROW(Region::parse("blob radius=1"), FormatError);
  EXPECT_THROW(Region::parse("ball radius"), FormatError);
  EXPECT_THROW(Region::parse("ball radius=x"), FormatError);
  EXPECT_THROW(Region::parse("complement(ball radius=1"), FormatError);
  EXPECT_EQ(Region::parse("  whole ").kind(), Region::Kind::whole);
}

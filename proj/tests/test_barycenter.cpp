#include <gtest/gtest.h>

#include <cmath>

#include "fnls/barycenter.hpp"

using namespace fnls;

namespace {

Field bump(const GridSpec& g, double amp, double width, Point c = {0, 0, 0}) {
  return Field::from_function(g, [&](const Point& x) {
    const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
    return amp * std::exp(-r2 / (width * width));
  });
}

// ||w||_{B} from the L^2 sum and the brute-force Gagliardo double sum of B against the whole box.
double direct_restricted_norm(const Field& w, const Region& B) {
  const double l2 = lp_norm(w, 2.0, B);
  const double semi = gagliardo_bruteforce(w, B, Region::whole()).value;
  return std::sqrt(l2 * l2 + semi * semi);
}

} // namespace

class BarycenterTest : public ::testing::Test {
protected:
  void SetUp() override {
    g = GridSpec{2, 0.75, 8.0, 32};
    SolveResult r1, r2;
    r1.field = bump(g, 2.0, 0.9);
    r2.field = bump(g, 1.6, 1.2);
    dict = make_dictionary({{1.0, r1}, {1.2, r2}});
    bary = std::make_unique<Barycenter>(dict, BarycenterConfig::from(dict));
  }
  Point lattice_point(long i, long j) const { return g.position(g.flatten({i, j, 0})); }

  GridSpec g;
  SolutionDictionary dict;
  std::unique_ptr<Barycenter> bary;
};

TEST_F(BarycenterTest, DistanceMatchesDirectRestrictedNorm) {
  const Field u = bump(g, 1.9, 1.0, {0.3, -0.4, 0});
  const DensityMap d = bary->density_map(u);
  for (auto [i, j] : {std::pair{16L, 16L}, std::pair{17L, 15L}, std::pair{14L, 18L}}) {
    const Point q = lattice_point(i, j);
    const Offset shift{i - g.origin_index(), j - g.origin_index(), 0};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : dict.entries)
      best = std::min(best, direct_restricted_norm(u - shift_lattice(e.profile(), shift), Region::ball(q, dict.R0)));
    const std::size_t k = d.index(q);
    EXPECT_NEAR(d.distance[k], best, 1e-9 * (1.0 + best)) << "q=(" << q[0] << "," << q[1] << ")";
    EXPECT_EQ(d.values[k], cutoff(d.distance[k], dict.r_star));
    EXPECT_NEAR(d.values[k], cutoff(best, dict.r_star), 1e-9);
  }
}

TEST_F(BarycenterTest, TranslatedMemberHasUnitDensityAtItsCenter) {
  const Offset k{3, -2, 0};
  const Field u = shift_lattice(dict.entries[1].profile(), k);
  const Point q = lattice_point(g.origin_index() + 3, g.origin_index() - 2);
  const DensityMap d = bary->density_map(u);
  EXPECT_NEAR(d.distance[d.index(q)], 0.0, 1e-6);
  EXPECT_EQ(d.at(q), 1.0);
  EXPECT_EQ(d.at(lattice_point(2, 2)), 0.0);
  const Point ups = bary->upsilon(u);
  EXPECT_NEAR(ups[0], q[0], 1e-9);
  EXPECT_NEAR(ups[1], q[1], 1e-9);
}

TEST_F(BarycenterTest, EvenFieldHasZeroBarycenter) {
  const Field u = bump(g, 1.8, 1.0) + bump(g, 0.2, 0.6, {1.0, 0, 0}) + bump(g, 0.2, 0.6, {-1.0, 0, 0});
  const Point ups = bary->upsilon(u);
  EXPECT_NEAR(ups[0], 0.0, 1e-9);
  EXPECT_NEAR(ups[1], 0.0, 1e-9);
}

TEST_F(BarycenterTest, EquivariantUnderLatticeShift) {
  const Field u = bump(g, 1.9, 1.0, {0.2, 0.1, 0});
  const Point a = bary->upsilon(u), b = bary->upsilon(shift_lattice(u, {2, 3, 0}));
  EXPECT_NEAR(b[0] - a[0], 2 * g.spacing(), 1e-9);
  EXPECT_NEAR(b[1] - a[1], 3 * g.spacing(), 1e-9);
}

TEST_F(BarycenterTest, FieldOutsideTubeThrows) {
  EXPECT_THROW(bary->upsilon(Field(g)), OutOfTubeError);
}

TEST_F(BarycenterTest, StrideSkipsOffLatticePoints) {
  const Barycenter coarse(dict, BarycenterConfig::from(dict, 2));
  const DensityMap d = coarse.density_map(dict.entries[0].profile());
  EXPECT_EQ(d.at(lattice_point(17, 16)), 0.0);
  EXPECT_TRUE(std::isinf(d.distance[d.index(lattice_point(17, 16))]));
  EXPECT_EQ(d.at(lattice_point(16, 16)), 1.0);
  EXPECT_THROW(Barycenter(dict, BarycenterConfig{dict.R0, dict.r_star, 0}), ValidationError);
}

TEST(Cutoff, PlateausAndSmoothStep) {
  const double r = 2.0;
  EXPECT_EQ(cutoff(0.0, r), 1.0);
  EXPECT_EQ(cutoff(0.5, r), 1.0);
  EXPECT_EQ(cutoff(1.0, r), 0.0);
  EXPECT_EQ(cutoff(7.0, r), 0.0);
  double prev = 1.0;
  for (int i = 1; i <= 100; ++i) {
    const double v = cutoff(0.5 + 0.005 * i, r);
    EXPECT_LE(v, prev);
    prev = v;
  }
  const double h = 1e-7;
  EXPECT_NEAR((cutoff(0.5 + h, r) - cutoff(0.5, r)) / h, 0.0, 1e-5);
  EXPECT_NEAR((cutoff(1.0, r) - cutoff(1.0 - h, r)) / h, 0.0, 1e-5);
  EXPECT_NEAR(cutoff(0.75, r), 0.5, 1e-15);
}

TEST(Truncation, ClampsToSigmaBand) {
  EXPECT_DOUBLE_EQ(truncate_pohozaev(5.0, 0.3), 1.3);
  EXPECT_DOUBLE_EQ(truncate_pohozaev(0.1, 0.3), 0.7);
  EXPECT_DOUBLE_EQ(truncate_pohozaev(1.1, 0.3), 1.1);
  EXPECT_THROW(truncate_pohozaev(1.0, 1.0), ValidationError);
}

TEST_F(BarycenterTest, PhiIsIdentityAtUnitScaleAndOrigin) {
  const Field& U = dict.entries[0].profile();
  EXPECT_EQ(phi_eps(1.0, {0, 0, 0}, U, 0.5).values, U.values);
  const Field moved = phi_eps(1.0, {0.5, -0.25, 0}, U, 0.5);
  const Field expect = shift_lattice(U, {2, -1, 0});
  for (std::size_t i = 0; i < U.size(); ++i) EXPECT_NEAR(moved[i], expect[i], 1e-12);
  EXPECT_THROW(phi_eps(1.0, {5.0, 0, 0}, U, 0.5), GeometryError);
  EXPECT_THROW(phi_eps(0.0, {0, 0, 0}, U, 0.5), ValidationError);
}

TEST_F(BarycenterTest, PsiRecoversLocationOfPhi) {
  const Field& U = dict.entries[0].profile();
  const Nonlinearity nl = Nonlinearity::power(3.0);
  const double eps = 0.5;
  const Point p{0.75, -0.5, 0};
  const auto [t, loc] = psi_eps(phi_eps(1.0, p, U, eps), eps, 1.0, *bary, 0.3, nl);
  EXPECT_EQ(t, truncate_pohozaev(pohozaev(U, 1.0, nl).value, 0.3));
  EXPECT_NEAR(loc[0], p[0], 1e-9);
  EXPECT_NEAR(loc[1], p[1], 1e-9);
}

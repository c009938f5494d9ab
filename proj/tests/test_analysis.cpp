#include <gtest/gtest.h>

#include <cmath>

#include "fnls/analysis.hpp"

using namespace fnls;

namespace {

Field bump(const GridSpec& g, double amp, double width, Point c = {0, 0, 0}) {
  return Field::from_function(g, [&](const Point& x) {
    const double r2 = (x[0] - c[0]) * (x[0] - c[0]) + (x[1] - c[1]) * (x[1] - c[1]);
    return amp * std::exp(-r2 / (width * width));
  });
}

SolveResult fake_result(const Field& u, double energy, Point bary = {0, 0, 0}) {
  SolveResult r;
  r.field = u;
  r.energy.total = energy;
  r.barycenter = bary;
  r.converged = true;
  return r;
}

// int over [-L, L]^2 minus B_R of |x|^{-e}: the disk part in closed form, the four corners by Simpson in theta.
double square_minus_disk_integral(double L, double R, double e) {
  const double disk = 2.0 * std::numbers::pi * (std::pow(L, 2.0 - e) - std::pow(R, 2.0 - e)) / (2.0 - e);
  const int n = 2000;
  const double a = 0.0, b = std::numbers::pi / 4.0, h = (b - a) / n;
  auto f = [&](double th) { return (std::pow(L / std::cos(th), 2.0 - e) - std::pow(L, 2.0 - e)) / (2.0 - e); };
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return disk + 8.0 * acc * h / 3.0;
}

} // namespace

TEST(Decay, PowerLawSlopeRecovered) {
  const GridSpec g{2, 0.75, 40.0, 256};
  const double e = g.dim + 2.0 * g.s;
  Field u = Field::from_function(g, [&](const Point& x) { return std::pow(1.0 + x[0] * x[0] + x[1] * x[1], -0.5 * e); });
  const DecayFit f = fit_decay_exponent(u, 4.0, 24.0);
  EXPECT_NEAR(f.slope, -e, 0.03 * e);
  EXPECT_FALSE(f.flagged) << f.reason;
  EXPECT_GT(f.r_squared, 0.99);
  EXPECT_EQ(f.radius.size(), f.shells);
}

TEST(Decay, GaussianTailIsFlagged) {
  const GridSpec g{2, 0.75, 40.0, 256};
  const DecayFit f = fit_decay_exponent(bump(g, 1.0, 1.0), 4.0, 20.0);
  EXPECT_TRUE(f.flagged);
  EXPECT_FALSE(f.reason.empty());
}

TEST(Decay, AnnulusGuards) {
  const GridSpec g{2, 0.75, 10.0, 64};
  const Field u = bump(g, 1.0, 1.0);
  EXPECT_THROW(fit_decay_exponent(u, 3.0, 8.0), ValidationError);
  EXPECT_THROW(fit_decay_exponent(u, 0.5, 5.0), ValidationError);
  EXPECT_THROW(fit_decay_exponent(u, 5.0, 4.0), ValidationError);
  EXPECT_GT(core_radius(u, {0, 0, 0}), 0.0);
  EXPECT_EQ(core_radius(Field(g), {0, 0, 0}), 0.0);
}

TEST(Tail, ZeroCases) {
  const GridSpec g{2, 0.75, 10.0, 64};
  EXPECT_EQ(tail(Field(g), {0, 0, 0}, 2.0), 0.0);
  const Field inside = Field::from_function(g, [](const Point& x) { return norm(x) < 1.5 ? 1.0 : 0.0; });
  EXPECT_EQ(tail(inside, {0, 0, 0}, 2.0), 0.0);
  EXPECT_THROW(tail(inside, {9.0, 0, 0}, 2.0), GeometryError);
  EXPECT_THROW(tail(inside, {0, 0, 0}, 0.0), ValidationError);
}

TEST(Tail, ConstantFieldMatchesQuadrature) {
  const GridSpec g{2, 0.75, 10.0, 256};
  const double R = 2.0, e = g.dim + 2.0 * g.s;
  const Field one(g, std::vector<double>(g.total(), 1.0));
  const double ref = (1.0 - g.s) * std::pow(R, 2.0 * g.s) * square_minus_disk_integral(g.half_width, R, e);
  EXPECT_NEAR(tail(one, {0, 0, 0}, R), ref, 0.02 * ref);
}

TEST(Concentration, ConstantPotentialHasNoDistanceToK) {
  const ModelSpec m{GridSpec{2, 0.75, 10.0, 64}, Nonlinearity::power(3.0), make_constant_potential(1.0)};
  const Field u = bump(m.grid, 2.0, 1.0, {1.0, 0.5, 0});
  const auto rows = concentration_report({fake_result(u, 1.0), fake_result(u, 1.0)}, {0.4, 0.2}, m);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.dist_to_K, 0.0);
  EXPECT_TRUE(std::isnan(rows[0].profile_step));
  EXPECT_NEAR(rows[1].profile_step, 0.0, 1e-12);
  EXPECT_NEAR(rows[0].peak[0], 0.4, 0.4 * 0.25 * m.grid.spacing());
  EXPECT_NEAR(rows[1].peak[0], 0.2, 0.2 * 0.25 * m.grid.spacing());
  EXPECT_THROW(concentration_report({fake_result(u, 1.0)}, {}, m), ValidationError);
}

TEST(Concentration, RingDistanceUsesOriginalCoordinates) {
  const ModelSpec m{GridSpec{2, 0.75, 10.0, 64}, Nonlinearity::power(3.0),
                    make_ring_potential(1.0, 1.0, 1.0, 2.0, 2, 1.0, 0.1)};
  const Field u = bump(m.grid, 2.0, 1.0, {5.0, 0, 0});
  const auto rows = concentration_report({fake_result(u, 1.0)}, {0.2}, m);
  EXPECT_NEAR(rows[0].dist_to_K, 0.0, 0.2 * m.grid.spacing());
}

TEST(Clusters, DuplicatesMergeAndZeroToleranceSplits) {
  const GridSpec g{2, 0.75, 8.0, 32};
  const Field u = bump(g, 2.0, 1.0), v = bump(g, 1.0, 2.0);
  const std::vector<SolveResult> rs = {fake_result(u, 1.0), fake_result(u, 1.0), fake_result(v, 3.0)};
  const auto rep = cluster_solutions(rs, ClusterOptions{});
  EXPECT_EQ(rep.raw_count(), 2u);
  EXPECT_EQ(rep.label[0], rep.label[1]);
  EXPECT_NE(rep.label[0], rep.label[2]);
  ClusterOptions zero;
  zero.tol_energy = zero.tol_distance = zero.tol_location = 0.0;
  EXPECT_EQ(cluster_solutions(rs, zero).raw_count(), 3u);
  EXPECT_EQ(cluster_solutions({}, ClusterOptions{}).raw_count(), 0u);
}

TEST(Clusters, TranslatesMergeOnlyWhenLocationsAgree) {
  const GridSpec g{2, 0.75, 8.0, 32};
  const Field u = bump(g, 2.0, 1.0, {2.0, 0, 0}), w = bump(g, 2.0, 1.0, {-2.0, 0, 0});
  EXPECT_NEAR(translation_distance(u, w), 0.0, 1e-6);
  const std::vector<SolveResult> rs = {fake_result(u, 1.0, {2.0, 0, 0}), fake_result(w, 1.0, {-2.0, 0, 0})};
  ClusterOptions o;
  o.symmetry = Symmetry::reflection;
  EXPECT_EQ(cluster_solutions(rs, o).raw_count(), 2u);
  o.symmetry_quotient = true;
  EXPECT_EQ(cluster_solutions(rs, o).raw_count(), 1u);
}

TEST(Clusters, QuotientLocations) {
  const Point x{-3.0, 4.0, 0};
  const Point r = quotient_location(x, Symmetry::rotation, true);
  EXPECT_DOUBLE_EQ(r[0], 5.0);
  EXPECT_DOUBLE_EQ(r[1], 0.0);
  const Point f = quotient_location(x, Symmetry::reflection, true);
  EXPECT_DOUBLE_EQ(f[0], 3.0);
  EXPECT_DOUBLE_EQ(f[1], 4.0);
  EXPECT_EQ(quotient_location(x, Symmetry::rotation, false), x);
}

TEST(Topology, CupLengthTable) {
  EXPECT_EQ(cupl_plus_one(ShapeKind::point), 1);
  EXPECT_EQ(cupl_plus_one(ShapeKind::contractible), 1);
  EXPECT_EQ(cupl_plus_one(ShapeKind::sphere), 2);
  EXPECT_EQ(cupl_plus_one(ShapeKind::torus, 3), 4);
  EXPECT_EQ(cupl_plus_one(ShapeKind::two_points), 1);
  EXPECT_EQ(topology_bounds(ShapeKind::two_points, 1).category, 2);
  EXPECT_THROW(topology_bounds(ShapeKind::torus, 0), ValidationError);
}

TEST(Sandwich, DeltaHatAdmissibility) {
  const double E = 4.0;
  const double dmax = max_delta_hat(E, 0.3, 2, 0.75);
  EXPECT_GT(dmax, 0.0);
  EXPECT_NEAR(dmax, 0.5 * E * std::min(1.0 - g_of(0.7, 2, 0.75), 1.0 - g_of(1.3, 2, 0.75)), 1e-15);
  const ModelSpec m{GridSpec{2, 0.75, 10.0, 64}, Nonlinearity::power(3.0), make_constant_potential(1.0)};
  ProofParams p;
  p.sigma0 = 0.3;
  p.delta_hat = 2.0 * dmax;
  const Field U = bump(m.grid, 2.0, 1.0);
  EXPECT_THROW(sandwich_check(U, m, p, 0.5, E, {{1.0, {0, 0, 0}}}), ValidationError);
  p.delta_hat = 0.0;
  EXPECT_THROW(sandwich_check(U, m, p, 0.5, E, {{1.0, {0, 0, 0}}}), ValidationError);
}

TEST(Sandwich, GroundStateFiberFollowsProfileFunction) {
  // The profile is narrow; a coarse grid aliases |u|^4 under compression, so sample at dx = 1/8.
  const ModelSpec m{GridSpec{2, 0.75, 8.0, 128}, Nonlinearity::power(3.0), make_constant_potential(1.0)};
  const auto gs = solve_ground_state(1.0, m, SolveOptions{}, gaussian_seed(m.grid, 3.0, 1.0));
  ASSERT_TRUE(gs.converged) << gs.message;
  const double E = gs.energy.total;
  ProofParams p;
  p.sigma0 = 0.3;
  p.delta_hat = 0.5 * max_delta_hat(E, p.sigma0, 2, 0.75);
  const auto rep = sandwich_check(gs.field, m, p, 0.5, E, {{1.0, {0, 0, 0}}, {0.7, {0, 0, 0}}, {1.3, {0.5, 0, 0}}});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.consistent);
  EXPECT_TRUE(rep.rows[1].boundary);
  EXPECT_FALSE(rep.rows[0].boundary);
  // With constant V the fiber energy is L_{m0}(U(./t)) = g(t) E up to the Pohozaev defect of the discrete solution.
  for (const auto& r : rep.rows) EXPECT_LT(r.deviation, 0.01 * E);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fnls/model.hpp"

using namespace fnls;

TEST(Exponents, SobolevCritical) {
  EXPECT_DOUBLE_EQ(sobolev_critical(2, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(sobolev_critical(3, 1.0), 6.0);
  EXPECT_DOUBLE_EQ(sobolev_critical(2, 0.75), 8.0);
  EXPECT_THROW(sobolev_critical(2, 1.0), ValidationError);
  EXPECT_DOUBLE_EQ(max_subcritical_power(2, 0.5), 3.0);
  EXPECT_TRUE(std::isinf(max_subcritical_power(1, 0.75)));
}

TEST(Nonlinearity, PowerLawPassesEveryCheck) {
  for (double p : {1.5, 2.0, 3.0}) {
    const auto rep = validate_nonlinearity(Nonlinearity::power(p, 10.0), 1.0, 2, 0.75);
    EXPECT_TRUE(rep.passed()) << "p=" << p << ": " << rep.failures();
  }
  const auto quadratic = validate_nonlinearity(Nonlinearity::power(2.0), 1.0, 3, 0.75);
  EXPECT_TRUE(quadratic.passed()) << quadratic.failures();
}

TEST(Nonlinearity, LinearTermIsNotSuperlinearAtZero) {
  auto lin = Nonlinearity::custom([](double t) { return t > 0 ? t + t * t * t : 0.0; },
                                  [](double t) { return t > 0 ? 0.5 * t * t + 0.25 * t * t * t * t : 0.0; }, 3.0, 10.0);
  const auto rep = validate_nonlinearity(lin, 1.0, 2, 0.75);
  EXPECT_FALSE(rep.passed("f1.2"));
  EXPECT_TRUE(rep.passed("f1.1"));
}

TEST(Nonlinearity, CriticalPowerIsRejected) {
  // p = 2*_s - 1 sits on the boundary of the admissible range.
  const auto rep = validate_nonlinearity(Nonlinearity::power(3.0), 1.0, 2, 0.5);
  EXPECT_FALSE(rep.passed("f1.3"));
  EXPECT_NE(rep.failures().find("f1.3"), std::string::npos);
  EXPECT_FALSE(validate_nonlinearity(Nonlinearity::power(1.0), 1.0, 2, 0.75).passed("f1.3"));
}

TEST(Nonlinearity, AmbrosettiRabinowitzLevel) {
  // F(t0) = t0^4/4 > a t0^2/2 iff t0^2 > 2a.
  EXPECT_TRUE(validate_nonlinearity(Nonlinearity::power(3.0, 2.0), 1.0, 2, 0.75).passed("f1.4"));
  EXPECT_FALSE(validate_nonlinearity(Nonlinearity::power(3.0, 1.0), 1.0, 2, 0.75).passed("f1.4"));
}

TEST(Nonlinearity, NegativeArgumentsVanish) {
  // An odd user function is still cut off at t <= 0 by the evaluator.
  auto odd = Nonlinearity::custom([](double t) { return t * t * t; }, [](double t) { return t * t * t * t / 4; }, 3.0,
                                  10.0);
  EXPECT_EQ(odd.f(-2.0), 0.0);
  EXPECT_EQ(odd.F(-2.0), 0.0);
  EXPECT_TRUE(validate_nonlinearity(odd, 1.0, 2, 0.75).passed("f2"));
  const auto nl = Nonlinearity::power(2.5);
  EXPECT_EQ(nl.f(-3.0), 0.0);
  EXPECT_EQ(nl.F(-3.0), 0.0);
}

TEST(Nonlinearity, HolderCheckOnlyAtLowOrder) {
  const auto nl = Nonlinearity::power(2.0);
  EXPECT_EQ(validate_nonlinearity(nl, 1.0, 2, 0.75).find("f3"), nullptr);
  const auto rep = validate_nonlinearity(nl, 1.0, 3, 0.5);
  ASSERT_NE(rep.find("f3"), nullptr);
  EXPECT_TRUE(rep.passed("f3")) << rep.failures();
}

TEST(Nonlinearity, PrimitiveMatchesFiniteDifference) {
  const auto tab = Nonlinearity::tabulated({0.5, 1.0, 2.0, 4.0}, {0.1, 0.9, 8.0, 60.0}, 3.0, 10.0);
  const auto pw = Nonlinearity::power(2.5);
  for (const auto* nl : {&tab, &pw})
    for (double t : {0.3, 0.77, 1.5, 3.1, 6.0}) {
      const double h = 1e-6;
      EXPECT_NEAR((nl->F(t + h) - nl->F(t - h)) / (2 * h), nl->f(t), 1e-5 * (1 + nl->f(t))) << "t=" << t;
    }
  EXPECT_NEAR(tab.f(1.5), 0.9 + 0.5 * 7.1, 1e-14);
  EXPECT_NEAR(tab.f(8.0), 60.0 * 8.0, 1e-12);
}

TEST(Nonlinearity, TableValidation) {
  EXPECT_THROW(Nonlinearity::tabulated({0.0}, {0.0}, 3, 10), ValidationError);
  EXPECT_THROW(Nonlinearity::tabulated({0.0, 1.0, 0.5}, {0, 1, 2}, 3, 10), ValidationError);
  EXPECT_THROW(Nonlinearity::tabulated({0.0, 1.0}, {0.5, 1.0}, 3, 10), ValidationError);
  EXPECT_THROW(Nonlinearity::power(-1.0), ValidationError);
}

TEST(Nonlinearity, TableFromCsv) {
  const auto path = std::filesystem::temp_directory_path() / "fnls_test_table.csv";
  {
    std::ofstream out(path);
    out << "t,f\n0,0\n1,1\n2,8\n3,27\n";
  }
  const auto nl = Nonlinearity::from_csv(path.string(), 3.0, 10.0);
  EXPECT_EQ(nl.kind(), Nonlinearity::Kind::tabulated);
  EXPECT_NEAR(nl.f(2.5), 17.5, 1e-14);
  EXPECT_THROW(Nonlinearity::from_csv("/nonexistent/table.csv", 3.0, 10.0), Error);
  std::filesystem::remove(path);
}

TEST(GrowthBound, CubicAndZero) {
  const auto cubic = Nonlinearity::power(3.0);
  const double c = growth_bound_check(cubic, 0.1, 3.0);
  EXPECT_LE(c, 1.0 + 1e-12);
  EXPECT_GT(c, 0.99);
  const auto zero = Nonlinearity::custom([](double) { return 0.0; }, [](double) { return 0.0; }, 2.0, 1.0);
  EXPECT_EQ(growth_bound_check(zero, 0.1, 3.0), 0.0);
  EXPECT_THROW(growth_bound_check(cubic, 0.1, 2.0), ValidationError);
}

TEST(GrowthBound, TabulatedAgainstDenseSup) {
  const std::vector<double> t = {0.0, 0.5, 1.0, 1.5, 2.0};
  const std::vector<double> f = {0.0, 0.02, 0.6, 4.0, 8.0};
  const auto nl = Nonlinearity::tabulated(t, f, 3.0, 10.0);
  const double beta = 0.1, q = 3.0;
  // Independent piecewise-linear interpolant with the power-law continuation beyond the table.
  auto interp = [&](double x) {
    if (x >= t.back()) return f.back() * std::pow(x / t.back(), 3.0);
    std::size_t i = 0;
    while (x > t[i + 1]) ++i;
    return f[i] + (x - t[i]) / (t[i + 1] - t[i]) * (f[i + 1] - f[i]);
  };
  double sup = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    const double x = 1e-4 * k;
    sup = std::max(sup, std::max(0.0, interp(x) - beta * x) / std::pow(x, q));
  }
  const double c = growth_bound_check(nl, beta, q);
  EXPECT_LE(c, sup * (1 + 1e-9));
  EXPECT_GE(c, 0.98 * sup);
}

TEST(GrowthBound, SupercriticalGrowthIsDetected) {
  const auto quintic = Nonlinearity::power(5.0);
  EXPECT_THROW(growth_bound_check(Nonlinearity::custom([](double t) { return t > 0 ? std::pow(t, 5) : 0.0; },
                                                        [](double t) { return t > 0 ? std::pow(t, 6) / 6 : 0.0; }, 3.0,
                                                        10.0),
                                  0.1, 3.0),
               NumericError);
  EXPECT_NO_THROW(growth_bound_check(quintic, 0.1, 5.0));
}

TEST(Potential, RingLevelSetAndMargins) {
  const GridSpec g{2, 0.75, 20.0, 64};
  const auto pot = make_ring_potential(1.0, 1.0, 1.0, 2.0, 2, 1.0, 0.1);
  EXPECT_EQ(pot.shape, ShapeKind::sphere);
  EXPECT_EQ(pot.symmetry, Symmetry::rotation);
  for (const auto& k : pot.K) {
    EXPECT_NEAR(norm(k), 1.0, 1e-14);
    EXPECT_NEAR(pot(k), 1.0, 1e-14);
    EXPECT_NEAR(pot.dist_to_K(k), 0.0, 1e-14);
  }
  EXPECT_NEAR(pot({3.0, 0, 0}), 2.0, 1e-14);
  EXPECT_NEAR(pot({1.5, 0, 0}), 1.25, 1e-14);
  const auto rep = validate_potential(pot, g);
  EXPECT_TRUE(rep.passed()) << rep.failures();
}

TEST(Potential, DoubleWellIsTwoPoints) {
  const GridSpec g{2, 0.75, 20.0, 64};
  const auto pot = make_double_well(1.0, 1.0, 2.0, 2.0, 0.8, 0.1);
  ASSERT_EQ(pot.K.size(), 2u);
  EXPECT_EQ(pot.shape, ShapeKind::two_points);
  EXPECT_DOUBLE_EQ(pot({2.0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(pot({-2.0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(pot({0.0, 0, 0}), 2.0);
  EXPECT_TRUE(validate_potential(pot, g).passed()) << validate_potential(pot, g).failures();
  EXPECT_THROW(make_double_well(1.0, 1.0, 0.3, 2.0, 0.8), ValidationError);
}

TEST(Potential, ClampingAndParameterChecks) {
  const auto pot = make_ring_potential(1.0, 1.0, 1.0, 2.0, 2, 1.0, 0.1);
  EXPECT_DOUBLE_EQ(pot({5.0, 0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(pot({0.0, 0, 0}), 2.0);
  EXPECT_THROW(make_ring_potential(1.0, 1.0, 1.0, 1.9), ValidationError);
  EXPECT_THROW(make_ring_potential(-1.0, 1.0, 1.0, 3.0), ValidationError);
  EXPECT_THROW(make_constant_potential(0.0), ValidationError);
}

TEST(Potential, CollarMustFitInBox) {
  const GridSpec small{2, 0.75, 1.2, 32};
  const auto pot = make_ring_potential(1.0, 1.0, 1.0, 2.0, 2, 1.0, 0.1);
  EXPECT_FALSE(validate_potential(pot, small).passed("h0"));
}

TEST(Potential, SampledOnScaledGrid) {
  const GridSpec g{2, 0.75, 4.0, 16};
  const auto pot = make_ring_potential(1.0, 1.0, 1.0, 2.0);
  const Field V = potential_field(pot, g, 0.5);
  for (std::size_t i = 0; i < V.size(); ++i) EXPECT_DOUBLE_EQ(V[i], pot(0.5 * g.position(i)));
}

TEST(Model, CombinedReport) {
  ModelSpec m{GridSpec{2, 0.75, 20.0, 64}, Nonlinearity::power(3.0), make_ring_potential(1.0, 1.0, 1.0, 2.0, 2, 1.0, 0.1)};
  EXPECT_TRUE(validate_model(m).passed()) << validate_model(m).failures();
  m.grid.s = 0.5;
  EXPECT_FALSE(validate_model(m).passed("f1.3"));
  m.grid.points = 100;
  EXPECT_FALSE(validate_model(m).passed("grid"));
}

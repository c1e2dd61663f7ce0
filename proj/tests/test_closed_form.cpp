#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "conecurve/closed_form.hpp"

using namespace conecurve;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidConfig;
}

LightlikeSolitonParams with(double a, double eta0, double tau0, double C = 0.0) {
  LightlikeSolitonParams p;
  p.a = a;
  p.eta0 = eta0;
  p.tau0 = tau0;
  p.C = C;
  return p;
}

// tau0 giving the requested D for a = 1, eta0 = 1
LightlikeSolitonParams with_D(double D, double C = 0.0) { return with(1.0, 1.0, (2.0 + 2.0 * D) / 3.0, C); }

double central(auto&& f, double x, double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }

// step scaled to the distance from r = 0 and from the pole
double step(double r, double D) {
  const double dist = D < 0.0 ? std::abs(r - std::pow(-D, 2.0 / 3.0)) : 1.0;
  return 2e-3 * std::min({1.0, r, dist});
}

double five_point(auto&& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12.0 * h);
}

}  // namespace

TEST(SolitonParams, DerivedConstants) {
  EXPECT_EQ(LightlikeSolitonParams{}.C1(), 0.0);
  EXPECT_EQ(LightlikeSolitonParams{}.D(), 0.0);
  EXPECT_NEAR(with(1.0, 1.0, 1.0).C1(), 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(with(1.0, 1.0, 1.0).D(), 0.5, 1e-16);
  EXPECT_NEAR(with_D(1.0).D(), 1.0, 1e-15);
  EXPECT_NEAR(with_D(-0.7).D(), -0.7, 1e-15);
}

TEST(EtaTilde, Examples) {
  const auto p = LightlikeSolitonParams{};
  EXPECT_EQ(eta_tilde(0.0, p), 1.0);
  EXPECT_EQ(eta_tilde(0.5, p), 0.5);
  EXPECT_EQ(code_of([&] { eta_tilde(1.0, p); }), ErrorCode::OutOfDomain);
  EXPECT_EQ(eta_tilde(-1.0, with(2.0, 3.0, 0.0)), 3.5);
}

TEST(TauTilde, Examples) {
  const auto p = LightlikeSolitonParams{};
  EXPECT_NEAR(tau_tilde(1.0, p), 2.0 / 3.0, 1e-16);
  EXPECT_NEAR(tau_tilde(4.0, with(1.0, 1.0, 1.0)), 34.0 / 3.0, 1e-14);
  for (auto q : {with(1.0, 1.0, 1.0), with(0.5, 2.0, -1.0), with(3.0, 0.3, 0.2)})
    EXPECT_NEAR(tau_tilde(q.eta0, q), q.tau0, 1e-14);
  EXPECT_EQ(code_of([&] { tau_tilde(0.0, p); }), ErrorCode::OutOfDomain);
}

TEST(X3Tilde, MonomialCase) {
  EXPECT_NEAR(x3_tilde(2.0, LightlikeSolitonParams{}), -1.0, 1e-15);
  EXPECT_NEAR(x3_tilde(2.0, with(1.0, 1.0, 2.0 / 3.0, 0.5)), -1.0 + 4.0, 1e-14);
  // the monomial antiderivative of r^{-3}
  EXPECT_NEAR(central([](double r) { return soliton_antiderivative(r, 0.0); }, 1.7, 1e-5),
              soliton_integrand(1.7, 0.0), 1e-8);
}

TEST(X3Tilde, ClosedFormMatchesQuadrature) {
  const double closed = soliton_antiderivative_positive(2.0, 1.0) - soliton_antiderivative_positive(1.0, 1.0);
  EXPECT_NEAR(closed, adaptive_quadrature(1.0, 2.0, 1.0), 1e-10);
  for (double D : {0.1, 0.5, 3.0}) {
    for (auto [lo, hi] : {std::pair{0.05, 0.4}, std::pair{0.5, 7.0}}) {
      const double c = soliton_antiderivative_positive(hi, D) - soliton_antiderivative_positive(lo, D);
      EXPECT_NEAR(c, adaptive_quadrature(lo, hi, D), 1e-10) << D;
    }
  }
}

TEST(X3Tilde, ClosedFormDifferentiatesToIntegrand) {
  for (double D : {0.1, 1.0, 3.0}) {
    auto F = [D](double r) { return soliton_antiderivative_positive(r, D); };
    for (double r = 0.05; r < 6.0; r += 0.173) EXPECT_NEAR(five_point(F, r, step(r, D)), soliton_integrand(r, D), 1e-8) << D;
  }
}

TEST(X3Tilde, NegativeDByQuadrature) {
  const double D = -1.0;
  auto F = [D](double r) { return soliton_antiderivative(r, D); };
  for (double r : {0.2, 0.5, 0.8, 1.3, 2.0, 4.0}) EXPECT_NEAR(five_point(F, r, step(r, D)), soliton_integrand(r, D), 1e-8) << r;
  // the logarithm-arctangent form continues to D < 0 with a negative cube root and serves as an oracle
  for (auto [lo, hi] : {std::pair{0.1, 0.95}, std::pair{1.05, 6.0}}) {
    const double closed = soliton_antiderivative_positive(hi, D) - soliton_antiderivative_positive(lo, D);
    EXPECT_NEAR(F(hi) - F(lo), closed, 1e-10 * std::max(1.0, std::abs(closed)));
  }
  EXPECT_EQ(code_of([&] { soliton_antiderivative(1.0, D); }), ErrorCode::PoleAtRoot);
  const auto p = with_D(-1.0);
  EXPECT_EQ(code_of([&] { x3_tilde(1.0, p); }), ErrorCode::PoleAtRoot);
}

TEST(X3Tilde, SolvesLinearOde) {
  // x3' + 2 (eta/tau) x3 = -1 in s, with r = eta0 - s/a
  for (auto p : {LightlikeSolitonParams{}, with(1.0, 1.0, 2.0 / 3.0, 0.4), with_D(1.0), with_D(0.3, -0.2),
                 with(2.0, 1.5, 4.0, 0.1), with_D(-0.5)}) {
    for (double s = -2.0; s < 0.9; s += 0.137) {
      const double r = eta_tilde(s, p);
      if (std::abs(std::pow(r, 1.5) + p.D()) < 0.05) continue;
      auto x3 = [&](double u) { return x3_tilde(eta_tilde(u, p), p); };
      const double lhs = central(x3, s, 1e-5) + 2.0 * r / tau_tilde(r, p) * x3(s);
      EXPECT_NEAR(lhs, -1.0, 1e-6 * std::max(1.0, std::abs(x3(s)))) << "D=" << p.D() << " s=" << s;
    }
  }
}

TEST(SolitonCurves, ConeAndConstraintIdentities) {
  for (auto p : {LightlikeSolitonParams{}, with(1.0, 1.0, 2.0 / 3.0, 0.3), with_D(1.0, -0.2), with_D(-0.5, 0.1)}) {
    std::vector<double> grid;
    for (double s = -2.0; s < 0.9; s += 0.05) grid.push_back(s);
    for (const auto& branch : soliton_branches(p, grid)) {
      for (const auto& smp : branch) {
        const double scale = std::max({1.0, max_abs(smp.X), max_abs(smp.Y)});
        EXPECT_LE(std::abs(lorentz_inner(smp.X, smp.X)), 1e-10 * scale * scale);
        EXPECT_LE(std::abs(lorentz_inner(smp.Y, smp.Y)), 1e-10 * scale * scale);
        EXPECT_NEAR(constraint_value(smp.psi), 0.0, 1e-12 * std::max(1.0, smp.psi.max_abs() * smp.psi.max_abs()));
        EXPECT_NEAR(lorentz_inner(smp.X, smp.Y), 1.0, 1e-9 * scale * scale);
        // the reduced coordinates are the projections on (1, 1, 0)
        const MinkVec3 e{1.0, 1.0, 0.0};
        EXPECT_NEAR(lorentz_inner(smp.X, e), smp.psi.alpha, 1e-10 * scale);
        EXPECT_NEAR(lorentz_inner(smp.Y, e), smp.psi.eta, 1e-10 * scale);
        EXPECT_NEAR(lorentz_inner(smp.T, e), smp.psi.tau, 1e-9 * scale * scale);
      }
    }
  }
}

TEST(SolitonCurves, DegenerateAlphaAtTauZero) {
  // tau = (2a/3) sqrt(r) (r^{3/2} + D), so tau vanishes only at the pole of the x3 integrand
  const auto p = with_D(-1.0);
  EXPECT_EQ(code_of([&] { soliton_sample(0.0, p); }), ErrorCode::DegenerateAlpha);
  std::vector<double> grid;
  for (double s = -2.0; s <= 0.9 + 1e-12; s += 0.05) grid.push_back(s);
  const auto branches = soliton_branches(p, grid);
  ASSERT_EQ(branches.size(), 2u);
  EXPECT_GT(branches[0].front().psi.tau, 0.0);
  EXPECT_LT(branches[1].front().psi.tau, 0.0);
  EXPECT_EQ(soliton_branches(LightlikeSolitonParams{}, grid).size(), 1u);
}

TEST(SolitonOracle, AgreesWithInverseFlowIntegration) {
  for (auto p : {LightlikeSolitonParams{}, with(1.0, 1.0, 2.0 / 3.0, 0.3), with_D(1.0, -0.2), with(2.0, 1.5, 4.0)}) {
    const auto cmp = compare_soliton(p, -2.0, std::min(0.9, 0.9 * p.s_max()), 200);
    EXPECT_GT(cmp.compared, 150u);
    EXPECT_LE(cmp.max_error, 1e-6) << "D=" << p.D() << " C=" << p.C;
  }
}

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "minkowski.hpp"
#include "ode.hpp"
#include "reduced_system.hpp"
#include "simulation.hpp"

namespace conecurve {

// Closed-form inverse-flow soliton for a lightlike reference vector with c = 0.
// Everything is a function of r = eta(s) = eta0 - s/a.
struct LightlikeSolitonParams {
  double a = 1.0;
  double eta0 = 1.0;
  double tau0 = 2.0 / 3.0;
  double C = 0.0;
  double pole_tol = 1e-10;

  void validate() const {
    if (!(a > 0.0)) throw Error(ErrorCode::InvalidConfig, "a must be positive");
    if (!(eta0 > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta0 must be positive");
  }

  double C1() const { return (3.0 * tau0 - 2.0 * a * eta0 * eta0) / (3.0 * std::sqrt(eta0)); }
  double D() const { return 1.5 / a * C1(); }
  double s_max() const { return a * eta0; }
};

inline double eta_tilde(double s, const LightlikeSolitonParams& p) {
  if (!(s < p.s_max())) throw Error(ErrorCode::OutOfDomain, "s must stay below a*eta0");
  return -s / p.a + p.eta0;
}

inline double tau_tilde(double r, const LightlikeSolitonParams& p) {
  if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "r must be positive");
  return 2.0 * p.a * r * r / 3.0 + std::sqrt(r) * p.C1();
}

inline double alpha_tilde(double r, const LightlikeSolitonParams& p) {
  const double t = tau_tilde(r, p);
  return -t * t / (2.0 * r);
}

inline double soliton_integrand(double r, double D) {
  const double q = std::pow(r, 1.5) + D;
  return 1.0 / (q * q);
}

// Antiderivative of (r^{3/2} + D)^{-2} for D > 0.
inline double soliton_antiderivative_positive(double r, double D) {
  const double d = std::cbrt(D);
  const double u = std::sqrt(r);
  const double d4 = d * d * d * d;
  const double sq3 = std::numbers::sqrt3;
  return std::log((r - d * u + d * d) / ((u + d) * (u + d))) / (9.0 * d4) +
         2.0 / (3.0 * sq3 * d4) * (std::atan((2.0 * u - d) / (sq3 * d)) + sq3 * r / (r * u / d + d * d));
}

inline double adaptive_quadrature(double lo, double hi, double D, double tol = 1e-13) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate([D](double r) { return soliton_integrand(r, D); }, lo, hi, 15, tol);
}

// An antiderivative of (r^{3/2} + D)^{-2}; for D < 0 it is anchored on the same side of the pole as r.
inline double soliton_antiderivative(double r, double D, double pole_tol = 1e-10) {
  if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "r must be positive");
  if (std::abs(std::pow(r, 1.5) + D) <= pole_tol)
    throw Error(ErrorCode::PoleAtRoot, "r^{3/2} + D vanishes at r = " + std::to_string(r));
  if (D > 0.0) return soliton_antiderivative_positive(r, D);
  if (D == 0.0) return -0.5 / (r * r);
  const double root = std::pow(-D, 2.0 / 3.0);
  const double anchor = r > root ? 2.0 * root : 0.5 * root;
  return adaptive_quadrature(anchor, r, D);
}

inline double x3_tilde(double r, const LightlikeSolitonParams& p) {
  const double D = p.D();
  if (!(r > 0.0)) throw Error(ErrorCode::OutOfDomain, "r must be positive");
  const double q = std::pow(r, 1.5) + D;
  if (std::abs(q) <= p.pole_tol) throw Error(ErrorCode::PoleAtRoot, "r^{3/2} + D vanishes");
  if (D == 0.0) return -p.a * r / 2.0 + p.C * r * r * r;
  return q * q * (p.a * soliton_antiderivative(r, D, p.pole_tol) + p.C);
}

struct SolitonSample {
  double s = 0.0;
  double r = 0.0;
  ReducedState psi;
  double x3 = 0.0;
  double y3 = 0.0;
  MinkVec3 X;
  MinkVec3 T;
  MinkVec3 Y;
};

inline SolitonSample soliton_sample(double s, const LightlikeSolitonParams& p, double alpha_tol = 1e-12) {
  p.validate();
  const double r = eta_tilde(s, p);
  const double tau = tau_tilde(r, p);
  const double alpha = -tau * tau / (2.0 * r);
  if (!(std::abs(alpha) > alpha_tol))
    throw Error(ErrorCode::DegenerateAlpha, "alpha vanishes at s = " + std::to_string(s));
  SolitonSample out;
  out.s = s;
  out.r = r;
  out.psi = {alpha, tau, r};
  out.x3 = x3_tilde(r, p);
  out.y3 = (r * out.x3 + tau) / alpha;
  const double x3 = out.x3, y3 = out.y3;
  out.X = {-(x3 * x3 + alpha * alpha) / (2.0 * alpha), (alpha * alpha - x3 * x3) / (2.0 * alpha), x3};
  out.Y = {-(y3 * y3 + r * r) / (2.0 * r), (r * r - y3 * y3) / (2.0 * r), y3};
  out.T = lorentz_cross(out.X, out.Y);
  return out;
}

inline std::vector<SolitonSample> soliton_curves(const LightlikeSolitonParams& p, std::span<const double> s_grid) {
  std::vector<SolitonSample> out;
  out.reserve(s_grid.size());
  for (double s : s_grid) out.push_back(soliton_sample(s, p));
  return out;
}

// Grid points split into runs on which tau keeps its sign; points where alpha degenerates are dropped.
inline std::vector<std::vector<SolitonSample>> soliton_branches(const LightlikeSolitonParams& p,
                                                                std::span<const double> s_grid) {
  std::vector<std::vector<SolitonSample>> out;
  int last_sign = 0;
  for (double s : s_grid) {
    SolitonSample smp;
    try {
      smp = soliton_sample(s, p);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateAlpha || e.code() == ErrorCode::PoleAtRoot) {
        last_sign = 0;
        continue;
      }
      throw;
    }
    const int sg = smp.psi.tau > 0.0 ? 1 : -1;
    if (sg != last_sign || out.empty()) out.emplace_back();
    out.back().push_back(smp);
    last_sign = sg;
  }
  return out;
}

struct SolitonComparison {
  double max_error = 0.0;
  std::size_t compared = 0;
};

// Closed form against direct integration of the inverse-flow system from the same start.
inline SolitonComparison compare_soliton(const LightlikeSolitonParams& sp, double s_lo, double s_hi,
                                         std::size_t n) {
  const SolitonSample start = soliton_sample(0.0, sp);
  FlowParams p{sp.a, 0.0, VectorClass::Lightlike, FlowKind::ICF};
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-12;
  cfg.abs_tol = 1e-14;
  const double k0 = p.curvature(start.psi.tau);
  const auto traj = integrate_two_sided<3>(reduced_field(p, k0 > 0 ? 1.0 : -1.0), start.psi.as_array(), 0.0,
                                           std::min(s_lo, 0.0), std::max(s_hi, 0.0), cfg);
  SolitonComparison out;
  const MinkVec3 e = reference_vector(VectorClass::Lightlike);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = s_lo + (s_hi - s_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (s < traj.s_begin() || s > traj.s_end()) continue;
    SolitonSample cs;
    try {
      cs = soliton_sample(s, sp);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateAlpha) continue;
      throw;
    }
    const ReducedState num = ReducedState::from_array(traj(s));
    const ReducedState proj{lorentz_inner(cs.X, e), lorentz_inner(cs.T, e), lorentz_inner(cs.Y, e)};
    out.max_error = std::max(out.max_error, (proj - num).max_abs());
    ++out.compared;
  }
  return out;
}

}  // namespace conecurve

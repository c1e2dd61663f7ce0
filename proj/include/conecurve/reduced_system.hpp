#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "minkowski.hpp"

namespace conecurve {

enum class VectorClass { Timelike, Lightlike, Spacelike };
enum class FlowKind { CF, ICF };

constexpr std::string_view to_string(VectorClass v) {
  switch (v) {
    case VectorClass::Timelike: return "timelike";
    case VectorClass::Lightlike: return "lightlike";
    case VectorClass::Spacelike: return "spacelike";
  }
  return "?";
}

constexpr std::string_view to_string(FlowKind f) { return f == FlowKind::CF ? "cf" : "icf"; }

// e1 = (1,0,0), e2 = (1,1,0), e3 = (0,0,1)
constexpr MinkVec3 reference_vector(VectorClass v) {
  switch (v) {
    case VectorClass::Timelike: return {1.0, 0.0, 0.0};
    case VectorClass::Lightlike: return {1.0, 1.0, 0.0};
    case VectorClass::Spacelike: return {0.0, 0.0, 1.0};
  }
  return {};
}

constexpr double constraint_gamma(VectorClass v) {
  switch (v) {
    case VectorClass::Timelike: return -1.0;
    case VectorClass::Lightlike: return 0.0;
    case VectorClass::Spacelike: return 1.0;
  }
  return 0.0;
}

struct FlowParams {
  double a = 1.0;
  double c = 0.0;
  VectorClass vector_class = VectorClass::Timelike;
  FlowKind flow = FlowKind::CF;

  void validate() const {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidConfig, "a must be positive");
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidConfig, "c must be finite");
  }

  double curvature(double tau) const { return c + a * tau; }
};

struct ReducedState {
  double alpha = 0.0;
  double tau = 0.0;
  double eta = 0.0;

  std::array<double, 3> as_array() const { return {alpha, tau, eta}; }
  static ReducedState from_array(const std::array<double, 3>& y) { return {y[0], y[1], y[2]}; }

  friend ReducedState operator-(const ReducedState& u, const ReducedState& v) {
    return {u.alpha - v.alpha, u.tau - v.tau, u.eta - v.eta};
  }
  double norm() const { return std::sqrt(alpha * alpha + tau * tau + eta * eta); }
  double max_abs() const { return std::max({std::abs(alpha), std::abs(tau), std::abs(eta)}); }
};

enum class ConstraintKind { H, C, S };

constexpr std::string_view to_string(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::H: return "H";
    case ConstraintKind::C: return "C";
    case ConstraintKind::S: return "S";
  }
  return "?";
}

struct ConstraintClass {
  ConstraintKind kind = ConstraintKind::H;
  double gamma = -1.0;
};

constexpr ConstraintClass constraint_class_of(VectorClass v) {
  switch (v) {
    case VectorClass::Timelike: return {ConstraintKind::H, -1.0};
    case VectorClass::Lightlike: return {ConstraintKind::C, 0.0};
    case VectorClass::Spacelike: return {ConstraintKind::S, 1.0};
  }
  return {};
}

constexpr double constraint_value(const ReducedState& psi) {
  return 2.0 * psi.alpha * psi.eta + psi.tau * psi.tau;
}

inline ConstraintClass classify_initial(const ReducedState& psi, double tol = 1e-10) {
  if (psi.alpha == 0.0 && psi.tau == 0.0 && psi.eta == 0.0)
    throw Error(ErrorCode::ZeroState, "initial state is the origin");
  const double g = constraint_value(psi);
  if (std::abs(g + 1.0) <= tol && psi.alpha < 0.0) return {ConstraintKind::H, -1.0};
  if (std::abs(g) <= tol && (psi.alpha < 0.0 || (psi.alpha == 0.0 && psi.eta > 0.0)))
    return {ConstraintKind::C, 0.0};
  if (std::abs(g - 1.0) <= tol) return {ConstraintKind::S, 1.0};
  throw Error(ErrorCode::NotOnConstraint,
              "2*alpha*eta + tau^2 = " + std::to_string(g) + " with alpha = " + std::to_string(psi.alpha));
}

inline ReducedState rhs_cf(const ReducedState& psi, const FlowParams& p) {
  const double k = p.curvature(psi.tau);
  return {psi.tau, k * psi.alpha - psi.eta, -k * psi.tau};
}

inline ReducedState rhs_icf(const ReducedState& psi, const FlowParams& p, double singular_tol = 1e-12) {
  const double k = p.curvature(psi.tau);
  if (!(std::abs(k) > singular_tol))
    throw Error(ErrorCode::CurvatureSingular, "c + a*tau = " + std::to_string(k));
  return {psi.tau, psi.alpha / k - psi.eta, -psi.tau / k};
}

inline ReducedState reduced_rhs(const ReducedState& psi, const FlowParams& p) {
  return p.flow == FlowKind::CF ? rhs_cf(psi, p) : rhs_icf(psi, p);
}

struct ConservedResiduals {
  double r1 = 0.0;
  double r2 = 0.0;
};

inline ConservedResiduals conserved_residuals(const ReducedState& psi, double tau_prime, const FlowParams& p,
                                              const ConstraintClass& cls) {
  const double k = p.curvature(psi.tau);
  const double a = psi.alpha, t = psi.tau, e = psi.eta, g = cls.gamma;
  return {k * a * a - a * tau_prime + 0.5 * t * t - 0.5 * g,
          e * e + e * tau_prime + 0.5 * k * t * t - 0.5 * g * k};
}

struct TrivialSolution {
  enum class Kind { ConstantCurvature, Parabolic };
  Kind kind = Kind::ConstantCurvature;
  ReducedState initial;
  double sign = 1.0;
  double c = 0.0;

  ReducedState at(double s) const {
    if (kind == Kind::ConstantCurvature) return initial;
    return {sign * s + initial.alpha, sign, 0.0};
  }
};

inline std::optional<TrivialSolution> trivial_solution_check(const ReducedState& psi0, const FlowParams& p,
                                                             double tol = 1e-12) {
  if (std::abs(psi0.tau) <= tol && std::abs(psi0.eta - p.c * psi0.alpha) <= tol)
    return TrivialSolution{TrivialSolution::Kind::ConstantCurvature, {psi0.alpha, 0.0, p.c * psi0.alpha}, 1.0, p.c};
  for (double sgn : {1.0, -1.0}) {
    if (std::abs(psi0.tau - sgn) <= tol && std::abs(psi0.eta) <= tol && std::abs(p.c + p.a * sgn) <= tol)
      return TrivialSolution{TrivialSolution::Kind::Parabolic, {psi0.alpha, sgn, 0.0}, sgn, p.c};
  }
  return std::nullopt;
}

enum class FixedPointType { StableNode, StableSpiral, UnstableNode, UnstableSpiral, Saddle, Degenerate };

constexpr std::string_view to_string(FixedPointType t) {
  switch (t) {
    case FixedPointType::StableNode: return "stable-node";
    case FixedPointType::StableSpiral: return "stable-spiral";
    case FixedPointType::UnstableNode: return "unstable-node";
    case FixedPointType::UnstableSpiral: return "unstable-spiral";
    case FixedPointType::Saddle: return "saddle";
    case FixedPointType::Degenerate: return "degenerate";
  }
  return "?";
}

struct FixedPoint {
  ReducedState point;
  std::array<std::complex<double>, 2> eigenvalues;
  FixedPointType type = FixedPointType::Degenerate;
  bool real_eigenvalues = false;
};

struct FixedPointReport {
  std::vector<FixedPoint> points;
  // Set for c < 0: the origin attracts trajectories of C from its boundary.
  std::optional<ReducedState> boundary_attractor;
};

inline FixedPointType classify_eigenpair(const std::array<std::complex<double>, 2>& lam,
                                         double degenerate_tol = 1e-12) {
  const double r0 = lam[0].real(), r1 = lam[1].real();
  if (std::abs(r0) < degenerate_tol || std::abs(r1) < degenerate_tol) return FixedPointType::Degenerate;
  const bool complex = lam[0].imag() != 0.0;
  if (r0 * r1 < 0.0) return FixedPointType::Saddle;
  if (r0 < 0.0) return complex ? FixedPointType::StableSpiral : FixedPointType::StableNode;
  return complex ? FixedPointType::UnstableSpiral : FixedPointType::UnstableNode;
}

// Roots of the tangential characteristic polynomial, written as (b +- sqrt(disc)) / (2 w).
inline std::array<std::complex<double>, 2> eigen_pair(double b, double disc, double w) {
  const std::complex<double> root = std::sqrt(std::complex<double>(disc, 0.0));
  return {(b + root) / (2.0 * w), (b - root) / (2.0 * w)};
}

inline FixedPointReport fixed_points(const FlowParams& p, double degenerate_tol = 1e-12) {
  p.validate();
  const double a = p.a, c = p.c;
  if (c == 0.0) throw Error(ErrorCode::NoFixedPoints, "c = 0 has no fixed points in H or S");
  FixedPointReport rep;
  if (c < 0.0) {
    const double w = std::sqrt(-2.0 * c);
    FixedPoint fp;
    fp.point = {-1.0 / w, 0.0, -c / w};
    const double disc = a * a - 16.0 * c * c;
    fp.eigenvalues = eigen_pair(-a, disc, w);
    fp.real_eigenvalues = disc >= 0.0;
    fp.type = classify_eigenpair(fp.eigenvalues, degenerate_tol);
    rep.points.push_back(fp);
    rep.boundary_attractor = ReducedState{0.0, 0.0, 0.0};
  } else {
    const double w = std::sqrt(2.0 * c);
    const double disc = a * a + 16.0 * c * c;
    for (double sgn : {1.0, -1.0}) {
      FixedPoint fp;
      fp.point = {-sgn / w, 0.0, -sgn * c / w};
      fp.eigenvalues = eigen_pair(-sgn * a, disc, w);
      fp.real_eigenvalues = true;
      fp.type = classify_eigenpair(fp.eigenvalues, degenerate_tol);
      rep.points.push_back(fp);
    }
  }
  return rep;
}

}  // namespace conecurve

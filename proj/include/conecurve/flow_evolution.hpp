#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cone_geometry.hpp"
#include "errors.hpp"
#include "minkowski.hpp"
#include "reduced_system.hpp"

namespace conecurve {

inline MinkVec3 apply(const Eigen::Matrix3d& m, const MinkVec3& v) {
  const Eigen::Vector3d r = m * Eigen::Vector3d(v.x1, v.x2, v.x3);
  return {r[0], r[1], r[2]};
}

inline const Eigen::Matrix3d& minkowski_metric() {
  static const Eigen::Matrix3d L = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  return L;
}

// max |M^T L M - L|
inline double metric_defect(const Eigen::Matrix3d& m) {
  return (m.transpose() * minkowski_metric() * m - minkowski_metric()).cwiseAbs().maxCoeff();
}

// Pure scaling X(t) = f(t) X of a constant-curvature curve.
struct HomothetyFlow {
  double k = -1.0;
  FlowKind flow = FlowKind::CF;

  HomothetyFlow(double k_, FlowKind flow_) : k(k_), flow(flow_) {
    if (!(k != 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidSpec, "homothety needs k != 0");
  }

  double t_min() const {
    if (k < 0.0) return -std::numeric_limits<double>::infinity();
    return flow == FlowKind::CF ? -1.0 / (2.0 * k) : -k / 2.0;
  }
  double t_max() const {
    if (k > 0.0) return std::numeric_limits<double>::infinity();
    return flow == FlowKind::CF ? -1.0 / (2.0 * k) : -k / 2.0;
  }
  bool contains(double t) const { return t > t_min() && t < t_max(); }

  void require(double t) const {
    if (!contains(t)) throw Error(ErrorCode::OutOfDomain, "t = " + std::to_string(t) + " outside the flow interval");
  }

  double scale(double t) const {
    require(t);
    return flow == FlowKind::CF ? std::sqrt(2.0 * k * t + 1.0) : 1.0 / std::sqrt(2.0 * t / k + 1.0);
  }

  double curvature(double t) const {
    require(t);
    return flow == FlowKind::CF ? k / (2.0 * k * t + 1.0) : 2.0 * t + k;
  }
};

inline std::vector<CurveSample> homothety_evolve(std::span<const CurveSample> curve, const HomothetyFlow& flow,
                                                 double t) {
  const double f = flow.scale(t);
  const double kh = flow.curvature(t);
  std::vector<CurveSample> out;
  out.reserve(curve.size());
  for (const auto& smp : curve) out.push_back({smp.s, f * smp.X, smp.T, smp.Y / f, kh});
  return out;
}

// The one-parameter isometries M(t) and scalings f(t) that move a self-similar curve.
struct IsometryFamily {
  VectorClass vector_class = VectorClass::Timelike;
  double a = 1.0;
  double c = 0.0;
  double domain_guard = 1e-10;

  void require(double t) const {
    if (c != 0.0 && !(2.0 * c * t + 1.0 >= domain_guard))
      throw Error(ErrorCode::OutOfDomain, "2ct + 1 = " + std::to_string(2.0 * c * t + 1.0));
  }

  double scale(double t) const {
    require(t);
    return c == 0.0 ? 1.0 : std::sqrt(2.0 * c * t + 1.0);
  }

  double angle(double t) const {
    require(t);
    return c == 0.0 ? a * t : (a / c) * std::log(std::sqrt(2.0 * c * t + 1.0));
  }

  Eigen::Matrix3d matrix(double t) const { return matrix_at_angle(angle(t)); }

  Eigen::Matrix3d matrix_at_angle(double phi) const {
    Eigen::Matrix3d m;
    switch (vector_class) {
      case VectorClass::Timelike:
        m << 1.0, 0.0, 0.0, 0.0, std::cos(phi), -std::sin(phi), 0.0, std::sin(phi), std::cos(phi);
        break;
      case VectorClass::Lightlike: {
        const double q = 0.5 * phi * phi;
        m << 1.0 + q, -q, -phi, q, 1.0 - q, -phi, -phi, phi, 1.0;
        break;
      }
      case VectorClass::Spacelike:
        m << std::cosh(phi), std::sinh(phi), 0.0, std::sinh(phi), std::cosh(phi), 0.0, 0.0, 0.0, 1.0;
        break;
    }
    return m;
  }
};

inline IsometryFamily isometry_family(const FlowParams& p) {
  p.validate();
  return {p.vector_class, p.a, p.c};
}

inline std::vector<CurveSample> evolve_self_similar(std::span<const CurveSample> curve, const IsometryFamily& fam,
                                                    double t) {
  const double f = fam.scale(t);
  const Eigen::Matrix3d m = fam.matrix(t);
  std::vector<CurveSample> out;
  out.reserve(curve.size());
  for (const auto& smp : curve)
    out.push_back({smp.s, f * apply(m, smp.X), apply(m, smp.T), apply(m, smp.Y) / f, smp.k / (f * f)});
  return out;
}

using EvolutionAccessor = std::function<std::vector<CurveSample>(double)>;

namespace detail {

inline double flow_residual(const EvolutionAccessor& at, double t, double dt, FlowKind flow) {
  const auto now = at(t);
  const auto plus = at(t + dt);
  const auto minus = at(t - dt);
  if (plus.size() != now.size() || minus.size() != now.size())
    throw Error(ErrorCode::InvalidConfig, "evolution changed the sample count");
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    const MinkVec3 dxdt = (plus[i].X - minus[i].X) / (2.0 * dt);
    const double lhs = lorentz_inner(dxdt, now[i].Y);
    const double rhs = flow == FlowKind::CF ? now[i].k : -1.0 / now[i].k;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace detail

// Max over samples of |<dX/dt, Y> - k| (CF) or |<dX/dt, Y> + 1/k| (ICF), central differences at fixed s.
inline double verify_flow_equation(const EvolutionAccessor& at, double t, double dt, FlowKind flow,
                                   bool richardson = false) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
  if (!richardson) return detail::flow_residual(at, t, dt, flow);
  const auto now = at(t);
  const auto p1 = at(t + dt), m1 = at(t - dt), p2 = at(t + 0.5 * dt), m2 = at(t - 0.5 * dt);
  double worst = 0.0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    const MinkVec3 coarse = (p1[i].X - m1[i].X) / (2.0 * dt);
    const MinkVec3 fine = (p2[i].X - m2[i].X) / dt;
    const MinkVec3 dxdt = (4.0 * fine - coarse) / 3.0;
    const double rhs = flow == FlowKind::CF ? now[i].k : -1.0 / now[i].k;
    worst = std::max(worst, std::abs(lorentz_inner(dxdt, now[i].Y) - rhs));
  }
  return worst;
}

struct DualityCheck {
  std::vector<CurveSample> dual;
  // max |k(-Y) - 1/k| from the curvature formula applied to -Y in the original parameter
  double max_curvature_error = 0.0;
};

// -Y of a curve without curvature zeros, with curvature 1/k. The input grid must be uniform in s.
inline DualityCheck cf_icf_duality(std::span<const CurveSample> curve, double zero_tol = 1e-8) {
  if (curve.size() < 5) throw Error(ErrorCode::InvalidConfig, "need at least 5 samples");
  for (const auto& smp : curve)
    if (!(std::abs(smp.k) > zero_tol))
      throw Error(ErrorCode::CurvatureZero, "k = " + std::to_string(smp.k) + " at s = " + std::to_string(smp.s));
  DualityCheck out;
  std::vector<MinkVec3> minus_y;
  minus_y.reserve(curve.size());
  double dual_s = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (i > 0) dual_s += 0.5 * (std::abs(curve[i - 1].k) + std::abs(curve[i].k)) * (curve[i].s - curve[i - 1].s);
    out.dual.push_back(dual_sample(curve[i], dual_s));
    minus_y.push_back(-curve[i].Y);
  }
  const double h = (curve.back().s - curve.front().s) / static_cast<double>(curve.size() - 1);
  const auto k_dual = curvature_sampled(minus_y, h);
  for (std::size_t i = 2; i + 2 < curve.size(); ++i)
    out.max_curvature_error = std::max(out.max_curvature_error, std::abs(k_dual[i] - 1.0 / curve[i].k));
  return out;
}

}  // namespace conecurve

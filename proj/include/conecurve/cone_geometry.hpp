#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
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

struct PolarState {
  double rho = 1.0;
  double rho_prime = 0.0;
  double phi = 0.0;
};

inline constexpr double kApexTol = 1e-14;

inline void check_apex(double rho) {
  if (!(rho > kApexTol)) throw Error(ErrorCode::ApexSingular, "rho = " + std::to_string(rho));
}

inline MinkVec3 cone_point(double rho, double phi) { return {rho, rho * std::cos(phi), rho * std::sin(phi)}; }

inline MinkVec3 polar_tangent(const PolarState& st) {
  const double c = std::cos(st.phi), s = std::sin(st.phi);
  return {st.rho_prime, st.rho_prime * c - s, st.rho_prime * s + c};
}

inline MinkVec3 associated_Y(const PolarState& st) {
  check_apex(st.rho);
  const double c = std::cos(st.phi), s = std::sin(st.phi), r = st.rho_prime;
  const double w = 1.0 / (2.0 * st.rho);
  return {-w * (1.0 + r * r), w * (2.0 * r * s + (1.0 - r * r) * c), w * (-2.0 * r * c + (1.0 - r * r) * s)};
}

inline Frame polar_frame(const PolarState& st, double s = 0.0) {
  return {cone_point(st.rho, st.phi), polar_tangent(st), associated_Y(st), s};
}

// Velocities of (rho, rho', phi) for an arc-length curve of curvature k.
inline PolarState polar_rhs(const PolarState& st, double k) {
  check_apex(st.rho);
  const double r = st.rho, rp = st.rho_prime;
  return {rp, r * k + (1.0 + rp * rp) / (2.0 * r), 1.0 / r};
}

inline Frame frame_rhs(const Frame& f, double k) { return {f.T, k * f.X - f.Y, -k * f.T, 1.0}; }

struct CurveSample {
  double s = 0.0;
  MinkVec3 X, T, Y;
  double k = 0.0;

  Frame frame() const { return {X, T, Y, s}; }
};

inline CurveSample polar_sample(double s, const PolarState& st, double k) {
  return {s, cone_point(st.rho, st.phi), polar_tangent(st), associated_Y(st), k};
}

inline ReducedState project(const Frame& f, const MinkVec3& e) {
  return {lorentz_inner(f.X, e), lorentz_inner(f.T, e), lorentz_inner(f.Y, e)};
}

inline std::vector<ReducedState> reduced_from_curve(std::span<const CurveSample> samples, const MinkVec3& e) {
  std::vector<ReducedState> out;
  out.reserve(samples.size());
  for (const auto& smp : samples) out.push_back(project(smp.frame(), e));
  return out;
}

namespace detail {

inline Eigen::Vector3d polar_residual(const Eigen::Vector3d& x, const ReducedState& psi, const MinkVec3& e) {
  const ReducedState got = project(polar_frame({x[0], x[1], x[2]}), e);
  return {got.alpha - psi.alpha, got.tau - psi.tau, got.eta - psi.eta};
}

// Damped Newton with minimum-norm steps; the system is underdetermined along
// symmetry directions of the reference vector.
inline bool newton_polish(Eigen::Vector3d& x, const ReducedState& psi, const MinkVec3& e, double tol) {
  Eigen::Vector3d r = polar_residual(x, psi, e);
  for (int it = 0; it < 100; ++it) {
    if (r.norm() <= tol) return true;
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
      Eigen::Vector3d xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      if (j == 0 && xm[0] <= kApexTol) xm[0] = x[0];
      J.col(j) = (polar_residual(xp, psi, e) - polar_residual(xm, psi, e)) / (xp[j] - xm[j]);
    }
    const Eigen::Vector3d step = J.completeOrthogonalDecomposition().solve(-r);
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
      Eigen::Vector3d trial = x + lambda * step;
      if (!(trial[0] > kApexTol)) continue;
      const Eigen::Vector3d rt = polar_residual(trial, psi, e);
      if (rt.allFinite() && rt.norm() < r.norm()) {
        x = trial;
        r = rt;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return r.norm() <= tol;
}

inline PolarState closed_form_seed(const ReducedState& psi, VectorClass v) {
  const double a = psi.alpha, t = psi.tau, h = psi.eta;
  switch (v) {
    case VectorClass::Timelike:
      return {-a, -t, 0.0};
    case VectorClass::Spacelike:
      if (a > 0.0) return {a, t, std::numbers::pi / 2};
      if (a < 0.0) return {-a, -t, -std::numbers::pi / 2};
      return t >= 0.0 ? PolarState{1.0, -h, 0.0} : PolarState{1.0, h, std::numbers::pi};
    case VectorClass::Lightlike:
      if (a < 0.0) return {-a / 2.0, -t / 2.0, std::numbers::pi};
      return {h > 0.0 ? 1.0 / h : 1.0, 0.0, 0.0};
  }
  return {};
}

}  // namespace detail

inline PolarState initial_polar_from_reduced(const ReducedState& psi0, const FlowParams& p, double tol = 1e-10) {
  const MinkVec3 e = reference_vector(p.vector_class);
  const double scaled_tol = tol * std::max(1.0, psi0.max_abs());
  const PolarState seed = detail::closed_form_seed(psi0, p.vector_class);
  Eigen::Vector3d x(seed.rho, seed.rho_prime, seed.phi);
  if (seed.rho > kApexTol && detail::newton_polish(x, psi0, e, scaled_tol)) return {x[0], x[1], x[2]};
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 64; ++i) {
    Eigen::Vector3d g(1.0, 0.0, 2.0 * std::numbers::pi * i / 64.0);
    if (detail::newton_polish(g, psi0, e, scaled_tol)) return {g[0], g[1], g[2]};
    best = std::min(best, detail::polar_residual(g, psi0, e).norm());
  }
  throw Error(ErrorCode::NoFrameFound, "no polar lift of (" + std::to_string(psi0.alpha) + ", " +
                                           std::to_string(psi0.tau) + ", " + std::to_string(psi0.eta) +
                                           "); best residual " + std::to_string(best));
}

// Cone curvature of a curve whose reduced state has the given tau.
inline double curve_curvature(const FlowParams& p, double tau) {
  const double k = p.curvature(tau);
  return p.flow == FlowKind::CF ? k : 1.0 / k;
}

struct ReconstructOptions {
  std::size_t samples = 2001;
  // Restricts the sampled window; defaults to the whole trajectory.
  std::optional<double> s_min, s_max;
};

struct Reconstruction {
  std::vector<CurveSample> samples;
  PolarState initial;
  // max over samples of |(<X,e>,<T,e>,<Y,e>) - psi(s)|
  double max_projection_error = 0.0;
  // the same, divided by max(1, |psi(s)|)
  double max_relative_projection_error = 0.0;
  // max over samples of |eta X + tau T + alpha Y - e|
  double max_expansion_error = 0.0;
  // max over samples of |k - curvature from <T,e>| / max(1, |k|); the inverse flow has unbounded k at a barrier
  double max_self_similarity_error = 0.0;
  DenseTrajectory<6> joint;
};

namespace detail {

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  if (n > 1) g.back() = hi;
  return g;
}

inline double reference_s(const ReducedTrajectory& traj) { return std::clamp(0.0, traj.s_begin(), traj.s_end()); }

}  // namespace detail

// Integrates the reduced system jointly with the polar equation so both share one step sequence.
inline Reconstruction reconstruct_curve(const ReducedTrajectory& psi_traj, const FlowParams& p,
                                        const IntegratorConfig& cfg, const ReconstructOptions& opt = {}) {
  if (psi_traj.empty()) throw Error(ErrorCode::InvalidConfig, "empty trajectory");
  if (opt.samples < 2) throw Error(ErrorCode::InvalidConfig, "need at least two samples");
  const double s0 = detail::reference_s(psi_traj);
  const ReducedState psi0 = ReducedState::from_array(psi_traj(s0));
  Reconstruction out;
  out.initial = initial_polar_from_reduced(psi0, p);

  const double lo = std::max(psi_traj.s_begin(), opt.s_min.value_or(psi_traj.s_begin()));
  const double hi = std::min(psi_traj.s_end(), opt.s_max.value_or(psi_traj.s_end()));
  if (!(lo < hi)) throw Error(ErrorCode::InvalidConfig, "empty reconstruction window");

  double sign = 0.0;
  if (p.flow == FlowKind::ICF) sign = p.curvature(psi0.tau) > 0.0 ? 1.0 : -1.0;
  auto field = reduced_field(p, sign);
  auto rhs = [&](double s, const OdeState<6>& y) -> OdeState<6> {
    const OdeState<3> dpsi = field(s, {y[0], y[1], y[2]});
    const PolarState dp = polar_rhs({y[3], y[4], y[5]}, curve_curvature(p, y[1]));
    return {dpsi[0], dpsi[1], dpsi[2], dp.rho, dp.rho_prime, dp.phi};
  };
  const OdeState<6> y0{psi0.alpha, psi0.tau, psi0.eta, out.initial.rho, out.initial.rho_prime, out.initial.phi};
  out.joint = integrate_two_sided<6>(rhs, y0, s0, std::min(lo, s0), std::max(hi, s0), cfg);

  const double a = std::max(lo, out.joint.s_begin()), b = std::min(hi, out.joint.s_end());
  const MinkVec3 e = reference_vector(p.vector_class);
  out.samples.reserve(opt.samples);
  for (double s : detail::uniform_grid(a, b, opt.samples)) {
    const OdeState<6> y = out.joint(s);
    const PolarState st{y[3], y[4], y[5]};
    out.samples.push_back(polar_sample(s, st, curve_curvature(p, y[1])));
    const CurveSample& cs = out.samples.back();
    const ReducedState psi = ReducedState::from_array(psi_traj(s));
    const ReducedState got = project(cs.frame(), e);
    out.max_projection_error = std::max(out.max_projection_error, (got - psi).max_abs());
    out.max_relative_projection_error =
        std::max(out.max_relative_projection_error, (got - psi).max_abs() / std::max(1.0, psi.max_abs()));
    const MinkVec3 recon = psi.eta * cs.X + psi.tau * cs.T + psi.alpha * cs.Y;
    out.max_expansion_error = std::max(out.max_expansion_error, max_abs(recon - e));
    out.max_self_similarity_error =
        std::max(out.max_self_similarity_error,
                 std::abs(cs.k - curve_curvature(p, lorentz_inner(cs.T, e))) / std::max(1.0, std::abs(cs.k)));
  }
  return out;
}

// Same curve through the frame equations X' = T, T' = kX - Y, Y' = -kT.
inline std::vector<CurveSample> reconstruct_curve_frames(const ReducedTrajectory& psi_traj, const FlowParams& p,
                                                         const IntegratorConfig& cfg,
                                                         const ReconstructOptions& opt = {}) {
  if (psi_traj.empty()) throw Error(ErrorCode::InvalidConfig, "empty trajectory");
  const double s0 = detail::reference_s(psi_traj);
  const ReducedState psi0 = ReducedState::from_array(psi_traj(s0));
  const Frame f0 = polar_frame(initial_polar_from_reduced(psi0, p));
  const double lo = std::max(psi_traj.s_begin(), opt.s_min.value_or(psi_traj.s_begin()));
  const double hi = std::min(psi_traj.s_end(), opt.s_max.value_or(psi_traj.s_end()));

  double sign = 0.0;
  if (p.flow == FlowKind::ICF) sign = p.curvature(psi0.tau) > 0.0 ? 1.0 : -1.0;
  auto field = reduced_field(p, sign);
  auto rhs = [&](double s, const OdeState<12>& y) -> OdeState<12> {
    const OdeState<3> dpsi = field(s, {y[0], y[1], y[2]});
    const Frame f{{y[3], y[4], y[5]}, {y[6], y[7], y[8]}, {y[9], y[10], y[11]}, s};
    const Frame d = frame_rhs(f, curve_curvature(p, y[1]));
    return {dpsi[0], dpsi[1], dpsi[2], d.X.x1, d.X.x2, d.X.x3, d.T.x1, d.T.x2, d.T.x3, d.Y.x1, d.Y.x2, d.Y.x3};
  };
  const OdeState<12> y0{psi0.alpha, psi0.tau, psi0.eta, f0.X.x1, f0.X.x2, f0.X.x3,
                        f0.T.x1,    f0.T.x2,  f0.T.x3,  f0.Y.x1, f0.Y.x2, f0.Y.x3};
  const auto joint = integrate_two_sided<12>(rhs, y0, s0, std::min(lo, s0), std::max(hi, s0), cfg);
  const double a = std::max(lo, joint.s_begin()), b = std::min(hi, joint.s_end());
  std::vector<CurveSample> out;
  out.reserve(opt.samples);
  for (double s : detail::uniform_grid(a, b, opt.samples)) {
    const OdeState<12> y = joint(s);
    out.push_back({s, {y[3], y[4], y[5]}, {y[6], y[7], y[8]}, {y[9], y[10], y[11]}, curve_curvature(p, y[1])});
  }
  return out;
}

// A piece of -Y between consecutive curvature zeros, carried as a curve in its own right:
// position -Y, tangent sign(k) T, partner -X, curvature 1/k, arc length the integral of |k|.
struct IcfComponent {
  double s_lo = 0.0;
  double s_hi = 0.0;
  std::vector<CurveSample> samples;
};

inline CurveSample dual_sample(const CurveSample& smp, double dual_s) {
  const double sg = smp.k > 0.0 ? 1.0 : -1.0;
  return {dual_s, -smp.Y, sg * smp.T, -smp.X, 1.0 / smp.k};
}

inline std::vector<IcfComponent> split_icf_components(std::span<const CurveSample> samples,
                                                      std::span<const double> k_zeros) {
  std::vector<IcfComponent> out;
  if (samples.empty()) return out;
  std::vector<double> cuts(k_zeros.begin(), k_zeros.end());
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> bounds{samples.front().s};
  for (double z : cuts)
    if (z > samples.front().s && z < samples.back().s) bounds.push_back(z);
  bounds.push_back(samples.back().s);

  for (std::size_t j = 0; j + 1 < bounds.size(); ++j) {
    IcfComponent comp;
    comp.s_lo = bounds[j];
    comp.s_hi = bounds[j + 1];
    double dual_s = 0.0;
    const CurveSample* prev = nullptr;
    for (const auto& smp : samples) {
      if (smp.s < comp.s_lo || smp.s > comp.s_hi) continue;
      if ((j > 0 && smp.s == comp.s_lo) || (j + 2 < bounds.size() && smp.s == comp.s_hi)) continue;
      if (smp.k == 0.0) continue;
      if (prev) dual_s += 0.5 * (std::abs(prev->k) + std::abs(smp.k)) * (smp.s - prev->s);
      comp.samples.push_back(dual_sample(smp, dual_s));
      prev = &smp;
    }
    if (!comp.samples.empty()) out.push_back(std::move(comp));
  }
  return out;
}

enum class ConicKind { Ellipse, Hyperbola, Parabola };

struct ConicSpec {
  ConicKind kind = ConicKind::Ellipse;
  double k = -0.5;
  double s_min = -1.0;
  double s_max = 1.0;
  std::size_t samples = 801;

  void validate() const {
    const bool ok = (kind == ConicKind::Ellipse && k < 0.0) || (kind == ConicKind::Hyperbola && k > 0.0) ||
                    (kind == ConicKind::Parabola && k == 0.0);
    if (!ok) throw Error(ErrorCode::InvalidSpec, "conic kind does not match the sign of k");
    if (!(s_min < s_max) || !std::isfinite(s_min) || !std::isfinite(s_max))
      throw Error(ErrorCode::InvalidSpec, "sampling range must be finite and increasing");
    if (samples < 5) throw Error(ErrorCode::InvalidSpec, "need at least 5 samples");
  }
};

inline std::vector<CurveSample> conic_generator(const ConicSpec& spec) {
  spec.validate();
  const auto grid = detail::uniform_grid(spec.s_min, spec.s_max, spec.samples);
  std::vector<CurveSample> out;
  out.reserve(grid.size());
  if (spec.kind == ConicKind::Ellipse) {
    const double r = std::sqrt(-1.0 / (2.0 * spec.k));
    for (double s : grid) out.push_back(polar_sample(s, {r, 0.0, s / r}, spec.k));
    return out;
  }
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-13;
  cfg.abs_tol = 1e-14;
  cfg.max_step = 0.005;
  cfg.max_span = std::max(cfg.max_span, spec.s_max - spec.s_min + 1.0);
  const double k = spec.k;
  auto rhs = [k](double, const OdeState<3>& y) -> OdeState<3> {
    const PolarState d = polar_rhs({y[0], y[1], y[2]}, k);
    return {d.rho, d.rho_prime, d.phi};
  };
  const double s0 = std::clamp(0.0, spec.s_min, spec.s_max);
  const auto traj = integrate_two_sided<3>(rhs, {1.0, 0.0, 0.0}, s0, spec.s_min, spec.s_max, cfg);
  if (traj.s_begin() > spec.s_min || traj.s_end() < spec.s_max)
    throw Error(ErrorCode::InvalidSpec, "conic leaves the integrable range inside the sampling window");
  for (double s : grid) {
    const OdeState<3> y = traj(s);
    out.push_back(polar_sample(s, {y[0], y[1], y[2]}, k));
  }
  return out;
}

inline std::vector<MinkVec3> positions(std::span<const CurveSample> samples) {
  std::vector<MinkVec3> x;
  x.reserve(samples.size());
  for (const auto& smp : samples) x.push_back(smp.X);
  return x;
}

}  // namespace conecurve

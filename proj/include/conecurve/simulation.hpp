#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "ode.hpp"
#include "reduced_system.hpp"

namespace conecurve {

using ReducedTrajectory = DenseTrajectory<3>;

// Velocity field of the reduced system for the configured flow. For the inverse
// flow the field refuses to cross c + a*tau = 0, which is the barrier of a component.
inline auto reduced_field(const FlowParams& p, double curvature_sign = 0.0) {
  return [p, curvature_sign](double, const OdeState<3>& y) -> OdeState<3> {
    const ReducedState psi = ReducedState::from_array(y);
    if (p.flow == FlowKind::ICF && curvature_sign != 0.0 && p.curvature(psi.tau) * curvature_sign <= 0.0)
      throw Error(ErrorCode::CurvatureSingular, "inverse flow barrier crossed");
    return reduced_rhs(psi, p).as_array();
  };
}

inline std::vector<EventFunction<3>> reduced_events(const FlowParams& p) {
  return {{"tau_zero", [](double, const OdeState<3>& y) { return y[1]; }},
          {"k_zero", [p](double, const OdeState<3>& y) { return p.curvature(y[1]); }}};
}

// The inverse-flow field has slope ~ 1/(c + a*tau), so step control usually gives out just
// before the barrier rather than stepping onto it; such ends are barrier ends.
inline void label_barrier_stops(ReducedTrajectory& traj, const FlowParams& p, double k_tol = 1e-4) {
  auto relabel = [&](std::optional<StopReason>& why, const OdeState<3>& end) {
    if (why && *why == StopReason::StepUnderflow && std::abs(p.curvature(end[1])) <= k_tol)
      why = StopReason::SingularBarrier;
  };
  relabel(traj.stop_minus, traj.samples.front().state);
  relabel(traj.stop_plus, traj.samples.back().state);
  if (traj.stop == StopReason::StepUnderflow) {
    const auto& end = traj.stop_plus ? traj.samples.back().state : traj.samples.front().state;
    if (std::abs(p.curvature(end[1])) <= k_tol) traj.stop = StopReason::SingularBarrier;
  }
}

struct SimulationRequest {
  FlowParams params;
  ReducedState psi0;
  double s_minus = -20.0;
  double s_plus = 20.0;
  IntegratorConfig integrator;
  double constraint_tol = 1e-10;
};

struct SimulationResult {
  ConstraintClass cls;
  ReducedTrajectory traj;

  std::size_t count(std::string_view kind) const {
    std::size_t n = 0;
    for (const auto& e : traj.events)
      if (e.kind == kind) ++n;
    return n;
  }
  std::vector<double> event_locations(std::string_view kind) const {
    std::vector<double> s;
    for (const auto& e : traj.events)
      if (e.kind == kind) s.push_back(e.s);
    return s;
  }
};

inline void check_class_matches(const ConstraintClass& cls, VectorClass v) {
  if (cls.kind != constraint_class_of(v).kind)
    throw Error(ErrorCode::NotOnConstraint, "initial state lies in " + std::string(to_string(cls.kind)) +
                                                " but a " + std::string(to_string(v)) + " vector needs " +
                                                std::string(to_string(constraint_class_of(v).kind)));
}

inline SimulationResult simulate(const SimulationRequest& req) {
  req.params.validate();
  SimulationResult out;
  out.cls = classify_initial(req.psi0, req.constraint_tol);
  check_class_matches(out.cls, req.params.vector_class);
  double sign = 0.0;
  if (req.params.flow == FlowKind::ICF) {
    const double k0 = req.params.curvature(req.psi0.tau);
    if (std::abs(k0) <= 1e-12) throw Error(ErrorCode::CurvatureSingular, "initial state sits on c + a*tau = 0");
    sign = k0 > 0.0 ? 1.0 : -1.0;
  }
  const auto events = reduced_events(req.params);
  out.traj = integrate_two_sided<3>(reduced_field(req.params, sign), req.psi0.as_array(), 0.0, req.s_minus,
                                    req.s_plus, req.integrator, events);
  if (req.params.flow == FlowKind::ICF) label_barrier_stops(out.traj, req.params);
  return out;
}

// Largest interval around s = 0 inside [lo, hi] on which every component of the state stays within bound,
// located to the given resolution.
inline std::pair<double, double> moderate_window(const ReducedTrajectory& traj, double lo, double hi, double bound,
                                                 double resolution = 0.01) {
  lo = std::max(lo, traj.s_begin());
  hi = std::min(hi, traj.s_end());
  const double s0 = std::clamp(0.0, lo, hi);
  auto ok = [&](double s) { return ReducedState::from_array(traj(s)).max_abs() <= bound; };
  double a = s0, b = s0;
  while (b < hi && ok(std::min(b + resolution, hi))) b = std::min(b + resolution, hi);
  while (a > lo && ok(std::max(a - resolution, lo))) a = std::max(a - resolution, lo);
  return {a, b};
}

// Draws alpha and tau, then solves the constraint for eta.
inline ReducedState sample_initial_state(ConstraintKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 3.0);
  std::uniform_real_distribution<double> tau(-2.0, 2.0);
  std::bernoulli_distribution flip(0.5);
  double alpha = -mag(rng);
  const double t = tau(rng);
  double gamma = -1.0;
  if (kind == ConstraintKind::C) gamma = 0.0;
  if (kind == ConstraintKind::S) {
    gamma = 1.0;
    if (flip(rng)) alpha = -alpha;
  }
  return {alpha, t, (gamma - t * t) / (2.0 * alpha)};
}

}  // namespace conecurve

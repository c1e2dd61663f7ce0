#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "errors.hpp"

namespace conecurve {

template <std::size_t N>
using OdeState = std::array<double, N>;

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.5;
  double min_step = 1e-12;
  double blowup_norm = 1e8;
  double max_span = 200.0;
  double event_tol = 1e-10;
  // Event values this small are roundoff, not a sign.
  double event_floor = 1e-12;

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerances must be positive");
    if (!(min_step > 0.0) || !(min_step < max_step))
      throw Error(ErrorCode::InvalidConfig, "need 0 < min_step < max_step");
    if (!(blowup_norm > 0.0)) throw Error(ErrorCode::InvalidConfig, "blowup_norm must be positive");
    if (!(max_span > 0.0)) throw Error(ErrorCode::InvalidConfig, "max_span must be positive");
    if (!(event_tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "event_tol must be positive");
    if (!(event_floor >= 0.0)) throw Error(ErrorCode::InvalidConfig, "event_floor must be non-negative");
  }
};

enum class StopReason { SpanExhausted, BlowUp, StepUnderflow, SingularBarrier };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::SpanExhausted: return "SpanExhausted";
    case StopReason::BlowUp: return "BlowUp";
    case StopReason::StepUnderflow: return "StepUnderflow";
    case StopReason::SingularBarrier: return "SingularBarrier";
  }
  return "?";
}

template <std::size_t N>
struct Event {
  std::string kind;
  double s = 0.0;
  OdeState<N> state{};
  int direction = 0;
};

template <std::size_t N>
struct EventFunction {
  std::string kind;
  std::function<double(double, const OdeState<N>&)> f;
};

namespace detail {

// Dormand-Prince 5(4) tableau and Hairer's dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <std::size_t N>
double inf_norm(const OdeState<N>& y) {
  double m = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(v));
  }
  return m;
}

}  // namespace detail

// One accepted step with its continuous extension on [s0, s0 + h] (h may be negative).
template <std::size_t N>
struct DenseSegment {
  double s0 = 0.0;
  double h = 0.0;
  std::array<OdeState<N>, 5> rc{};

  double s1() const { return s0 + h; }
  double lo() const { return std::min(s0, s0 + h); }
  double hi() const { return std::max(s0, s0 + h); }

  OdeState<N> eval(double s) const {
    const double th = (s - s0) / h;
    const double th1 = 1.0 - th;
    OdeState<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = rc[0][i] + th * (rc[1][i] + th1 * (rc[2][i] + th * (rc[3][i] + th1 * rc[4][i])));
    return y;
  }
};

template <std::size_t N>
class DenseTrajectory {
 public:
  struct Sample {
    double s = 0.0;
    OdeState<N> state{};
    OdeState<N> derivative{};
  };

  std::vector<Sample> samples;
  std::vector<DenseSegment<N>> segments;
  std::vector<Event<N>> events;
  StopReason stop = StopReason::SpanExhausted;
  // Stop reasons at each end, set for the sides that were integrated.
  std::optional<StopReason> stop_minus, stop_plus;
  // +-infinity marks a span that was exhausted; nullopt marks an unexplored side.
  std::optional<double> omega_minus, omega_plus;

  bool empty() const { return samples.empty(); }
  double s_begin() const { return samples.front().s; }
  double s_end() const { return samples.back().s; }

  OdeState<N> operator()(double s) const {
    if (samples.empty()) throw Error(ErrorCode::OutOfDomain, "empty trajectory");
    if (s < s_begin() || s > s_end())
      throw Error(ErrorCode::OutOfDomain, "s = " + std::to_string(s) + " outside the trajectory");
    if (segments.empty()) return samples.front().state;
    auto it = std::lower_bound(segments.begin(), segments.end(), s,
                               [](const DenseSegment<N>& seg, double v) { return seg.hi() < v; });
    if (it == segments.end()) it = std::prev(segments.end());
    return it->eval(s);
  }

  // Builds one trajectory through s0 from a backward and a forward integration.
  static DenseTrajectory merge(DenseTrajectory backward, DenseTrajectory forward) {
    DenseTrajectory out;
    out.samples = std::move(backward.samples);
    if (!out.samples.empty() && !forward.samples.empty()) out.samples.pop_back();
    out.samples.insert(out.samples.end(), forward.samples.begin(), forward.samples.end());
    out.segments = std::move(backward.segments);
    out.segments.insert(out.segments.end(), forward.segments.begin(), forward.segments.end());
    out.events = std::move(backward.events);
    out.events.insert(out.events.end(), forward.events.begin(), forward.events.end());
    out.stop = forward.stop;
    out.stop_minus = backward.stop_minus;
    out.stop_plus = forward.stop_plus;
    out.omega_minus = backward.omega_minus;
    out.omega_plus = forward.omega_plus;
    return out;
  }
};

namespace detail {

// Samples each segment at quarter points; shared segment ends appear once.
template <std::size_t N, class F>
std::vector<std::pair<double, double>> event_nodes(const DenseTrajectory<N>& traj, const F& f) {
  std::vector<std::pair<double, double>> nodes;
  if (traj.segments.empty()) {
    for (const auto& smp : traj.samples) nodes.emplace_back(smp.s, f(smp.s, smp.state));
    return nodes;
  }
  for (std::size_t j = 0; j < traj.segments.size(); ++j) {
    const auto& seg = traj.segments[j];
    const double a = seg.lo(), b = seg.hi();
    for (int q = (j == 0 ? 0 : 1); q <= 4; ++q) {
      const double s = q == 4 ? b : a + 0.25 * q * (b - a);
      nodes.emplace_back(s, f(s, seg.eval(s)));
    }
  }
  return nodes;
}

inline int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace detail

template <std::size_t N, class F>
std::vector<Event<N>> locate_events(const DenseTrajectory<N>& traj, const F& f, std::string_view kind,
                                    double event_tol = 1e-10, double floor = 0.0) {
  std::vector<Event<N>> out;
  if (traj.empty()) return out;
  const auto nodes = detail::event_nodes(traj, f);
  auto emit = [&](double s, int dir) {
    Event<N> ev;
    ev.kind = std::string(kind);
    ev.s = s;
    ev.state = traj(s);
    ev.direction = dir;
    out.push_back(std::move(ev));
  };
  auto bisect = [&](double lo, double flo, double hi) {
    const int slo = detail::sign_of(flo);
    while (hi - lo > event_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = f(mid, traj(mid));
      if (fm == 0.0) return mid;
      if (detail::sign_of(fm) == slo) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  const std::size_t n = nodes.size();
  std::optional<std::size_t> last_nonzero;
  std::optional<std::size_t> pending_zero;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [s, v] = nodes[i];
    if (!std::isfinite(v)) continue;
    // a stretch at or below the floor counts as one zero, resolved by the signs on either side
    if (std::abs(v) <= floor) {
      if (!pending_zero) pending_zero = i;
      continue;
    }
    if (last_nonzero) {
      const auto [sl, vl] = nodes[*last_nonzero];
      const int dir = detail::sign_of(v) > 0 ? 1 : -1;
      if (detail::sign_of(v) != detail::sign_of(vl)) {
        if (pending_zero) emit(nodes[*pending_zero].first, dir);
        else emit(bisect(sl, vl, s), dir);
      } else if (pending_zero) {
        emit(nodes[*pending_zero].first, 0);
      }
    }
    pending_zero.reset();
    last_nonzero = i;
  }
  // Near-touches without a sign change: refine local minima of |f| and keep those below event_tol.
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double vp = nodes[i - 1].second, v = nodes[i].second, vn = nodes[i + 1].second;
    if (std::abs(v) <= floor || std::abs(vp) <= floor || std::abs(vn) <= floor) continue;
    if (!std::isfinite(vp) || !std::isfinite(vn)) continue;
    if (detail::sign_of(vp) != detail::sign_of(v) || detail::sign_of(vn) != detail::sign_of(v)) continue;
    if (!(std::abs(v) <= std::abs(vp) && std::abs(v) <= std::abs(vn))) continue;
    if (!(std::abs(v) < std::abs(vp) || std::abs(v) < std::abs(vn))) continue;
    std::uintmax_t iters = 200;
    const auto [smin, fmin] = boost::math::tools::brent_find_minima(
        [&](double sv) { return std::abs(f(sv, traj(sv))); }, nodes[i - 1].first, nodes[i + 1].first, 52, iters);
    if (fmin < event_tol) emit(smin, 0);
  }
  std::sort(out.begin(), out.end(), [](const Event<N>& x, const Event<N>& y) { return x.s < y.s; });
  return out;
}

template <std::size_t N, class Rhs>
DenseTrajectory<N> integrate(Rhs&& rhs, const OdeState<N>& y0, std::pair<double, double> s_range,
                             const IntegratorConfig& cfg, std::span<const EventFunction<N>> events = {}) {
  using detail::Dopri5;
  cfg.validate();
  const double s_start = s_range.first;
  double s_stop = s_range.second;
  if (!(s_stop != s_start) || !std::isfinite(s_start) || !std::isfinite(s_stop))
    throw Error(ErrorCode::InvalidConfig, "degenerate integration range");
  for (double v : y0)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "initial state is not finite");
  const double dir = s_stop > s_start ? 1.0 : -1.0;
  if (std::abs(s_stop - s_start) > cfg.max_span) s_stop = s_start + dir * cfg.max_span;

  bool singular_in_streak = false;
  auto call = [&](double s, const OdeState<N>& y) -> OdeState<N> {
    try {
      return rhs(s, y);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::CurvatureSingular) throw;
      throw Error(ErrorCode::RhsFailure, std::string(e.what()) + " at s = " + std::to_string(s));
    }
  };
  auto scale = [&](double y, double yn) { return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y), std::abs(yn)); };
  auto rms = [&](const OdeState<N>& v, const OdeState<N>& y, const OdeState<N>& yn) {
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double r = v[i] / scale(y[i], yn[i]);
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(N));
  };

  DenseTrajectory<N> traj;
  auto finish = [&](StopReason why, double s_at) {
    traj.stop = why;
    const double omega = why == StopReason::SpanExhausted ? dir * std::numeric_limits<double>::infinity() : s_at;
    if (dir > 0) {
      traj.stop_plus = why;
      traj.omega_plus = omega;
    } else {
      traj.stop_minus = why;
      traj.omega_minus = omega;
      std::reverse(traj.samples.begin(), traj.samples.end());
      std::reverse(traj.segments.begin(), traj.segments.end());
    }
    for (const auto& ev : events) {
      auto found = locate_events(traj, ev.f, ev.kind, cfg.event_tol, cfg.event_floor);
      traj.events.insert(traj.events.end(), found.begin(), found.end());
    }
    std::stable_sort(traj.events.begin(), traj.events.end(),
                     [](const Event<N>& x, const Event<N>& y) { return x.s < y.s; });
    return traj;
  };

  double s = s_start;
  OdeState<N> y = y0;
  OdeState<N> k1;
  try {
    k1 = call(s, y);
  } catch (const Error&) {
    traj.samples.push_back({s, y, OdeState<N>{}});
    return finish(StopReason::SingularBarrier, s);
  }
  traj.samples.push_back({s, y, k1});

  // Initial step size after Hairer & Wanner.
  double h;
  {
    OdeState<N> sc;
    for (std::size_t i = 0; i < N; ++i) sc[i] = scale(y[i], y[i]);
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      d0 += (y[i] / sc[i]) * (y[i] / sc[i]);
      d1 += (k1[i] / sc[i]) * (k1[i] / sc[i]);
    }
    d0 = std::sqrt(d0 / N);
    d1 = std::sqrt(d1 / N);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, cfg.max_step);
    double h1 = h0;
    try {
      OdeState<N> y1;
      for (std::size_t i = 0; i < N; ++i) y1[i] = y[i] + dir * h0 * k1[i];
      const OdeState<N> f1 = call(s + dir * h0, y1);
      double d2 = 0.0;
      for (std::size_t i = 0; i < N; ++i) d2 += ((f1[i] - k1[i]) / sc[i]) * ((f1[i] - k1[i]) / sc[i]);
      d2 = std::sqrt(d2 / N) / h0;
      const double dm = std::max(d1, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    } catch (const Error&) {
      h1 = h0;
    }
    h = std::max(std::min({100.0 * h0, h1, cfg.max_step}), cfg.min_step);
  }

  bool last_rejected = false;
  while (true) {
    const double remaining = dir * (s_stop - s);
    if (remaining <= 1e-14 * std::max(1.0, std::abs(s))) return finish(StopReason::SpanExhausted, s);
    bool truncated = false;
    if (h >= remaining) {
      h = remaining;
      truncated = true;
    }
    const double hs = dir * h;

    OdeState<N> k2, k3, k4, k5, k6, k7, yt, yn;
    bool singular = false;
    try {
      for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * Dopri5::a21 * k1[i];
      k2 = call(s + Dopri5::c2 * hs, yt);
      for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (Dopri5::a31 * k1[i] + Dopri5::a32 * k2[i]);
      k3 = call(s + Dopri5::c3 * hs, yt);
      for (std::size_t i = 0; i < N; ++i)
        yt[i] = y[i] + hs * (Dopri5::a41 * k1[i] + Dopri5::a42 * k2[i] + Dopri5::a43 * k3[i]);
      k4 = call(s + Dopri5::c4 * hs, yt);
      for (std::size_t i = 0; i < N; ++i)
        yt[i] = y[i] + hs * (Dopri5::a51 * k1[i] + Dopri5::a52 * k2[i] + Dopri5::a53 * k3[i] + Dopri5::a54 * k4[i]);
      k5 = call(s + Dopri5::c5 * hs, yt);
      for (std::size_t i = 0; i < N; ++i)
        yt[i] = y[i] + hs * (Dopri5::a61 * k1[i] + Dopri5::a62 * k2[i] + Dopri5::a63 * k3[i] +
                             Dopri5::a64 * k4[i] + Dopri5::a65 * k5[i]);
      k6 = call(s + hs, yt);
      for (std::size_t i = 0; i < N; ++i)
        yn[i] = y[i] + hs * (Dopri5::a71 * k1[i] + Dopri5::a73 * k3[i] + Dopri5::a74 * k4[i] +
                             Dopri5::a75 * k5[i] + Dopri5::a76 * k6[i]);
      k7 = call(s + hs, yn);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CurvatureSingular) throw;
      singular = true;
    }

    double err = std::numeric_limits<double>::infinity();
    if (!singular) {
      OdeState<N> ev;
      for (std::size_t i = 0; i < N; ++i)
        ev[i] = hs * (Dopri5::e1 * k1[i] + Dopri5::e3 * k3[i] + Dopri5::e4 * k4[i] + Dopri5::e5 * k5[i] +
                      Dopri5::e6 * k6[i] + Dopri5::e7 * k7[i]);
      err = rms(ev, y, yn);
      if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    }
    singular_in_streak = singular_in_streak || singular;

    if (err <= 1.0) {
      DenseSegment<N> seg;
      seg.s0 = s;
      seg.h = hs;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = yn[i] - y[i];
        const double bspl = hs * k1[i] - ydiff;
        seg.rc[0][i] = y[i];
        seg.rc[1][i] = ydiff;
        seg.rc[2][i] = bspl;
        seg.rc[3][i] = ydiff - hs * k7[i] - bspl;
        seg.rc[4][i] = hs * (Dopri5::d1 * k1[i] + Dopri5::d3 * k3[i] + Dopri5::d4 * k4[i] + Dopri5::d5 * k5[i] +
                             Dopri5::d6 * k6[i] + Dopri5::d7 * k7[i]);
      }
      traj.segments.push_back(seg);
      s = truncated ? s_stop : s + hs;
      y = yn;
      k1 = k7;
      traj.samples.push_back({s, y, k1});
      if (detail::inf_norm(y) > cfg.blowup_norm) return finish(StopReason::BlowUp, s);
      double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      h = std::min(h * fac, cfg.max_step);
      last_rejected = false;
      singular_in_streak = false;
      if (h < cfg.min_step) return finish(StopReason::StepUnderflow, s);
    } else {
      const double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.25;
      h *= fac;
      last_rejected = true;
      if (h < cfg.min_step)
        return finish(singular_in_streak ? StopReason::SingularBarrier : StopReason::StepUnderflow, s);
    }
  }
}

// Integrates from s0 back to s_lo and forward to s_hi, and joins the two.
template <std::size_t N, class Rhs>
DenseTrajectory<N> integrate_two_sided(Rhs&& rhs, const OdeState<N>& y0, double s0, double s_lo, double s_hi,
                                       const IntegratorConfig& cfg, std::span<const EventFunction<N>> events = {}) {
  if (!(s_lo < s0) && !(s0 < s_hi)) throw Error(ErrorCode::InvalidConfig, "empty two-sided range");
  if (!(s_lo < s0)) return integrate<N>(rhs, y0, {s0, s_hi}, cfg, events);
  if (!(s0 < s_hi)) return integrate<N>(rhs, y0, {s0, s_lo}, cfg, events);
  auto back = integrate<N>(rhs, y0, {s0, s_lo}, cfg, std::span<const EventFunction<N>>{});
  auto fwd = integrate<N>(rhs, y0, {s0, s_hi}, cfg, std::span<const EventFunction<N>>{});
  auto out = DenseTrajectory<N>::merge(std::move(back), std::move(fwd));
  for (const auto& ev : events) {
    auto found = locate_events(out, ev.f, ev.kind, cfg.event_tol, cfg.event_floor);
    out.events.insert(out.events.end(), found.begin(), found.end());
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const Event<N>& x, const Event<N>& y) { return x.s < y.s; });
  return out;
}

}  // namespace conecurve

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace conecurve {

struct MinkVec3 {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;

  constexpr MinkVec3& operator+=(const MinkVec3& o) {
    x1 += o.x1;
    x2 += o.x2;
    x3 += o.x3;
    return *this;
  }
  constexpr MinkVec3& operator-=(const MinkVec3& o) {
    x1 -= o.x1;
    x2 -= o.x2;
    x3 -= o.x3;
    return *this;
  }
  constexpr MinkVec3& operator*=(double s) {
    x1 *= s;
    x2 *= s;
    x3 *= s;
    return *this;
  }

  friend constexpr MinkVec3 operator+(MinkVec3 a, const MinkVec3& b) { return a += b; }
  friend constexpr MinkVec3 operator-(MinkVec3 a, const MinkVec3& b) { return a -= b; }
  friend constexpr MinkVec3 operator-(MinkVec3 a) { return a *= -1.0; }
  friend constexpr MinkVec3 operator*(double s, MinkVec3 a) { return a *= s; }
  friend constexpr MinkVec3 operator*(MinkVec3 a, double s) { return a *= s; }
  friend constexpr MinkVec3 operator/(MinkVec3 a, double s) { return a *= 1.0 / s; }
  friend constexpr bool operator==(const MinkVec3&, const MinkVec3&) = default;

  constexpr double operator[](std::size_t i) const { return i == 0 ? x1 : (i == 1 ? x2 : x3); }
  bool finite() const { return std::isfinite(x1) && std::isfinite(x2) && std::isfinite(x3); }
};

constexpr double lorentz_inner(const MinkVec3& u, const MinkVec3& v) {
  return -u.x1 * v.x1 + u.x2 * v.x2 + u.x3 * v.x3;
}

constexpr double euclidean_norm2(const MinkVec3& v) { return v.x1 * v.x1 + v.x2 * v.x2 + v.x3 * v.x3; }

inline double euclidean_norm(const MinkVec3& v) { return std::sqrt(euclidean_norm2(v)); }

inline double max_abs(const MinkVec3& v) {
  return std::max({std::abs(v.x1), std::abs(v.x2), std::abs(v.x3)});
}

enum class CausalClass { Timelike, Lightlike, Spacelike, Zero };

// |<v,v>| <= rel_tol * (|v|^2 + 1) counts as null.
inline CausalClass causal_classify(const MinkVec3& v, double rel_tol = 1e-12, double zero_tol = 0.0) {
  const double n2 = euclidean_norm2(v);
  if (std::sqrt(n2) <= zero_tol) return CausalClass::Zero;
  const double q = lorentz_inner(v, v);
  if (std::abs(q) <= rel_tol * (n2 + 1.0)) return CausalClass::Lightlike;
  return q < 0.0 ? CausalClass::Timelike : CausalClass::Spacelike;
}

// The w with <w, z> = det[u; v; z] for all z.
constexpr MinkVec3 lorentz_cross(const MinkVec3& u, const MinkVec3& v) {
  return {-(u.x2 * v.x3 - u.x3 * v.x2), u.x3 * v.x1 - u.x1 * v.x3, u.x1 * v.x2 - u.x2 * v.x1};
}

struct Frame {
  MinkVec3 X;
  MinkVec3 T;
  MinkVec3 Y;
  double s = 0.0;
};

struct FrameResiduals {
  // <X,X>, <Y,Y>, <T,T>-1, <X,T>, <Y,T>, <X,Y>-1
  std::array<double, 6> values{};
  bool on_positive_sheet = false;
  bool pass = false;

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

inline FrameResiduals frame_validate(const Frame& f, double tol) {
  FrameResiduals r;
  r.values = {lorentz_inner(f.X, f.X),       lorentz_inner(f.Y, f.Y), lorentz_inner(f.T, f.T) - 1.0,
              lorentz_inner(f.X, f.T),       lorentz_inner(f.Y, f.T), lorentz_inner(f.X, f.Y) - 1.0};
  r.on_positive_sheet = f.X.x1 > 0.0;
  r.pass = r.on_positive_sheet && r.max_abs() <= tol;
  return r;
}

// Curvature of a cone curve from its first two derivatives in any regular parameter.
inline double curvature_from_derivatives(const MinkVec3& d1, const MinkVec3& d2, double tol = 1e-14) {
  const double g = lorentz_inner(d1, d1);
  if (!(g > tol)) throw Error(ErrorCode::NonSpacelike, "<X',X'> = " + std::to_string(g));
  const double m = lorentz_inner(d1, d2);
  return (m * m - g * lorentz_inner(d2, d2)) / (2.0 * g * g * g);
}

template <class C>
concept DifferentiableCurve = requires(const C& c, double u) {
  { c.d1(u) } -> std::convertible_to<MinkVec3>;
  { c.d2(u) } -> std::convertible_to<MinkVec3>;
};

template <DifferentiableCurve C>
double curvature_arbitrary(const C& curve, double u, double tol = 1e-14) {
  return curvature_from_derivatives(curve.d1(u), curve.d2(u), tol);
}

// Finite-difference derivatives on a uniform grid: 4th-order central inside,
// 2nd-order central one step in, 2nd-order one-sided at the ends.
inline void uniform_derivatives(std::span<const MinkVec3> x, double h, std::vector<MinkVec3>& d1,
                                std::vector<MinkVec3>& d2) {
  const std::size_t n = x.size();
  if (n < 5) throw Error(ErrorCode::InvalidConfig, "need at least 5 samples for curvature");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidConfig, "grid spacing must be positive");
  d1.assign(n, {});
  d2.assign(n, {});
  const double h2 = h * h;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d1[i] = (-1.0 * x[i + 2] + 8.0 * x[i + 1] - 8.0 * x[i - 1] + x[i - 2]) / (12.0 * h);
    d2[i] = (-1.0 * x[i + 2] + 16.0 * x[i + 1] - 30.0 * x[i] + 16.0 * x[i - 1] - x[i - 2]) / (12.0 * h2);
  }
  for (std::size_t i : {std::size_t{1}, n - 2}) {
    d1[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
    d2[i] = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2;
  }
  d1[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
  d2[0] = (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / h2;
  d1[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
  d2[n - 1] = (2.0 * x[n - 1] - 5.0 * x[n - 2] + 4.0 * x[n - 3] - x[n - 4]) / h2;
}

inline std::vector<double> curvature_sampled(std::span<const MinkVec3> x, double h, double tol = 1e-14) {
  std::vector<MinkVec3> d1, d2;
  uniform_derivatives(x, h, d1, d2);
  std::vector<double> k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) k[i] = curvature_from_derivatives(d1[i], d2[i], tol);
  return k;
}

}  // namespace conecurve

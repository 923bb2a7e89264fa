#pragma once

// Stock boundary curves, all 2*pi-periodic and positively oriented:
//   circle  x(t) = c + r (cos t, sin t)
//   peanut  x(t) = c + sqrt(3 cos^2 t + 1) (cos t, sin t)
//   pear    x(t) = c + (2 + 0.3 cos 3t) (cos t, sin t)
//   kite    x(t) = c + (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "dsm/common.hpp"

namespace dsm {

enum class CurveKind { Circle, Peanut, Pear, Kite };

inline std::string_view to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Circle: return "circle";
    case CurveKind::Peanut: return "peanut";
    case CurveKind::Pear: return "pear";
    case CurveKind::Kite: return "kite";
  }
  return "unknown";
}

inline CurveKind parse_curve_kind(std::string_view s) {
  if (s == "circle") return CurveKind::Circle;
  if (s == "peanut") return CurveKind::Peanut;
  if (s == "pear") return CurveKind::Pear;
  if (s == "kite") return CurveKind::Kite;
  throw ValidationError("unknown curve kind '" + std::string(s) + "'");
}

struct BoundaryCurve {
  CurveKind kind = CurveKind::Circle;
  Vec2 center{};
  double radius = 1.0;  // circle only

  static BoundaryCurve circle(Vec2 c, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("circle radius must be > 0");
    return {CurveKind::Circle, c, r};
  }
  static BoundaryCurve peanut(Vec2 c = {}) { return {CurveKind::Peanut, c, 1.0}; }
  static BoundaryCurve pear(Vec2 c = {}) { return {CurveKind::Pear, c, 1.0}; }
  static BoundaryCurve kite(Vec2 c = {}) { return {CurveKind::Kite, c, 1.0}; }
};

struct BoundaryPoint {
  double t = 0.0;
  Vec2 position;
  Vec2 tangent;         // dx/dt
  Vec2 second;          // d2x/dt2
  Vec2 normal;          // unit, outward
  double jacobian = 0;  // |dx/dt|
};

namespace detail {

// Radial curves x = c + rho(t) (cos t, sin t); returns rho, rho', rho''.
struct Radial {
  double r, dr, ddr;
};

inline Radial radial_profile(CurveKind kind, double radius, double t) {
  switch (kind) {
    case CurveKind::Circle: return {radius, 0.0, 0.0};
    case CurveKind::Peanut: {
      const double c = std::cos(t);
      const double s = std::sin(t);
      const double g = 3.0 * c * c + 1.0;
      const double r = std::sqrt(g);
      const double dg = -6.0 * c * s;
      const double ddg = -6.0 * (c * c - s * s);
      const double dr = dg / (2.0 * r);
      const double ddr = ddg / (2.0 * r) - dg * dg / (4.0 * g * r);
      return {r, dr, ddr};
    }
    case CurveKind::Pear:
      return {2.0 + 0.3 * std::cos(3.0 * t), -0.9 * std::sin(3.0 * t), -2.7 * std::cos(3.0 * t)};
    case CurveKind::Kite: break;
  }
  throw ValidationError("radial_profile: not a radial curve");
}

}  // namespace detail

inline BoundaryPoint eval(const BoundaryCurve& curve, double t) {
  BoundaryPoint p;
  p.t = t;
  const double c = std::cos(t);
  const double s = std::sin(t);
  switch (curve.kind) {
    case CurveKind::Circle:
    case CurveKind::Peanut:
    case CurveKind::Pear: {
      const auto [r, dr, ddr] = detail::radial_profile(curve.kind, curve.radius, t);
      p.position = curve.center + Vec2{r * c, r * s};
      p.tangent = {dr * c - r * s, dr * s + r * c};
      p.second = {ddr * c - 2.0 * dr * s - r * c, ddr * s + 2.0 * dr * c - r * s};
      break;
    }
    case CurveKind::Kite: {
      const double c2 = std::cos(2.0 * t);
      const double s2 = std::sin(2.0 * t);
      p.position = curve.center + Vec2{c + 0.65 * c2 - 0.65, 1.5 * s};
      p.tangent = {-s - 1.3 * s2, 1.5 * c};
      p.second = {-c - 2.6 * c2, -1.5 * s};
      break;
    }
    default: throw ValidationError("eval: unknown curve kind");
  }
  p.jacobian = norm(p.tangent);
  // Counterclockwise orientation: rotating the tangent by -pi/2 points outward.
  p.normal = {p.tangent.y / p.jacobian, -p.tangent.x / p.jacobian};
  return p;
}

/// 2m nodes t_j = pi j / m, j = 0 .. 2m-1.
inline std::vector<BoundaryPoint> discretize(const BoundaryCurve& curve, int m) {
  if (m < 8) throw ValidationError("discretize: m must be >= 8");
  if (m % 2 != 0) throw ValidationError("discretize: m must be even");
  std::vector<BoundaryPoint> pts;
  pts.reserve(2 * static_cast<std::size_t>(m));
  for (int j = 0; j < 2 * m; ++j) pts.push_back(eval(curve, kPi * j / m));
  return pts;
}

/// Trapezoid estimate of the arc length on 2m nodes.
inline double arc_length(const BoundaryCurve& curve, int m) {
  double sum = 0.0;
  for (const auto& p : discretize(curve, m)) sum += p.jacobian;
  return sum * kPi / m;
}

/// Winding-number test against the 512-gon. Points within ~1e-9 of the
/// boundary may classify either way.
inline bool contains(const BoundaryCurve& curve, const Vec2& z) {
  constexpr int kNodes = 512;
  double winding = 0.0;
  Vec2 prev = eval(curve, 0.0).position - z;
  for (int j = 1; j <= kNodes; ++j) {
    const Vec2 cur = eval(curve, kTwoPi * (j % kNodes) / kNodes).position - z;
    winding += std::atan2(cross(prev, cur), dot(prev, cur));
    prev = cur;
  }
  return std::abs(winding) > kPi;
}

/// Distance from z to the curve, by dense sampling refined with a local
/// golden-section search.
inline double distance_to(const BoundaryCurve& curve, const Vec2& z) {
  constexpr int kNodes = 512;
  double best = std::numeric_limits<double>::infinity();
  int best_j = 0;
  for (int j = 0; j < kNodes; ++j) {
    const double d = norm(eval(curve, kTwoPi * j / kNodes).position - z);
    if (d < best) {
      best = d;
      best_j = j;
    }
  }
  const double h = kTwoPi / kNodes;
  double a = (best_j - 1) * h;
  double b = (best_j + 1) * h;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double t) { return norm(eval(curve, t).position - z); };
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min(best, std::min(f1, f2));
}

/// Diameter estimate from the discretized curve.
inline double diameter(const BoundaryCurve& curve) {
  const auto pts = discretize(curve, 64);
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      d = std::max(d, norm(pts[i].position - pts[j].position));
    }
  }
  return d;
}

}  // namespace dsm

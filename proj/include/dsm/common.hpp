#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dsm {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr Complex kI{0.0, 1.0};

// Input that violates a documented precondition or file grammar.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that could not be carried out reliably (singular system,
// truncation budget exceeded, degenerate denominator).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, const Vec2& a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(const Vec2& a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

// Direction j of the equispaced grid on the unit circle, angle 2*pi*j/n.
inline Vec2 grid_direction(int j, int n) {
  const double a = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
  return {std::cos(a), std::sin(a)};
}

}  // namespace dsm

#pragma once

// Bessel, Neumann and Hankel functions of integer order and real argument.
//
// Evaluation strategy:
//   t < kAsymptoticCrossover : Miller backward recurrence normalized by
//                              J0 + 2*sum J_2k = 1; Y0 and Y1 from the
//                              Neumann series in the normalized J_k.
//   t >= kAsymptoticCrossover: Hankel asymptotic expansions for orders 0 and 1;
//                              higher J orders by Miller recurrence scaled to
//                              the asymptotic J0 or J1.
//   Y_n for n >= 2           : forward recurrence (Y is the dominant solution).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsm/common.hpp"

namespace dsm::specfun {

inline constexpr int kMaxOrder = 200;
inline constexpr double kAsymptoticCrossover = 25.0;

struct BesselPair {
  double j0, j1, y0, y1;
};

namespace detail {

inline void check_order(int order) {
  if (order < 0 || order > kMaxOrder) {
    throw std::domain_error("bessel: order must lie in [0, " + std::to_string(kMaxOrder) +
                            "], got " + std::to_string(order));
  }
}

inline void check_argument(double t, bool allow_zero) {
  if (!std::isfinite(t)) throw std::domain_error("bessel: argument must be finite");
  if (allow_zero ? t < 0.0 : t <= 0.0) {
    throw std::domain_error(allow_zero ? "bessel: argument must be >= 0"
                                       : "bessel: argument must be > 0");
  }
}

// Hankel asymptotic series P(nu, x), Q(nu, x) for nu in {0, 1}.
inline std::array<double, 2> hankel_pq(int nu, double x) {
  const double mu = 4.0 * nu * nu;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double a = std::abs(term);
    if (a >= prev_abs) break;  // series is asymptotic; stop at the smallest term
    prev_abs = a;
    // k odd contributes to Q with sign (-1)^((k-1)/2); k even to P with (-1)^(k/2)
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 1) {
      q += sign * term;
    } else {
      p += sign * term;
    }
    if (a < 1e-17 * std::abs(p)) break;
  }
  return {p, q};
}

inline BesselPair asymptotic01(double x) {
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double amp = std::sqrt(2.0 / (kPi * x));
  constexpr double r2 = std::numbers::sqrt2 / 2.0;
  // chi0 = x - pi/4, chi1 = x - 3pi/4, expanded to avoid phase rounding.
  const double cos0 = r2 * (c + s);
  const double sin0 = r2 * (s - c);
  const double cos1 = r2 * (s - c);
  const double sin1 = -r2 * (s + c);
  const auto [p0, q0] = hankel_pq(0, x);
  const auto [p1, q1] = hankel_pq(1, x);
  return {amp * (p0 * cos0 - q0 * sin0), amp * (p1 * cos1 - q1 * sin1),
          amp * (p0 * sin0 + q0 * cos0), amp * (p1 * sin1 + q1 * cos1)};
}

inline int miller_start(int nmax, double x) {
  const int base = std::max(nmax, static_cast<int>(std::ceil(x)));
  int start = base + 40 + static_cast<int>(std::ceil(10.0 * std::cbrt(x)));
  return start + (start % 2);
}

struct MillerResult {
  std::vector<double> j;  // J_0..J_nmax, normalized
  double su = 0.0;        // sum_{k>=1} (-1)^k J_2k / k
  double sv = 0.0;        // sum_{j>=1} (-1)^j (2j+1)/(j(j+1)) J_{2j+1}
};

// Backward recurrence from a high start order. When `normalize_by_sum` is
// false the caller rescales with a known J0 or J1 value.
inline MillerResult miller(int nmax, double x, bool normalize_by_sum) {
  const int start = miller_start(std::max(nmax, 1), x);
  const int keep = std::max(nmax, 1);
  MillerResult out;
  out.j.assign(static_cast<std::size_t>(keep) + 1, 0.0);
  double f2 = 0.0;
  double f1 = 1e-300;
  double sum = 0.0;
  double su = 0.0;
  double sv = 0.0;
  constexpr double kBig = 1e250;
  for (int k = start; k >= 0; --k) {
    const double f = 2.0 * (k + 1) / x * f1 - f2;
    if (k <= keep) out.j[static_cast<std::size_t>(k)] = f;
    if (k % 2 == 0) {
      sum += (k == 0) ? f : 2.0 * f;
      if (k > 0) su += ((k / 2) % 2 == 0 ? 1.0 : -1.0) * f / (k / 2);
    } else if (k > 1) {
      const int jj = (k - 1) / 2;
      sv += (jj % 2 == 0 ? 1.0 : -1.0) * (2.0 * jj + 1.0) / (jj * (jj + 1.0)) * f;
    }
    f2 = f1;
    f1 = f;
    if (std::abs(f) > kBig) {
      const double s = 1.0 / kBig;
      f1 *= s;
      f2 *= s;
      sum *= s;
      su *= s;
      sv *= s;
      for (int i = k; i <= keep; ++i) out.j[static_cast<std::size_t>(i)] *= s;
    }
  }
  if (normalize_by_sum) {
    const double inv = 1.0 / sum;
    for (double& v : out.j) v *= inv;
    out.su = su * inv;
    out.sv = sv * inv;
  }
  out.j.resize(static_cast<std::size_t>(nmax) + 1);
  return out;
}

}  // namespace detail

/// J0, J1, Y0, Y1 at one positive argument; the kernel evaluations of the
/// boundary solver need all four together.
inline BesselPair bessel01(double x) {
  detail::check_argument(x, false);
  if (x >= kAsymptoticCrossover) return detail::asymptotic01(x);
  const auto m = detail::miller(1, x, true);
  const double j0 = m.j[0];
  const double j1 = m.j[1];
  const double lg = std::log(0.5 * x) + kEulerGamma;
  const double y0 = (2.0 / kPi) * (lg * j0 - 2.0 * m.su);
  const double y1 = (2.0 / kPi) * ((lg - 1.0) * j1 - j0 / x - m.sv);
  return {j0, j1, y0, y1};
}

/// J_0(t) .. J_nmax(t).
inline std::vector<double> bessel_j_sequence(int nmax, double t) {
  detail::check_order(nmax);
  detail::check_argument(t, true);
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1, 0.0);
  if (t == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (t < kAsymptoticCrossover) return detail::miller(nmax, t, true).j;
  const BesselPair a = detail::asymptotic01(t);
  out[0] = a.j0;
  if (nmax == 0) return out;
  out[1] = a.j1;
  if (nmax == 1) return out;
  auto m = detail::miller(nmax, t, false);
  const double scale = std::abs(a.j0) >= std::abs(a.j1) ? a.j0 / m.j[0] : a.j1 / m.j[1];
  for (int n = 2; n <= nmax; ++n) out[static_cast<std::size_t>(n)] = m.j[static_cast<std::size_t>(n)] * scale;
  return out;
}

/// Y_0(t) .. Y_nmax(t), t > 0. Large orders at small t overflow to -inf.
inline std::vector<double> bessel_y_sequence(int nmax, double t) {
  detail::check_order(nmax);
  detail::check_argument(t, false);
  const BesselPair b = bessel01(t);
  std::vector<double> out(static_cast<std::size_t>(nmax) + 1);
  out[0] = b.y0;
  if (nmax >= 1) out[1] = b.y1;
  for (int n = 1; n < nmax; ++n) {
    out[static_cast<std::size_t>(n) + 1] =
        2.0 * n / t * out[static_cast<std::size_t>(n)] - out[static_cast<std::size_t>(n) - 1];
  }
  return out;
}

inline double bessel_j(int order, double t) {
  detail::check_order(order);
  detail::check_argument(t, true);
  if (t >= kAsymptoticCrossover && order <= 1) {
    const BesselPair a = detail::asymptotic01(t);
    return order == 0 ? a.j0 : a.j1;
  }
  return bessel_j_sequence(order, t)[static_cast<std::size_t>(order)];
}

inline double bessel_y(int order, double t) {
  detail::check_order(order);
  detail::check_argument(t, false);
  if (order == 0) return bessel01(t).y0;
  if (order == 1) return bessel01(t).y1;
  return bessel_y_sequence(order, t)[static_cast<std::size_t>(order)];
}

inline Complex hankel1(int order, double t) {
  detail::check_order(order);
  detail::check_argument(t, false);
  if (order <= 1) {
    const BesselPair b = bessel01(t);
    return order == 0 ? Complex{b.j0, b.y0} : Complex{b.j1, b.y1};
  }
  return {bessel_j(order, t), bessel_y(order, t)};
}

/// Spherical Bessel j0, j1 with the removable singularity at 0 handled.
inline double spherical_j(int order, double t) {
  if (order != 0 && order != 1) throw std::domain_error("spherical_j: order must be 0 or 1");
  if (!std::isfinite(t)) throw std::domain_error("spherical_j: argument must be finite");
  const double a = std::abs(t);
  if (order == 0) {
    if (a < 1e-4) return 1.0 - t * t / 6.0 + t * t * t * t / 120.0;
    return std::sin(t) / t;
  }
  if (a < 1e-2) {
    const double t2 = t * t;
    return t / 3.0 * (1.0 - t2 / 10.0 * (1.0 - t2 / 28.0 * (1.0 - t2 / 54.0)));
  }
  return std::sin(t) / (t * t) - std::cos(t) / t;
}

}  // namespace dsm::specfun

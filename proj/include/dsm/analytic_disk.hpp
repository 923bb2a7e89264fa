#pragma once

// Separation-of-variables far fields for a single disk.
//
// With u^i = exp(i k x.theta) = sum_n i^n J_n(k|x|) e^{in(phi - theta)} and
// u^s = sum_n i^n c_n H_n(k|x|) e^{in(phi - theta)}, the far-field map
// u_inf = sqrt(8 k pi) e^{-i pi/4} lim sqrt(r) e^{-ikr} u^s gives
//
//   u_inf(obs, inc) = -4i sum_n c_n e^{in(phi_obs - phi_inc)}
//                   = -4i [c_0 + 2 sum_{n>=1} c_n cos(n (phi_obs - phi_inc))],
//
// since c_{-n} = c_n for every condition below.

#include <cmath>
#include <array>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dsm/common.hpp"
#include "dsm/conditions.hpp"
#include "dsm/farfield.hpp"
#include "dsm/specfun.hpp"

namespace dsm {

using DiskCondition = std::variant<Dirichlet, Neumann, Impedance, Penetrable>;

struct DiskScatterer {
  Vec2 center{};
  double radius = 1.0;
  DiskCondition condition = Dirichlet{};
};

inline void validate(const DiskScatterer& d) {
  if (!(d.radius > 0.0) || !std::isfinite(d.radius)) throw ValidationError("disk radius must be > 0");
  if (const auto* imp = std::get_if<Impedance>(&d.condition)) {
    if (imp->lambda.imag() < 0.0) throw ValidationError("impedance requires Im(lambda) >= 0");
  }
  if (const auto* pen = std::get_if<Penetrable>(&d.condition)) {
    if (pen->q.imag() < 0.0) throw ValidationError("penetrable contrast requires Im(q) >= 0");
    const Complex n2 = 1.0 + pen->q;
    if (n2.imag() == 0.0 && n2.real() <= 0.0) {
      throw ValidationError("penetrable contrast requires 1+q outside the nonpositive reals");
    }
  }
}

namespace detail {

inline constexpr double kMaxKr = 100.0;

// Pairs (J_n(z), J_n'(z)) for complex z, each known only up to a per-order
// complex scale. The scale cancels in the transmission coefficient, so the
// backward recurrence needs no normalization sum.
inline std::vector<std::array<Complex, 2>> scaled_bessel_pairs(int nmax, Complex z) {
  const int start = nmax + static_cast<int>(std::ceil(std::abs(z))) + 60;
  std::vector<Complex> f(static_cast<std::size_t>(nmax) + 2, Complex{});
  Complex f2 = 0.0;
  Complex f1 = 1e-300;
  for (int k = start; k >= 0; --k) {
    const Complex fk = 2.0 * (k + 1) / z * f1 - f2;
    f2 = f1;
    f1 = fk;
    if (k <= nmax + 1) f[static_cast<std::size_t>(k)] = fk;
    const double mag = std::abs(fk);
    if (mag > 1e200) {
      f1 /= mag;
      f2 /= mag;
      for (int i = k; i <= nmax + 1; ++i) f[static_cast<std::size_t>(i)] /= mag;
    }
  }
  std::vector<std::array<Complex, 2>> out(static_cast<std::size_t>(nmax) + 1);
  for (int n = 0; n <= nmax; ++n) {
    const Complex jn = f[static_cast<std::size_t>(n)];
    // J_n' = J_{n-1} - (n/z) J_n, and J_0' = -J_1.
    const Complex djn = (n == 0) ? -f[1] : f[static_cast<std::size_t>(n) - 1] - Complex(n) / z * jn;
    const double s = std::abs(jn) + std::abs(djn);
    out[static_cast<std::size_t>(n)] = {jn / s, djn / s};
  }
  return out;
}

inline Complex checked_ratio(Complex num, Complex den) {
  if (std::abs(den) < 1e-300) throw NumericalError("disk series: degenerate mode denominator");
  return num / den;
}

}  // namespace detail

inline int disk_series_order(double k, double radius) {
  return static_cast<int>(std::ceil(k * radius)) + 20;
}

/// Mode coefficients c_0..c_nmax of the centered disk.
inline std::vector<Complex> disk_mode_coefficients(const DiskScatterer& disk, double k,
                                                   std::optional<int> nmax_override = std::nullopt) {
  validate(disk);
  if (!(k > 0.0)) throw ValidationError("wavenumber must be > 0");
  const double ka = k * disk.radius;
  if (ka > detail::kMaxKr) {
    throw NumericalError("disk series: k*radius = " + std::to_string(ka) + " exceeds truncation budget " +
                         std::to_string(detail::kMaxKr));
  }
  const int nmax = nmax_override.value_or(disk_series_order(k, disk.radius));
  const auto jv = specfun::bessel_j_sequence(nmax + 1, ka);
  const auto yv = specfun::bessel_y_sequence(nmax + 1, ka);
  auto at = [](const std::vector<double>& v, int n) { return v[static_cast<std::size_t>(n)]; };

  std::vector<Complex> c(static_cast<std::size_t>(nmax) + 1);
  std::vector<std::array<Complex, 2>> inner;
  Complex k1;
  if (const auto* pen = std::get_if<Penetrable>(&disk.condition)) {
    k1 = k * std::sqrt(1.0 + pen->q);  // principal branch, Im k1 >= 0
    inner = detail::scaled_bessel_pairs(nmax, k1 * disk.radius);
  }
  for (int n = 0; n <= nmax; ++n) {
    const double j = at(jv, n);
    const double dj = (n == 0) ? -at(jv, 1) : at(jv, n - 1) - n / ka * j;
    const Complex h{j, at(yv, n)};
    const Complex dh = (n == 0) ? -Complex{at(jv, 1), at(yv, 1)}
                                : Complex{at(jv, n - 1), at(yv, n - 1)} - (n / ka) * h;
    Complex cn;
    std::visit(
        [&](const auto& cond) {
          using T = std::decay_t<decltype(cond)>;
          if constexpr (std::is_same_v<T, Dirichlet>) {
            cn = -detail::checked_ratio(Complex{j}, h);
          } else if constexpr (std::is_same_v<T, Penetrable>) {
            if (std::abs(std::get<Penetrable>(disk.condition).q) == 0.0) {
              cn = 0.0;
            } else {
              const auto [ji, dji] = inner[static_cast<std::size_t>(n)];
              cn = -detail::checked_ratio(k * dj * ji - k1 * j * dji, k * dh * ji - k1 * h * dji);
            }
          } else {
            // Neumann is the impedance path with lambda = 0.
            Complex lambda = 0.0;
            if constexpr (std::is_same_v<T, Impedance>) lambda = cond.lambda;
            cn = -detail::checked_ratio(k * dj + lambda * j, k * dh + lambda * h);
          }
        },
        disk.condition);
    c[static_cast<std::size_t>(n)] = cn;
  }
  return c;
}

namespace detail {

inline Complex series_far_field(const std::vector<Complex>& c, double angle_diff) {
  Complex sum = c[0];
  for (std::size_t n = 1; n < c.size(); ++n) sum += 2.0 * c[n] * std::cos(static_cast<double>(n) * angle_diff);
  return -4.0 * kI * sum;
}

inline Complex translation_phase(double k, const Vec2& obs, const Vec2& inc, const Vec2& c) {
  const double ph = k * dot(inc - obs, c);
  return {std::cos(ph), std::sin(ph)};
}

}  // namespace detail

/// u_inf(obs, inc) for unit vectors obs, inc.
inline Complex disk_far_field(const DiskScatterer& disk, double k, const Vec2& obs, const Vec2& inc) {
  const auto c = disk_mode_coefficients(disk, k);
  const double diff = std::atan2(obs.y, obs.x) - std::atan2(inc.y, inc.x);
  Complex u = detail::series_far_field(c, diff);
  if (disk.center.x != 0.0 || disk.center.y != 0.0) u *= detail::translation_phase(k, obs, inc, disk.center);
  return u;
}

/// Matrix of u_inf(x_m, theta_l) on the equispaced N-direction grid.
inline FarFieldMatrix disk_far_field_matrix(const DiskScatterer& disk, double k, int n_dirs) {
  if (n_dirs < 4 || n_dirs % 2 != 0) throw ValidationError("disk far-field matrix: n_dirs must be even and >= 4");
  const auto c = disk_mode_coefficients(disk, k);
  // Centered values depend only on (m - l) mod N.
  std::vector<Complex> circulant(static_cast<std::size_t>(n_dirs));
  for (int d = 0; d < n_dirs; ++d) {
    circulant[static_cast<std::size_t>(d)] = detail::series_far_field(c, kTwoPi * d / n_dirs);
  }
  const bool shifted = disk.center.x != 0.0 || disk.center.y != 0.0;
  Eigen::MatrixXcd a(n_dirs, n_dirs);
  for (int m = 0; m < n_dirs; ++m) {
    for (int l = 0; l < n_dirs; ++l) {
      Complex u = circulant[static_cast<std::size_t>(((m - l) % n_dirs + n_dirs) % n_dirs)];
      if (shifted) {
        u *= detail::translation_phase(k, grid_direction(m, n_dirs), grid_direction(l, n_dirs), disk.center);
      }
      a(m, l) = u;
    }
  }
  return {k, std::move(a)};
}

}  // namespace dsm

#pragma once

// Sampling indicators on a far-field matrix F (entries A, weight w = 2 pi / N)
// with test vector phi_z(theta_j) = exp(-i k theta_j . z):
//
//   new  |<F phi_z, phi_z>_w|        = w^2 |phi^H A phi|
//   rtm  Im <F phi_z, phi_z>_w       (signed)
//   osm  w sum_l |w sum_m A(m,l) conj(phi_m)|^rho
//   fm   [sum_{sigma_j > eps sigma_1} |<phi_z, u_j>_w|^2 / sigma_j]^{-1},  wA = U S V^H
//
// Grid sweeps evaluate blocks of sampling points with dense matrix products.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "dsm/common.hpp"
#include "dsm/farfield.hpp"

namespace dsm {

enum class Method { New, OSM, RTM, FM };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::New: return "new";
    case Method::OSM: return "osm";
    case Method::RTM: return "rtm";
    case Method::FM: return "fm";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "new") return Method::New;
  if (s == "osm") return Method::OSM;
  if (s == "rtm") return Method::RTM;
  if (s == "fm") return Method::FM;
  throw ValidationError("unknown indicator method '" + std::string(s) + "'");
}

inline constexpr double kDefaultFmCutoff = 1e-4;

/// z_pq = center + (-c + 2cp/(m-1), -c + 2cq/(m-1)); index p*m + q.
struct SamplingGrid {
  double extent = 4.0;
  int m = 151;
  Vec2 center{};

  void validate() const {
    if (!(extent > 0.0) || !std::isfinite(extent)) throw ValidationError("grid extent must be > 0");
    if (m < 2) throw ValidationError("grid needs at least 2 points per side");
  }
  std::size_t size() const { return static_cast<std::size_t>(m) * static_cast<std::size_t>(m); }
  double coord(int i) const { return -extent + 2.0 * extent * i / (m - 1); }
  Vec2 point(int p, int q) const { return center + Vec2{coord(p), coord(q)}; }
  Vec2 point(std::size_t index) const {
    return point(static_cast<int>(index / static_cast<std::size_t>(m)), static_cast<int>(index % static_cast<std::size_t>(m)));
  }
};

struct IndicatorMap {
  SamplingGrid grid;
  Method method = Method::New;
  double rho = 1.0;
  double k = 0.0;
  int n = 0;
  double delta = 0.0;
  std::vector<double> values;  // index p*m + q

  double at(int p, int q) const { return values[static_cast<std::size_t>(p) * grid.m + q]; }
};

namespace detail {

inline void check_rho(double rho) {
  if (!(rho >= 1.0) || !std::isfinite(rho)) throw ValidationError("indicator power rho must be >= 1");
}

inline void check_cutoff(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("factorization cutoff must lie in (0, 1)");
}

// Columns phi_z for a batch of sampling points.
inline Eigen::MatrixXcd test_block(const FarFieldMatrix& F, const std::vector<Vec2>& pts) {
  const int n = F.n();
  Eigen::MatrixXcd phi(n, static_cast<Eigen::Index>(pts.size()));
  for (int j = 0; j < n; ++j) {
    const Vec2 th = F.direction(j);
    for (std::size_t b = 0; b < pts.size(); ++b) {
      const double ph = -F.k() * dot(th, pts[b]);
      phi(j, static_cast<Eigen::Index>(b)) = {std::cos(ph), std::sin(ph)};
    }
  }
  return phi;
}

// w^2 phi^H A phi per column.
inline Eigen::VectorXcd quadratic_forms(const FarFieldMatrix& F, const Eigen::MatrixXcd& phi) {
  const double w = F.weight();
  const Eigen::MatrixXcd y = F.entries() * phi;
  return (w * w) * phi.cwiseProduct(y.conjugate()).colwise().sum().conjugate().transpose();
}

inline Eigen::VectorXd osm_values(const FarFieldMatrix& F, const Eigen::MatrixXcd& phi, double rho) {
  const double w = F.weight();
  const Eigen::MatrixXd mag = (w * (F.entries().transpose() * phi.conjugate())).cwiseAbs();
  Eigen::VectorXd out(phi.cols());
  for (Eigen::Index b = 0; b < phi.cols(); ++b) {
    out(b) = rho == 2.0 ? w * mag.col(b).squaredNorm() : w * mag.col(b).array().pow(rho).sum();
  }
  return out;
}

}  // namespace detail

/// Singular system of wA truncated at eps * sigma_1, computed once and shared.
class FactorizationBasis {
 public:
  FactorizationBasis(const FarFieldMatrix& F, double eps = kDefaultFmCutoff) : w_(F.weight()) {
    detail::check_cutoff(eps);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(F.weight() * F.entries(), Eigen::ComputeThinU);
    const Eigen::VectorXd s = svd.singularValues();
    if (s.size() == 0 || !(s(0) > 0.0)) throw NumericalError("factorization indicator: far-field matrix has rank 0");
    Eigen::Index keep = 0;
    while (keep < s.size() && s(keep) > eps * s(0)) ++keep;
    sigma_ = s.head(keep);
    u_ = svd.matrixU().leftCols(keep);
  }

  Eigen::Index rank() const { return sigma_.size(); }
  const Eigen::VectorXd& sigma() const { return sigma_; }

  Eigen::VectorXd evaluate(const Eigen::MatrixXcd& phi) const {
    const Eigen::MatrixXcd c = w_ * (u_.adjoint() * phi);  // <phi, u_j>_w
    Eigen::VectorXd out(phi.cols());
    for (Eigen::Index b = 0; b < phi.cols(); ++b) {
      const double series = (c.col(b).cwiseAbs2().array() / sigma_.array()).sum();
      if (!(series > 0.0)) throw NumericalError("factorization indicator: test vector orthogonal to range");
      out(b) = 1.0 / series;
    }
    return out;
  }

 private:
  double w_;
  Eigen::VectorXd sigma_;
  Eigen::MatrixXcd u_;
};

inline double i_new(const FarFieldMatrix& F, const Vec2& z) {
  return std::abs(detail::quadratic_forms(F, detail::test_block(F, {z}))(0));
}

inline double i_rtm(const FarFieldMatrix& F, const Vec2& z) {
  return detail::quadratic_forms(F, detail::test_block(F, {z}))(0).imag();
}

inline double i_osm(const FarFieldMatrix& F, const Vec2& z, double rho) {
  detail::check_rho(rho);
  return detail::osm_values(F, detail::test_block(F, {z}), rho)(0);
}

inline double i_fm(const FarFieldMatrix& F, const Vec2& z, double eps = kDefaultFmCutoff) {
  return FactorizationBasis(F, eps).evaluate(detail::test_block(F, {z}))(0);
}

namespace detail {

inline constexpr std::size_t kSweepBlock = 2048;

// Calls fn(first_index, phi_block) over the grid in index order.
template <typename Fn>
void for_each_block(const FarFieldMatrix& F, const SamplingGrid& grid, Fn&& fn) {
  grid.validate();
  std::vector<Vec2> pts;
  for (std::size_t first = 0; first < grid.size(); first += kSweepBlock) {
    const std::size_t last = std::min(grid.size(), first + kSweepBlock);
    pts.clear();
    for (std::size_t i = first; i < last; ++i) pts.push_back(grid.point(i));
    fn(first, test_block(F, pts));
  }
}

}  // namespace detail

/// Outer power rho for new/rtm/fm (rtm keeps its sign); osm takes rho as its
/// inner exponent.
inline IndicatorMap sweep(const FarFieldMatrix& F, const SamplingGrid& grid, Method method, double rho,
                          double fm_cutoff = kDefaultFmCutoff) {
  detail::check_rho(rho);
  IndicatorMap map{grid, method, rho, F.k(), F.n(), 0.0, std::vector<double>(grid.size())};
  std::optional<FactorizationBasis> basis;
  if (method == Method::FM) basis.emplace(F, fm_cutoff);
  auto outer = [rho](double v) { return rho == 1.0 ? v : std::pow(v, rho); };
  detail::for_each_block(F, grid, [&](std::size_t first, const Eigen::MatrixXcd& phi) {
    Eigen::VectorXd v;
    switch (method) {
      case Method::New: v = detail::quadratic_forms(F, phi).cwiseAbs(); break;
      case Method::RTM: v = detail::quadratic_forms(F, phi).imag(); break;
      case Method::OSM: v = detail::osm_values(F, phi, rho); break;
      case Method::FM: v = basis->evaluate(phi); break;
    }
    for (Eigen::Index b = 0; b < v.size(); ++b) {
      double x = v(b);
      if (method == Method::RTM) {
        x = std::copysign(outer(std::abs(x)), x);
      } else if (method != Method::OSM) {
        x = outer(x);
      }
      map.values[first + static_cast<std::size_t>(b)] = x;
    }
  });
  return map;
}

/// Index of the largest value; ties go to the lowest index.
inline std::size_t argmax(const IndicatorMap& map) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.values.size(); ++i)
    if (map.values[i] > map.values[best]) best = i;
  return best;
}

/// Worst-case margins of (1/8pi) osm2 <= rtm <= new <= sqrt(2pi) sqrt(osm2).
struct ChainReport {
  double lower = 0.0;   // min_z rtm - osm2 / (8 pi)
  double middle = 0.0;  // min_z new - rtm
  double upper = 0.0;   // min_z sqrt(2 pi osm2) - new
  double scale = 0.0;   // max_z sqrt(2 pi osm2)

  bool holds(double tol) const {
    const double floor = -tol * scale;
    return lower >= floor && middle >= floor && upper >= floor;
  }
};

inline ChainReport chain_report(const FarFieldMatrix& F, const SamplingGrid& grid) {
  ChainReport r;
  r.lower = r.middle = r.upper = std::numeric_limits<double>::infinity();
  detail::for_each_block(F, grid, [&](std::size_t, const Eigen::MatrixXcd& phi) {
    const Eigen::VectorXcd q = detail::quadratic_forms(F, phi);
    const Eigen::VectorXd osm2 = detail::osm_values(F, phi, 2.0);
    for (Eigen::Index b = 0; b < q.size(); ++b) {
      const double inew = std::abs(q(b));
      const double rtm = q(b).imag();
      const double top = std::sqrt(kTwoPi * osm2(b));
      r.lower = std::min(r.lower, rtm - osm2(b) / (8.0 * kPi));
      r.middle = std::min(r.middle, inew - rtm);
      r.upper = std::min(r.upper, top - inew);
      r.scale = std::max(r.scale, top);
    }
  });
  return r;
}

/// w^2 N ||A - A_delta||_2: bound on the pointwise change of i_new.
inline double stability_bound(const FarFieldMatrix& F, const FarFieldMatrix& Fd) {
  if (F.n() != Fd.n()) throw ValidationError("stability bound: matrix sizes differ");
  const double w = F.weight();
  return w * w * F.n() * spectral_norm(F.entries() - Fd.entries());
}

}  // namespace dsm

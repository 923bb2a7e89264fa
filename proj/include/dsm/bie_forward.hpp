#pragma once

// Nystrom boundary-integral solver for exterior Helmholtz scattering by one
// or more smooth obstacles.
//
// Each component b carries a density psi_b (per unit arc length) and radiates
//
//   Dirichlet:          u_b = D psi_b - i eta_D S psi_b            (Brakhage-Werner)
//   Neumann/impedance:  u_b = S psi_b + i eta_N D (R_b psi_b)      (regularized)
//
// where S, D are the single- and double-layer potentials and R_b is the
// positive Fourier multiplier 1/max(1,|m|) acting on |x'| psi_b in the curve
// parameter. The normal derivative of D is evaluated with Maue's formula
//   T phi = d/ds S(dphi/ds) + k^2 nu . S(nu phi)
// using trigonometric differentiation. Self interactions use the Kress
// splitting of the logarithmic singularity; cross-component blocks are smooth
// and use the plain trapezoid rule.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "dsm/common.hpp"
#include "dsm/conditions.hpp"
#include "dsm/farfield.hpp"
#include "dsm/geometry.hpp"
#include "dsm/specfun.hpp"

namespace dsm {

struct ScattererComponent {
  BoundaryCurve curve;
  ObstacleCondition condition = Dirichlet{};
};

struct ScattererConfig {
  std::vector<ScattererComponent> components;
  double k = 1.0;
};

struct SolverSettings {
  // Nodes 2m per component; 0 selects max(128, 16 ceil(k diam)).
  int nodes_per_component = 0;
  // Upper bound on the reciprocity residual of the assembled far-field
  // matrix; <= 0 disables the check.
  double target_tolerance = 1e-6;
  // Systems with an estimated reciprocal condition number below this are rejected.
  double min_rcond = 1e-13;
};

inline int default_node_count(const BoundaryCurve& curve, double k) {
  const int est = 16 * static_cast<int>(std::ceil(k * diameter(curve)));
  const int n = std::max(128, est);
  return (n + 3) / 4 * 4;
}

namespace detail {

inline Complex phi2d(double kr) {
  const auto b = specfun::bessel01(kr);
  return 0.25 * kI * Complex{b.j0, b.y0};
}

// Kress weights R_j(t_i) for the kernel ln(4 sin^2((t - tau)/2)) on 2n nodes,
// as a function of d = i - j.
inline std::vector<double> log_weights(int n) {
  std::vector<double> w(2 * static_cast<std::size_t>(n));
  for (int d = 0; d < 2 * n; ++d) {
    double s = 0.0;
    for (int m = 1; m < n; ++m) s += std::cos(m * kPi * d / n) / m;
    w[static_cast<std::size_t>(d)] = -(kTwoPi / n) * s - (kPi / (static_cast<double>(n) * n)) * ((d % 2) ? -1.0 : 1.0);
  }
  return w;
}

// Trigonometric differentiation matrix on 2n equispaced nodes.
inline Eigen::MatrixXd trig_diff_matrix(int n) {
  const int nn = 2 * n;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nn, nn);
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j < nn; ++j) {
      if (i == j) continue;
      const double h = 0.5 * kPi * (i - j) / n;
      d(i, j) = 0.5 * (((i - j) % 2 == 0) ? 1.0 : -1.0) / std::tan(h);
    }
  }
  return d;
}

// Fourier multiplier with symbol 1/max(1, |m|) (Nyquist mode 1/n) on 2n nodes.
inline Eigen::MatrixXd smoothing_multiplier(int n) {
  const auto w = log_weights(n);
  const int nn = 2 * n;
  Eigen::MatrixXd r(nn, nn);
  for (int i = 0; i < nn; ++i)
    for (int j = 0; j < nn; ++j) {
      r(i, j) = 1.0 / nn - w[static_cast<std::size_t>(((i - j) % nn + nn) % nn)] / kTwoPi;
    }
  return r;
}

struct Discretized {
  BoundaryCurve curve;
  ObstacleCondition condition;
  int n = 0;  // half the node count
  std::vector<BoundaryPoint> nodes;
  std::size_t offset = 0;
  Complex alpha{};          // coefficient of S in the representation
  Complex beta_d{};         // coefficient of D
  bool smoothed = false;    // D acts on R psi instead of psi
  Eigen::MatrixXd smoother;  // R_p diag(|x'|) when smoothed

  int size() const { return 2 * n; }
  double trap_weight() const { return kPi / n; }
  double panel_length() const {
    double m = 0.0;
    for (const auto& p : nodes) m = std::max(m, p.jacobian);
    return m * kPi / n;
  }
};

// The four boundary operators mapping source nodal densities to target nodal
// values: trace and normal derivative of S and D.
struct OperatorBlocks {
  Eigen::MatrixXcd s_trace, d_trace, s_normal, d_normal;
};

inline OperatorBlocks self_blocks(const Discretized& c, double k, bool need_normal) {
  const int nn = c.size();
  const int n = c.n;
  const auto lw = log_weights(n);
  const double h = c.trap_weight();
  const auto& x = c.nodes;

  Eigen::MatrixXcd stilde(nn, nn);  // S in the parameter, no Jacobian
  Eigen::MatrixXcd ktrace(nn, nn);  // double layer, parameter form
  Eigen::MatrixXcd kadj(nn, nn);    // adjoint double layer
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j < nn; ++j) {
      const double rw = lw[static_cast<std::size_t>(((i - j) % nn + nn) % nn)];
      if (i == j) {
        const double jac = x[i].jacobian;
        const Complex m2 = 0.25 * kI - kEulerGamma / kTwoPi - std::log(0.5 * k * jac) / kTwoPi;
        stilde(i, i) = rw * (-1.0 / (4.0 * kPi)) + h * m2;
        const Vec2 nrm{x[i].tangent.y, -x[i].tangent.x};
        const double curv = dot(nrm, x[i].second) / (4.0 * kPi * jac * jac);
        ktrace(i, i) = h * curv;
        kadj(i, i) = h * curv;
        continue;
      }
      const Vec2 d = x[i].position - x[j].position;
      const double r = norm(d);
      const auto b = specfun::bessel01(k * r);
      const Complex h0{b.j0, b.y0};
      const Complex h1{b.j1, b.y1};
      const double lg = std::log(4.0 * std::pow(std::sin(0.5 * (x[i].t - x[j].t)), 2));

      const Complex m = 0.25 * kI * h0;
      const double m1 = -b.j0 / (4.0 * kPi);
      stilde(i, j) = rw * m1 + h * (m - m1 * lg);

      const Vec2 nj{x[j].tangent.y, -x[j].tangent.x};  // nu_j |x'_j|
      const double gj = dot(nj, d) / r;
      const Complex l = 0.25 * kI * k * h1 * gj;
      const double l1 = -k / (4.0 * kPi) * b.j1 * gj;
      ktrace(i, j) = rw * l1 + h * (l - l1 * lg);

      const double gi = dot(x[i].normal, d) / r * x[j].jacobian;
      const Complex kp = -0.25 * kI * k * h1 * gi;
      const double kp1 = k / (4.0 * kPi) * b.j1 * gi;
      kadj(i, j) = rw * kp1 + h * (kp - kp1 * lg);
    }
  }

  OperatorBlocks out;
  Eigen::VectorXd jac(nn);
  for (int j = 0; j < nn; ++j) jac(j) = x[j].jacobian;
  out.s_trace = stilde * jac.asDiagonal();
  out.d_trace = ktrace;
  out.d_trace.diagonal().array() += 0.5;
  if (need_normal) {
    out.s_normal = kadj;
    out.s_normal.diagonal().array() -= 0.5;
    // Maue: (1/|x'|) d/dt Stilde d/dtau + k^2 Stilde (nu_i . nu_j) |x'_j|.
    const Eigen::MatrixXd dm = trig_diff_matrix(n);
    Eigen::MatrixXcd hyper = dm.cast<Complex>() * (stilde * dm.cast<Complex>());
    for (int i = 0; i < nn; ++i) hyper.row(i) /= x[i].jacobian;
    for (int i = 0; i < nn; ++i)
      for (int j = 0; j < nn; ++j) {
        hyper(i, j) += k * k * stilde(i, j) * dot(x[i].normal, x[j].normal) * x[j].jacobian;
      }
    out.d_normal = std::move(hyper);
  }
  return out;
}

inline OperatorBlocks cross_blocks(const Discretized& tgt, const Discretized& src, double k, bool need_normal) {
  const int ni = tgt.size();
  const int nj = src.size();
  OperatorBlocks out;
  out.s_trace.resize(ni, nj);
  out.d_trace.resize(ni, nj);
  if (need_normal) {
    out.s_normal.resize(ni, nj);
    out.d_normal.resize(ni, nj);
  }
  const double h = src.trap_weight();
  for (int i = 0; i < ni; ++i) {
    const auto& xi = tgt.nodes[i];
    for (int j = 0; j < nj; ++j) {
      const auto& yj = src.nodes[j];
      const Vec2 d = xi.position - yj.position;
      const double r = norm(d);
      const double kr = k * r;
      const auto b = specfun::bessel01(kr);
      const Complex h0{b.j0, b.y0};
      const Complex h1{b.j1, b.y1};
      const double w = h * yj.jacobian;
      const double ny_d = dot(yj.normal, d);
      out.s_trace(i, j) = 0.25 * kI * h0 * w;
      out.d_trace(i, j) = 0.25 * kI * k * h1 * (ny_d / r) * w;
      if (need_normal) {
        const double nx_d = dot(xi.normal, d);
        out.s_normal(i, j) = -0.25 * kI * k * h1 * (nx_d / r) * w;
        const Complex dh1 = h0 - h1 / kr;
        out.d_normal(i, j) = 0.25 * kI * k *
                             (k * dh1 * nx_d * ny_d / (r * r) +
                              h1 * (dot(xi.normal, yj.normal) / r - ny_d * nx_d / (r * r * r))) *
                             w;
      }
    }
  }
  return out;
}

inline bool is_dirichlet(const ObstacleCondition& c) { return std::holds_alternative<Dirichlet>(c); }

inline Complex impedance_of(const ObstacleCondition& c) {
  if (const auto* imp = std::get_if<Impedance>(&c)) return imp->lambda;
  return 0.0;
}

// Trigonometric interpolation of nodal values onto a grid refined by `factor`.
inline Eigen::VectorXcd trig_upsample(const Eigen::VectorXcd& v, int factor) {
  const int nn = static_cast<int>(v.size());
  const int n = nn / 2;
  if (factor == 1) return v;
  std::vector<Complex> coef(static_cast<std::size_t>(nn));
  for (int m = -n; m < n; ++m) {
    Complex s = 0.0;
    for (int j = 0; j < nn; ++j) {
      const double a = -kPi * m * j / n;
      s += v(j) * Complex{std::cos(a), std::sin(a)};
    }
    coef[static_cast<std::size_t>(m + n)] = s / static_cast<double>(nn);
  }
  const int nf = nn * factor;
  Eigen::VectorXcd out(nf);
  for (int p = 0; p < nf; ++p) {
    const double t = kTwoPi * p / nf;
    const Complex e{std::cos(t), std::sin(t)};
    // Horner in e^{it} over modes -n+1..n-1, then the Nyquist mode split symmetrically.
    Complex s = 0.0;
    for (int m = n - 1; m >= -n + 1; --m) s = s * e + coef[static_cast<std::size_t>(m + n)];
    s *= Complex{std::cos((n - 1) * t), -std::sin((n - 1) * t)};
    s += coef[0] * std::cos(n * t);
    out(p) = s;
  }
  return out;
}

}  // namespace detail

class ForwardSolver {
 public:
  ForwardSolver(ScattererConfig cfg, SolverSettings settings) : cfg_(std::move(cfg)), settings_(settings) {
    validate();
    discretize_components();
    assemble_and_factor();
  }

  const ScattererConfig& config() const { return cfg_; }
  double rcond() const { return rcond_; }
  int total_nodes() const { return static_cast<int>(total_); }
  int nodes_of(std::size_t component) const { return comps_.at(component).size(); }

  /// Densities for the given incident directions, one column per direction.
  Eigen::MatrixXcd densities(const std::vector<Vec2>& incident) const {
    return lu_.solve(rhs(incident));
  }

  FarFieldMatrix far_field_matrix(int n_dirs) const {
    if (n_dirs < 4 || n_dirs % 2 != 0) throw ValidationError("n_dirs must be even and >= 4");
    std::vector<Vec2> dirs;
    for (int j = 0; j < n_dirs; ++j) dirs.push_back(grid_direction(j, n_dirs));
    const Eigen::MatrixXcd psi = densities(dirs);
    FarFieldMatrix F{cfg_.k, far_field_operator(dirs) * psi};
    if (settings_.target_tolerance > 0.0) {
      const double rec = reciprocity_residual(F);
      if (!(rec <= settings_.target_tolerance)) {
        throw NumericalError("forward solve (" + context() + "): reciprocity residual " + std::to_string(rec) +
                             " exceeds target tolerance; increase nodes_per_component");
      }
    }
    return F;
  }

  /// Scattered field at exterior points for one incident direction. Points
  /// close to a boundary are handled by trigonometric upsampling of the density.
  std::vector<Complex> scattered_field(const Vec2& inc, const std::vector<Vec2>& points) const {
    for (const auto& z : points) check_exterior(z);
    const Eigen::VectorXcd psi = densities({inc}).col(0);
    std::vector<Complex> out;
    out.reserve(points.size());
    for (const auto& z : points) {
      Complex u = 0.0;
      for (const auto& c : comps_) u += component_field(c, psi.segment(static_cast<Eigen::Index>(c.offset), c.size()), z);
      out.push_back(u);
    }
    return out;
  }

 private:
  static constexpr double kEtaNeumann = 1.0;

  std::string context() const {
    std::ostringstream os;
    os << "k=" << cfg_.k << ", components=[";
    for (std::size_t i = 0; i < cfg_.components.size(); ++i) {
      const auto& c = cfg_.components[i];
      os << (i ? "; " : "") << to_string(c.curve.kind) << "@(" << c.curve.center.x << "," << c.curve.center.y
         << ") " << describe(c.condition);
    }
    os << "]";
    return os.str();
  }

  void validate() const {
    if (!(cfg_.k > 0.0) || !std::isfinite(cfg_.k)) throw ValidationError("wavenumber k must be > 0");
    if (cfg_.components.empty()) throw ValidationError("scatterer needs at least one component");
    const int nodes = settings_.nodes_per_component;
    if (nodes != 0 && (nodes < 32 || nodes % 4 != 0)) {
      throw ValidationError("nodes_per_component must be a multiple of 4 and >= 32");
    }
    for (const auto& c : cfg_.components) {
      if (const auto* imp = std::get_if<Impedance>(&c.condition)) {
        if (imp->lambda.imag() < 0.0) throw ValidationError("impedance requires Im(lambda) >= 0");
      }
    }
  }

  void discretize_components() {
    std::size_t offset = 0;
    for (const auto& c : cfg_.components) {
      detail::Discretized d;
      d.curve = c.curve;
      d.condition = c.condition;
      const int nodes =
          settings_.nodes_per_component ? settings_.nodes_per_component : default_node_count(c.curve, cfg_.k);
      d.n = nodes / 2;
      d.nodes = discretize(c.curve, d.n);
      d.offset = offset;
      offset += static_cast<std::size_t>(nodes);
      if (detail::is_dirichlet(c.condition)) {
        d.alpha = -kI * cfg_.k;
        d.beta_d = 1.0;
      } else {
        d.alpha = 1.0;
        d.beta_d = kI * kEtaNeumann;
        d.smoothed = true;
        d.smoother = detail::smoothing_multiplier(d.n);
        for (int j = 0; j < d.size(); ++j) d.smoother.col(j) *= d.nodes[j].jacobian;
      }
      comps_.push_back(std::move(d));
    }
    total_ = offset;
    // Disjointness: no node of one component inside or on another.
    for (std::size_t a = 0; a < comps_.size(); ++a) {
      for (std::size_t b = 0; b < comps_.size(); ++b) {
        if (a == b) continue;
        for (const auto& p : comps_[a].nodes) {
          if (contains(comps_[b].curve, p.position)) {
            throw ValidationError("components " + std::to_string(a) + " and " + std::to_string(b) +
                                  " are not disjoint");
          }
        }
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto& p : comps_[a].nodes)
          for (const auto& q : comps_[b].nodes) dmin = std::min(dmin, norm(p.position - q.position));
        if (!(dmin > 0.0)) throw ValidationError("components share boundary nodes");
      }
    }
  }

  void assemble_and_factor() {
    const auto nt = static_cast<Eigen::Index>(total_);
    Eigen::MatrixXcd a(nt, nt);
    for (const auto& tgt : comps_) {
      const bool tgt_dir = detail::is_dirichlet(tgt.condition);
      const Complex lambda = detail::impedance_of(tgt.condition);
      for (const auto& src : comps_) {
        const bool self = &tgt == &src;
        const auto blocks = self ? detail::self_blocks(tgt, cfg_.k, !tgt_dir)
                                 : detail::cross_blocks(tgt, src, cfg_.k, !tgt_dir);
        auto with_smoother = [&](const Eigen::MatrixXcd& m) -> Eigen::MatrixXcd {
          return src.smoothed ? Eigen::MatrixXcd(m * src.smoother.cast<Complex>()) : m;
        };
        Eigen::MatrixXcd value = src.alpha * blocks.s_trace + src.beta_d * with_smoother(blocks.d_trace);
        Eigen::MatrixXcd block;
        if (tgt_dir) {
          block = std::move(value);
        } else {
          block = src.alpha * blocks.s_normal + src.beta_d * with_smoother(blocks.d_normal) + lambda * value;
        }
        a.block(static_cast<Eigen::Index>(tgt.offset), static_cast<Eigen::Index>(src.offset), tgt.size(),
                src.size()) = block;
      }
    }
    lu_.compute(a);
    rcond_ = lu_.rcond();
    if (!(rcond_ >= settings_.min_rcond)) {
      throw NumericalError("forward solve (" + context() + "): system is ill-conditioned, rcond estimate " +
                           std::to_string(rcond_));
    }
  }

  Eigen::MatrixXcd rhs(const std::vector<Vec2>& incident) const {
    const double k = cfg_.k;
    Eigen::MatrixXcd b(static_cast<Eigen::Index>(total_), static_cast<Eigen::Index>(incident.size()));
    for (std::size_t l = 0; l < incident.size(); ++l) {
      const Vec2& th = incident[l];
      for (const auto& c : comps_) {
        const bool dir = detail::is_dirichlet(c.condition);
        const Complex lambda = detail::impedance_of(c.condition);
        for (int i = 0; i < c.size(); ++i) {
          const auto& p = c.nodes[i];
          const double ph = k * dot(p.position, th);
          const Complex ui{std::cos(ph), std::sin(ph)};
          const Complex val = dir ? ui : kI * k * dot(p.normal, th) * ui + lambda * ui;
          b(static_cast<Eigen::Index>(c.offset) + i, static_cast<Eigen::Index>(l)) = -val;
        }
      }
    }
    return b;
  }

  // u_inf(x) = sum_j w_j e^{-ik x.y_j} [alpha psi_j + beta (-ik x.nu_j) (Q psi)_j]
  Eigen::MatrixXcd far_field_operator(const std::vector<Vec2>& obs) const {
    const double k = cfg_.k;
    const auto no = static_cast<Eigen::Index>(obs.size());
    Eigen::MatrixXcd e(no, static_cast<Eigen::Index>(total_));
    for (const auto& c : comps_) {
      Eigen::MatrixXcd es(no, c.size());
      Eigen::MatrixXcd ed(no, c.size());
      for (Eigen::Index m = 0; m < no; ++m) {
        const Vec2& x = obs[static_cast<std::size_t>(m)];
        for (int j = 0; j < c.size(); ++j) {
          const auto& y = c.nodes[j];
          const double ph = -k * dot(x, y.position);
          const Complex ex = Complex{std::cos(ph), std::sin(ph)} * (c.trap_weight() * y.jacobian);
          es(m, j) = ex;
          ed(m, j) = -kI * k * dot(x, y.normal) * ex;
        }
      }
      if (c.smoothed) ed = ed * c.smoother.cast<Complex>();
      e.middleCols(static_cast<Eigen::Index>(c.offset), c.size()) = c.alpha * es + c.beta_d * ed;
    }
    return e;
  }

  void check_exterior(const Vec2& z) const {
    for (std::size_t i = 0; i < comps_.size(); ++i) {
      const auto& c = comps_[i];
      if (contains(c.curve, z)) {
        throw ValidationError("point (" + std::to_string(z.x) + ", " + std::to_string(z.y) +
                              ") lies inside component " + std::to_string(i));
      }
      if (distance_to(c.curve, z) < 1e-3 * c.panel_length()) {
        throw ValidationError("point (" + std::to_string(z.x) + ", " + std::to_string(z.y) +
                              ") is too close to the boundary of component " + std::to_string(i));
      }
    }
  }

  Complex component_field(const detail::Discretized& c, const Eigen::VectorXcd& psi, const Vec2& z) const {
    const double k = cfg_.k;
    const double dist = distance_to(c.curve, z);
    const double panel = c.panel_length();
    const int factor = std::clamp(static_cast<int>(std::ceil(4.0 * panel / dist)), 1, 4096);
    const Eigen::VectorXcd dl_density = c.smoothed ? Eigen::VectorXcd(c.smoother.cast<Complex>() * psi) : psi;
    const Eigen::VectorXcd sl = detail::trig_upsample(psi, factor);
    const Eigen::VectorXcd dl = detail::trig_upsample(dl_density, factor);
    const int nf = c.size() * factor;
    const double h = kTwoPi / nf;
    Complex u = 0.0;
    for (int p = 0; p < nf; ++p) {
      const auto y = eval(c.curve, h * p);
      const Vec2 d = z - y.position;
      const double r = norm(d);
      const auto b = specfun::bessel01(k * r);
      const Complex h0{b.j0, b.y0};
      const Complex h1{b.j1, b.y1};
      const Complex phi = 0.25 * kI * h0;
      const Complex dphi = 0.25 * kI * k * h1 * dot(y.normal, d) / r;
      u += h * y.jacobian * (c.alpha * phi * sl(p) + c.beta_d * dphi * dl(p));
    }
    return u;
  }

  ScattererConfig cfg_;
  SolverSettings settings_;
  std::vector<detail::Discretized> comps_;
  std::size_t total_ = 0;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double rcond_ = 0.0;
};

inline FarFieldMatrix assemble_far_field_matrix(const ScattererConfig& cfg, const SolverSettings& settings,
                                                int n_dirs) {
  return ForwardSolver(cfg, settings).far_field_matrix(n_dirs);
}

inline std::vector<Complex> scattered_field_at(const ScattererConfig& cfg, const SolverSettings& settings,
                                               const Vec2& inc, const std::vector<Vec2>& points) {
  return ForwardSolver(cfg, settings).scattered_field(inc, points);
}

}  // namespace dsm

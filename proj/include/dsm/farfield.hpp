#pragma once

// Discrete far-field operator.
//
// entries(m, l) = u_inf(x_m, theta_l) with x_j = theta_j = (cos 2 pi j/N, sin 2 pi j/N).
// The operator acts as (F g)_m = w sum_l entries(m, l) g_l with w = 2 pi / N,
// and <u, v>_w = w sum_j u_j conj(v_j).

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "dsm/common.hpp"

namespace dsm {

class FarFieldMatrix {
 public:
  FarFieldMatrix(double k, Eigen::MatrixXcd entries) : k_(k), entries_(std::move(entries)) {
    if (!(k_ > 0.0) || !std::isfinite(k_)) throw ValidationError("far-field matrix: k must be > 0");
    if (entries_.rows() != entries_.cols()) throw ValidationError("far-field matrix must be square");
    const auto n = entries_.rows();
    if (n < 4) throw ValidationError("far-field matrix: need at least 4 directions");
    if (n % 2 != 0) throw ValidationError("far-field matrix: direction count must be even (parity)");
    if (!entries_.allFinite()) throw ValidationError("far-field matrix: non-finite entry");
  }

  static FarFieldMatrix zeros(double k, int n) { return {k, Eigen::MatrixXcd::Zero(n, n)}; }

  double k() const { return k_; }
  int n() const { return static_cast<int>(entries_.rows()); }
  double weight() const { return kTwoPi / n(); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Complex operator()(int m, int l) const { return entries_(m, l); }
  Vec2 direction(int j) const { return grid_direction(j, n()); }

 private:
  double k_;
  Eigen::MatrixXcd entries_;
};

struct NoiseSpec {
  double delta = 0.0;
  std::uint64_t seed = 0;
};

struct TestVector {
  Vec2 z;
  double k = 0.0;
  Eigen::VectorXcd values;

  int n() const { return static_cast<int>(values.size()); }
  double weight() const { return kTwoPi / n(); }
  double weighted_norm2() const { return weight() * values.squaredNorm(); }
};

/// phi_z(theta_j) = exp(-i k theta_j . z).
inline TestVector make_test_vector(const Vec2& z, double k, int n) {
  if (n < 4 || n % 2 != 0) throw ValidationError("test vector: n must be even and >= 4");
  TestVector tv{z, k, Eigen::VectorXcd(n)};
  for (int j = 0; j < n; ++j) {
    const double ph = -k * dot(grid_direction(j, n), z);
    tv.values(j) = {std::cos(ph), std::sin(ph)};
  }
  return tv;
}

inline Complex inner_w(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
  // Eigen's dot conjugates its left argument.
  return (kTwoPi / static_cast<double>(u.size())) * v.dot(u);
}

inline Eigen::VectorXcd apply(const FarFieldMatrix& F, const Eigen::VectorXcd& g) {
  if (g.size() != F.n()) {
    throw ValidationError("apply: vector length " + std::to_string(g.size()) + " does not match N = " +
                          std::to_string(F.n()));
  }
  return F.weight() * (F.entries() * g);
}

inline Eigen::VectorXcd apply(const FarFieldMatrix& F, const TestVector& g) { return apply(F, g.values); }

inline double spectral_norm(const Eigen::MatrixXcd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(a);
  return svd.singularValues()(0);
}

namespace detail {

// Marsaglia polar method over mt19937_64; both variates of each accepted pair
// are used, in order.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  // 53 random bits mapped to [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail

/// Standard normal matrix R1 + i R2; R1 is drawn row-major first, then R2.
inline Eigen::MatrixXcd gaussian_noise_matrix(int n, std::uint64_t seed) {
  detail::NormalStream rng(seed);
  Eigen::MatrixXd r1(n, n), r2(n, n);
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) r1(m, l) = rng.next();
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) r2(m, l) = rng.next();
  Eigen::MatrixXcd e(n, n);
  e.real() = r1;
  e.imag() = r2;
  return e;
}

/// F^delta = F + delta ||F||_2 (R1 + i R2) / ||R1 + i R2||_2.
inline FarFieldMatrix perturb(const FarFieldMatrix& F, const NoiseSpec& noise) {
  if (!(noise.delta >= 0.0) || !std::isfinite(noise.delta)) throw ValidationError("noise level delta must be >= 0");
  if (noise.delta == 0.0) return F;
  const double fnorm = spectral_norm(F.entries());
  if (fnorm == 0.0) return F;
  const Eigen::MatrixXcd e = gaussian_noise_matrix(F.n(), noise.seed);
  const double enorm = spectral_norm(e);
  return {F.k(), F.entries() + (noise.delta * fnorm / enorm) * e};
}

/// ||A - P(A)||_F / ||A||_F with P(A)(m, l) = A((l + N/2) mod N, (m + N/2) mod N).
inline double reciprocity_residual(const FarFieldMatrix& F) {
  const int n = F.n();
  const int h = n / 2;
  const auto& a = F.entries();
  const double scale = a.norm();
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (int m = 0; m < n; ++m)
    for (int l = 0; l < n; ++l) acc += std::norm(a(m, l) - a((l + h) % n, (m + h) % n));
  return std::sqrt(acc) / scale;
}

/// (A - A^*) - (i / 2N) A^* A, the discrete lossless-scattering defect.
inline Eigen::MatrixXcd unitarity_defect(const FarFieldMatrix& F) {
  const auto& a = F.entries();
  const Eigen::MatrixXcd ah = a.adjoint();
  return (a - ah) - (kI / (2.0 * F.n())) * (ah * a);
}

inline double unitarity_residual(const FarFieldMatrix& F) {
  const double scale = F.entries().norm();
  if (scale == 0.0) return 0.0;
  return unitarity_defect(F).norm() / scale;
}

/// Smallest eigenvalue of the Hermitian R-form (1/2i) [(A - A^*) - (i/2N) A^* A].
inline double r_form_min_eigenvalue(const FarFieldMatrix& F) {
  Eigen::MatrixXcd r = unitarity_defect(F) / (2.0 * kI);
  r = 0.5 * (r + r.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------
// File format (line oriented, UTF-8):
//   FARFIELD 1
//   k <decimal>
//   n <integer>
//   norm spectral
//   N*N lines "<re> <im>", row-major (observation outer, incidence inner)
// ---------------------------------------------------------------------------

inline std::string format_far_field(const FarFieldMatrix& F) {
  std::string out;
  out.reserve(static_cast<std::size_t>(F.n()) * F.n() * 50 + 64);
  char buf[128];
  out += "FARFIELD 1\n";
  std::snprintf(buf, sizeof buf, "k %.17g\n", F.k());
  out += buf;
  out += "n " + std::to_string(F.n()) + "\n";
  out += "norm spectral\n";
  for (int m = 0; m < F.n(); ++m) {
    for (int l = 0; l < F.n(); ++l) {
      std::snprintf(buf, sizeof buf, "%.16e %.16e\n", F(m, l).real(), F(m, l).imag());
      out += buf;
    }
  }
  return out;
}

namespace detail {

inline double parse_double(std::string_view s, std::string_view what, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc{} || ptr != end) {
    throw ValidationError("far-field file line " + std::to_string(line) + ": malformed " + std::string(what));
  }
  if (!std::isfinite(v)) {
    throw ValidationError("far-field file line " + std::to_string(line) + ": non-finite " + std::string(what));
  }
  return v;
}

inline std::string_view expect_prefix(std::string_view line, std::string_view prefix, std::size_t lineno) {
  if (line.substr(0, prefix.size()) != prefix) {
    throw ValidationError("far-field file line " + std::to_string(lineno) + ": expected '" + std::string(prefix) +
                          "'");
  }
  return line.substr(prefix.size());
}

}  // namespace detail

inline FarFieldMatrix parse_far_field(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  if (lines.size() < 4) throw ValidationError("far-field file: truncated header");
  if (lines[0] != "FARFIELD 1") throw ValidationError("far-field file line 1: expected 'FARFIELD 1'");
  const double k = detail::parse_double(detail::expect_prefix(lines[1], "k ", 2), "wavenumber", 2);
  if (!(k > 0.0)) throw ValidationError("far-field file line 2: k must be > 0");

  const auto ntext = detail::expect_prefix(lines[2], "n ", 3);
  int n = 0;
  {
    auto [ptr, ec] = std::from_chars(ntext.data(), ntext.data() + ntext.size(), n);
    if (ntext.empty() || ec != std::errc{} || ptr != ntext.data() + ntext.size()) {
      throw ValidationError("far-field file line 3: malformed direction count");
    }
  }
  if (n < 4) throw ValidationError("far-field file line 3: direction count must be >= 4");
  if (n % 2 != 0) throw ValidationError("far-field file line 3: direction count must be even (parity error)");
  if (lines[3] != "norm spectral") throw ValidationError("far-field file line 4: expected 'norm spectral'");

  const std::size_t expected = 4 + static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  if (lines.size() != expected) {
    throw ValidationError("far-field file: expected " + std::to_string(expected - 4) + " entry lines, found " +
                          std::to_string(lines.size() - 4) + " (dimension mismatch)");
  }
  Eigen::MatrixXcd a(n, n);
  for (int m = 0; m < n; ++m) {
    for (int l = 0; l < n; ++l) {
      const std::size_t idx = 4 + static_cast<std::size_t>(m) * n + l;
      const std::string_view line = lines[idx];
      const auto sp = line.find(' ');
      if (sp == std::string_view::npos || line.find(' ', sp + 1) != std::string_view::npos) {
        throw ValidationError("far-field file line " + std::to_string(idx + 1) + ": expected '<re> <im>'");
      }
      a(m, l) = {detail::parse_double(line.substr(0, sp), "real part", idx + 1),
                 detail::parse_double(line.substr(sp + 1), "imaginary part", idx + 1)};
    }
  }
  return {k, std::move(a)};
}

inline void write_far_field(const std::string& path, const FarFieldMatrix& F) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << format_far_field(F);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline FarFieldMatrix read_far_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_far_field(ss.str());
}

}  // namespace dsm

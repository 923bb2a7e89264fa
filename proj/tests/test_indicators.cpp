#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dsm/analytic_disk.hpp"
#include "dsm/bie_forward.hpp"
#include "dsm/indicators.hpp"

using namespace dsm;

namespace {

FarFieldMatrix disk_data(DiskCondition cond = Dirichlet{}, Vec2 center = {}) {
  return disk_far_field_matrix({center, 2.0, cond}, 5.0, 64);
}

const FarFieldMatrix& kite_data() {
  static const FarFieldMatrix F = [] {
    ScattererConfig cfg;
    cfg.k = 5.0;
    cfg.components.push_back({BoundaryCurve::kite(), Dirichlet{}});
    return assemble_far_field_matrix(cfg, {}, 64);
  }();
  return F;
}

}  // namespace

TEST(Indicators, ZeroMatrix) {
  const auto Z = FarFieldMatrix::zeros(5.0, 16);
  for (const Vec2 z : {Vec2{0.0, 0.0}, Vec2{1.0, -3.0}}) {
    EXPECT_EQ(i_new(Z, z), 0.0);
    EXPECT_EQ(i_rtm(Z, z), 0.0);
    EXPECT_EQ(i_osm(Z, z, 1.0), 0.0);
    EXPECT_EQ(i_osm(Z, z, 2.0), 0.0);
  }
  EXPECT_THROW(i_fm(Z, {0.0, 0.0}), NumericalError);
  const auto map = sweep(Z, {1.0, 2, {}}, Method::New, 1.0);
  ASSERT_EQ(map.values.size(), 4u);
  for (double v : map.values) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(argmax(map), 0u);
  const auto chain = chain_report(Z, {1.0, 5, {}});
  EXPECT_EQ(chain.lower, 0.0);
  EXPECT_EQ(chain.middle, 0.0);
  EXPECT_EQ(chain.upper, 0.0);
}

TEST(Indicators, IdentityMatrix) {
  const int n = 32;
  const FarFieldMatrix I{5.0, Eigen::MatrixXcd::Identity(n, n)};
  for (const Vec2 z : {Vec2{0.0, 0.0}, Vec2{2.0, -0.7}}) EXPECT_NEAR(i_new(I, z), 4 * kPi * kPi / n, 1e-13);
}

TEST(Indicators, DecayAwayFromDisk) {
  const auto F = disk_data();
  EXPECT_GE(i_new(F, {0.0, 0.0}), 5.0 * i_new(F, {20.0, 0.0}));
  EXPECT_GE(i_fm(F, {0.0, 0.0}), 10.0 * i_fm(F, {20.0, 0.0}));
}

TEST(Indicators, RtmBoundsAndSign) {
  const auto F = disk_data();
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 200; ++i) {
    const Vec2 z{u(gen), u(gen)};
    EXPECT_LE(i_rtm(F, z), i_new(F, z));
    EXPECT_GE(i_rtm(F, z), 0.0);
  }
}

TEST(Indicators, OsmMatchesOperatorNorm) {
  for (const auto* F : {&kite_data()}) {
    for (const Vec2 z : {Vec2{0.0, 0.0}, Vec2{1.3, -2.2}, Vec2{-3.0, 3.5}}) {
      const double lhs = i_osm(*F, z, 2.0);
      const auto tv = make_test_vector(z, F->k(), F->n());
      const Eigen::VectorXcd g = dsm::apply(*F, tv);
      const double rhs = F->weight() * g.squaredNorm();
      EXPECT_LE(std::abs(lhs - rhs), 1e-6 * rhs);  // equality up to the reciprocity residual
    }
  }
  const auto D = disk_data(Dirichlet{}, {0.5, -0.3});
  const auto tv = make_test_vector({0.4, 1.1}, 5.0, 64);
  const double rhs = D.weight() * dsm::apply(D, tv).squaredNorm();
  EXPECT_LE(std::abs(i_osm(D, {0.4, 1.1}, 2.0) - rhs), 1e-12 * rhs);
  EXPECT_THROW(i_osm(D, {}, 0.5), ValidationError);
}

TEST(Indicators, ChainOnDiskAndKite) {
  const SamplingGrid grid{4.0, 41, {}};
  for (const auto& F : {disk_data(), disk_data(Neumann{}), kite_data()}) {
    const auto r = chain_report(F, grid);
    EXPECT_TRUE(r.holds(1e-8)) << r.lower << " " << r.middle << " " << r.upper;
  }
  const auto imp = chain_report(disk_data(Impedance{{0.0, 1.0}}), grid);
  EXPECT_GE(imp.lower, -1e-8 * imp.scale);
}

TEST(Indicators, FactorizationSingleTerm) {
  const auto F = disk_data();
  const FactorizationBasis basis(F, 1.0 - 1e-15);
  ASSERT_EQ(basis.rank(), 1);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(F.weight() * F.entries(), Eigen::ComputeThinU);
  const Vec2 z{0.7, -0.2};
  const auto tv = make_test_vector(z, F.k(), F.n());
  const Complex c = inner_w(tv.values, svd.matrixU().col(0));
  EXPECT_NEAR(i_fm(F, z, 1.0 - 1e-15), svd.singularValues()(0) / std::norm(c), 1e-10 * i_fm(F, z, 1.0 - 1e-15));
  EXPECT_THROW(i_fm(F, z, 0.0), ValidationError);
  EXPECT_THROW(i_fm(F, z, 1.0), ValidationError);
}

TEST(Indicators, SweepMatchesPointwise) {
  const auto& F = kite_data();
  const SamplingGrid grid{3.0, 7, {0.5, -0.5}};
  const auto mn = sweep(F, grid, Method::New, 1.0);
  const auto mr = sweep(F, grid, Method::RTM, 1.0);
  const auto mo = sweep(F, grid, Method::OSM, 1.0);
  const auto mf = sweep(F, grid, Method::FM, 1.0);
  for (int p = 0; p < grid.m; ++p) {
    for (int q = 0; q < grid.m; ++q) {
      const Vec2 z = grid.point(p, q);
      EXPECT_NEAR(mn.at(p, q), i_new(F, z), 1e-12 * i_new(F, z));
      EXPECT_NEAR(mr.at(p, q), i_rtm(F, z), 1e-12 * i_new(F, z));
      EXPECT_NEAR(mo.at(p, q), i_osm(F, z, 1.0), 1e-12 * i_osm(F, z, 1.0));
      EXPECT_NEAR(mf.at(p, q), i_fm(F, z), 1e-10 * i_fm(F, z));
    }
  }
  EXPECT_DOUBLE_EQ(grid.point(0, 0).x, -2.5);
  EXPECT_DOUBLE_EQ(grid.point(0, 6).y, 2.5);
  EXPECT_DOUBLE_EQ(grid.point(6).y, 2.5);
}

TEST(Indicators, OuterPower) {
  const auto& F = kite_data();
  const SamplingGrid grid{4.0, 9, {}};
  const auto a = sweep(F, grid, Method::New, 1.0);
  const auto b = sweep(F, grid, Method::New, 2.0);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(b.values[i], a.values[i] * a.values[i], 1e-12 * b.values[i]);
  const auto r1 = sweep(F, grid, Method::RTM, 1.0);
  const auto r3 = sweep(F, grid, Method::RTM, 3.0);
  for (std::size_t i = 0; i < r1.values.size(); ++i) {
    EXPECT_NEAR(r3.values[i], std::copysign(std::pow(std::abs(r1.values[i]), 3.0), r1.values[i]),
                1e-12 * std::abs(r3.values[i]) + 1e-300);
  }
  EXPECT_THROW(sweep(F, grid, Method::New, 0.9), ValidationError);
}

TEST(Indicators, TranslationCovariance) {
  const Vec2 v{1.2, -0.8};
  const auto a = disk_data(Dirichlet{});
  const auto b = disk_data(Dirichlet{}, v);
  for (Method m : {Method::New, Method::OSM, Method::RTM, Method::FM}) {
    const auto ma = sweep(a, {3.0, 11, {}}, m, 2.0);
    const auto mb = sweep(b, {3.0, 11, v}, m, 2.0);
    const double scale = *std::max_element(ma.values.begin(), ma.values.end());
    for (std::size_t i = 0; i < ma.values.size(); ++i) EXPECT_NEAR(ma.values[i], mb.values[i], 1e-10 * scale);
  }
}

TEST(Indicators, StabilityBound) {
  const auto& F = kite_data();
  const SamplingGrid grid{4.0, 31, {}};
  const auto base = sweep(F, grid, Method::New, 1.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto Fd = perturb(F, {0.3, seed});
    const double bound = stability_bound(F, Fd);
    const auto noisy = sweep(Fd, grid, Method::New, 1.0);
    for (std::size_t i = 0; i < base.values.size(); ++i) EXPECT_LE(std::abs(base.values[i] - noisy.values[i]), bound);
  }
}

TEST(Indicators, ArgmaxTieBreak) {
  IndicatorMap map;
  map.grid = {1.0, 2, {}};
  map.values = {1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(map), 1u);
}

TEST(Indicators, MethodNames) {
  EXPECT_EQ(parse_method("fm"), Method::FM);
  EXPECT_EQ(to_string(Method::OSM), "osm");
  EXPECT_THROW(parse_method("music"), ValidationError);
  EXPECT_THROW(SamplingGrid({1.0, 1, {}}).validate(), ValidationError);
  EXPECT_THROW(SamplingGrid({0.0, 4, {}}).validate(), ValidationError);
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dsm/pipeline.hpp"

using namespace dsm;
namespace pl = dsm::pipeline;
namespace fs = std::filesystem;

namespace {

const char* kDiskConfig = R"(
# analytic Dirichlet disk
name = disk
k = 5
n_dirs = 32
engine = analytic
noise.delta = 0 0.3
noise.seed = 11
grid.extent = 4
grid.points = 21
methods = new osm rtm fm
rho = 1 2
component.kind = circle
component.center = 0 0
component.radius = 2
component.condition = dirichlet
)";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dsm_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream os(p, std::ios::binary);
  os << s;
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("DSM_CLI");
  if (!cli) return -1;
  const int rc = std::system((std::string(cli) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, ParsesAllKeys) {
  const auto c = pl::parse_config(R"(
name = mixed
note = two bodies
k = 10
n_dirs = 128
engine = bie
nodes = 256
solver.tolerance = 1e-7
noise.delta = 0.1 0.3
noise.seed = 42
grid.extent = 7
grid.points = 301
grid.center = 1 -1
methods = new fm
rho = 1 2 8
fm.cutoff = 1e-3
component.kind = peanut
component.center = -3 3
component.condition = neumann
component.kind = kite     # trailing comment
component.center = 3 -3
component.condition = impedance
component.lambda = 1 1
)");
  EXPECT_EQ(c.name, "mixed");
  EXPECT_EQ(c.note, "two bodies");
  EXPECT_EQ(c.k, 10.0);
  EXPECT_EQ(c.n_dirs, 128);
  EXPECT_EQ(c.nodes, 256);
  EXPECT_EQ(c.tolerance, 1e-7);
  ASSERT_EQ(c.deltas.size(), 2u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.grid.m, 301);
  EXPECT_EQ(c.grid.center.y, -1.0);
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[1], Method::FM);
  ASSERT_EQ(c.rhos.size(), 3u);
  ASSERT_EQ(c.components.size(), 2u);
  EXPECT_EQ(c.components[0].kind, CurveKind::Peanut);
  EXPECT_EQ(c.components[1].condition, "impedance");
  EXPECT_EQ(*c.components[1].lambda, Complex(1.0, 1.0));
  EXPECT_NO_THROW(pl::validate(c));
}

TEST(Config, StrictRejection) {
  const std::string base = "k = 5\ncomponent.kind = kite\n";
  EXPECT_NO_THROW(pl::validate(pl::parse_config(base)));
  EXPECT_THROW(pl::parse_config(base + "colour = red\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "k = 6\n"), ValidationError);
  EXPECT_THROW(pl::parse_config("component.center = 0 0\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "component.center = 0 0\ncomponent.center = 1 1\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "n_dirs = 6x\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "grid.center = 1\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "just a line\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "engine = fmm\n"), ValidationError);
  EXPECT_THROW(pl::parse_config(base + "methods = new music\n"), ValidationError);
  EXPECT_THROW(pl::parse_config("k = 5\ncomponent.kind = ellipse\n"), ValidationError);

  auto invalid = [](const std::string& text) { return [text] { pl::validate(pl::parse_config(text)); }; };
  EXPECT_THROW(invalid("component.kind = kite\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "n_dirs = 63\n")(), ValidationError);
  EXPECT_THROW(invalid("k = 5\n")(), ValidationError);
  EXPECT_THROW(invalid("k = 5\ncomponent.kind = circle\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "component.radius = 2\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "component.condition = impedance\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "component.condition = sticky\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "component.lambda = 1\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "rho = 0.5\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "grid.points = 1\n")(), ValidationError);
  EXPECT_THROW(invalid(base + "engine = analytic\n")(), ValidationError);
}

TEST(Config, PenetrableScope) {
  try {
    pl::validate(pl::parse_config(
        "k = 5\nengine = analytic\ncomponent.kind = pear\ncomponent.condition = penetrable\ncomponent.q = 0.5\n"));
    FAIL() << "penetrable pear accepted";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("penetrable supported for disks only"), std::string::npos);
  }
  const std::string disk =
      "k = 5\ncomponent.kind = circle\ncomponent.radius = 1\ncomponent.condition = penetrable\ncomponent.q = 0.5 0.5\n";
  EXPECT_THROW(pl::validate(pl::parse_config(disk)), ValidationError);
  EXPECT_NO_THROW(pl::validate(pl::parse_config(disk + "engine = analytic\n")));
}

TEST(Output, CsvAndPgmLayout) {
  IndicatorMap map;
  map.grid = {1.0, 2, {}};
  map.method = Method::RTM;
  map.rho = 2.0;
  map.k = 5.0;
  map.n = 64;
  map.delta = 0.3;
  map.values = {0.0, 1.0, 2.0, 3.0};  // (p,q): (0,0)=0 (0,1)=1 (1,0)=2 (1,1)=3
  const std::string csv = pl::format_csv(map);
  EXPECT_EQ(csv,
            "# indicator rtm rho=2 k=5 N=64 delta=0.3\n"
            "1.000000000000e+00,3.000000000000e+00\n"
            "0.000000000000e+00,2.000000000000e+00\n");
  EXPECT_EQ(pl::format_pgm(map), "P2\n2 2\n255\n85 255\n0 170\n");
  map.values = {1.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(pl::format_pgm(map), "P2\n2 2\n255\n0 0\n0 0\n");
}

TEST(Output, Fnv1a) {
  EXPECT_EQ(pl::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(pl::hex64(pl::fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Commands, CompareIsDeterministic) {
  const auto cfg = pl::parse_config(kDiskConfig);
  const auto a = scratch("cmp_a");
  const auto b = scratch("cmp_b");
  const auto ra = pl::cmd_compare(cfg, a.string());
  const auto rb = pl::cmd_compare(cfg, b.string());
  EXPECT_EQ(ra["manifest"], rb["manifest"]);
  // farfield + 2 noisy files + 2 deltas * 4 methods * 2 rho * (csv + pgm)
  EXPECT_EQ(ra["manifest"].size(), 3u + 32u);
  for (const auto& e : ra["manifest"]) EXPECT_EQ(slurp(a / e["file"].get<std::string>()), slurp(b / e["file"].get<std::string>()));
  EXPECT_TRUE(fs::exists(a / "report.json"));
  EXPECT_TRUE(fs::exists(a / "new_rho2_delta0.3.csv"));
  EXPECT_NEAR(ra["runs"][1]["measured_relative_error"].get<double>(), 0.3, 1e-12);
}

TEST(Commands, ForwardPerturbReconstructVerify) {
  const auto dir = scratch("chain");
  const auto cfg = pl::parse_config(kDiskConfig);
  const auto fr = pl::cmd_forward(cfg, (dir / "fwd").string());
  EXPECT_LE(fr["matrix"]["reciprocity_residual"].get<double>(), 1e-13);
  const std::string ff = (dir / "fwd" / "farfield.txt").string();

  const auto pr = pl::cmd_perturb(ff, 0.3, 5, (dir / "noisy").string());
  EXPECT_NEAR(pr["measured_relative_error"].get<double>(), 0.3, 1e-12);
  const auto p0 = pl::cmd_perturb(ff, 0.0, 5, (dir / "clean").string());
  EXPECT_EQ(slurp(dir / "clean" / "farfield_delta0.txt"), slurp(ff));

  auto opts = pl::reconstruct_options(cfg);
  const auto rr = pl::cmd_reconstruct(ff, opts, (dir / "rec").string());
  ASSERT_EQ(rr["maps"].size(), 8u);
  const auto z = rr["maps"][0]["argmax"]["z"];
  const double r = std::hypot(z[0].get<double>(), z[1].get<double>());
  EXPECT_LE(r, 2.0 + kPi / 5.0);

  bool pass = false;
  pl::cmd_verify(ff, {}, "", pass);
  EXPECT_TRUE(pass);

  // One corrupted entry breaks reciprocity.
  auto F = read_far_field(ff);
  Eigen::MatrixXcd a = F.entries();
  a(3, 7) += 1.0;
  const std::string bad = (dir / "bad.txt").string();
  write_far_field(bad, {F.k(), a});
  const auto checks = pl::verify_checks(read_far_field(bad), {});
  EXPECT_EQ(checks[0].name, "reciprocity");
  EXPECT_FALSE(checks[0].pass);
}

TEST(Commands, VerifyLossyData) {
  const auto F = disk_far_field_matrix({{}, 2.0, Impedance{{0.0, 1.0}}}, 5.0, 64);
  const auto checks = pl::verify_checks(F, {});
  ASSERT_EQ(checks.size(), 4u);
  EXPECT_EQ(checks[1].name, "r_positivity");
  for (const auto& c : checks) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
}

TEST(Commands, ZeroMatrixReconstruct) {
  const auto dir = scratch("zero");
  const std::string ff = (dir / "zero.txt").string();
  write_far_field(ff, FarFieldMatrix::zeros(5.0, 16));
  auto opts = pl::reconstruct_options(pl::parse_config(kDiskConfig));
  opts.methods = {Method::New, Method::OSM, Method::RTM};
  const auto rr = pl::cmd_reconstruct(ff, opts, (dir / "rec").string());
  for (const auto& m : rr["maps"]) {
    EXPECT_EQ(m["argmax"]["index"].get<std::size_t>(), 0u);
    EXPECT_EQ(m["argmax"]["value"].get<double>(), 0.0);
  }
}

TEST(Cli, ExitCodes) {
  if (!std::getenv("DSM_CLI")) GTEST_SKIP() << "DSM_CLI not set";
  const auto dir = scratch("cli");
  spit(dir / "disk.cfg", kDiskConfig);
  spit(dir / "pear.cfg",
       "k = 5\nengine = analytic\ncomponent.kind = pear\ncomponent.condition = penetrable\ncomponent.q = 0.5\n");
  const std::string cfg = (dir / "disk.cfg").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("forward"), 1);
  EXPECT_EQ(run_cli("bogus"), 1);
  EXPECT_EQ(run_cli("forward --config " + (dir / "pear.cfg").string() + " --out " + (dir / "p").string()), 2);
  EXPECT_EQ(run_cli("forward --config /nonexistent.cfg --out " + (dir / "x").string()), 2);
  EXPECT_EQ(run_cli("forward --quiet --config " + cfg + " --out " + (dir / "f").string()), 0);
  const std::string ff = (dir / "f" / "farfield.txt").string();
  EXPECT_EQ(run_cli("verify --quiet --in " + ff), 0);
  EXPECT_EQ(run_cli("perturb --quiet --in " + ff + " --delta 0.3 --seed 4 --out " + (dir / "n").string()), 0);
  EXPECT_EQ(run_cli("reconstruct --quiet --in " + ff + " --config " + cfg + " --out " + (dir / "r").string()), 0);
  EXPECT_EQ(run_cli("compare --quiet --config " + cfg + " --seed 3 --out " + (dir / "c").string()), 0);
  // forward on the analytic disk is byte-stable
  EXPECT_EQ(run_cli("forward --quiet --config " + cfg + " --out " + (dir / "f2").string()), 0);
  EXPECT_EQ(slurp(dir / "f" / "farfield.txt"), slurp(dir / "f2" / "farfield.txt"));

  auto F = read_far_field(ff);
  Eigen::MatrixXcd a = F.entries();
  a(0, 1) += 1.0;
  write_far_field((dir / "bad.txt").string(), {F.k(), a});
  EXPECT_EQ(run_cli("verify --quiet --in " + (dir / "bad.txt").string()), 2);
}

TEST(Cli, ShippedConfigsParse) {
  const char* dir = std::getenv("DSM_CONFIGS");
  if (!dir) GTEST_SKIP() << "DSM_CONFIGS not set";
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".cfg") continue;
    ++count;
    EXPECT_NO_THROW(pl::validate(pl::load_config(e.path().string()))) << e.path();
  }
  EXPECT_GT(count, 20);
}

#pragma once

// Experiment runner: config parsing, forward engines, output writers and the
// forward / perturb / reconstruct / compare / verify commands.
//
// Config format: one `key = value` per line, `#` starts a comment. Scatterer
// components are repeated groups; each `component.kind` opens a new one.
//
//   name = dirichlet_kite
//   k = 5
//   n_dirs = 64
//   engine = bie                 # bie | analytic
//   nodes = 0                    # 0 = automatic
//   solver.tolerance = 1e-6
//   noise.delta = 0 0.3 0.9
//   noise.seed = 7
//   grid.extent = 4
//   grid.points = 151
//   grid.center = 0 0
//   methods = new osm rtm fm
//   rho = 1 2
//   fm.cutoff = 1e-4
//   note = free text copied into the report
//   component.kind = kite        # circle | peanut | pear | kite
//   component.center = 0 0
//   component.radius = 1         # circle only
//   component.condition = impedance
//   component.lambda = 1 1       # real [imag]
//   component.q = 0.5 0.5        # penetrable contrast, real [imag]

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dsm/analytic_disk.hpp"
#include "dsm/bie_forward.hpp"
#include "dsm/common.hpp"
#include "dsm/conditions.hpp"
#include "dsm/farfield.hpp"
#include "dsm/geometry.hpp"
#include "dsm/indicators.hpp"

namespace dsm::pipeline {

using Json = nlohmann::ordered_json;

enum class Engine { Bie, Analytic };

inline std::string_view to_string(Engine e) { return e == Engine::Bie ? "bie" : "analytic"; }

inline Engine parse_engine(std::string_view s) {
  if (s == "bie") return Engine::Bie;
  if (s == "analytic") return Engine::Analytic;
  throw ValidationError("unknown engine '" + std::string(s) + "' (expected bie or analytic)");
}

struct ComponentSpec {
  CurveKind kind = CurveKind::Circle;
  Vec2 center{};
  std::optional<double> radius;
  std::string condition = "dirichlet";
  std::optional<Complex> lambda;
  std::optional<Complex> q;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string note;
  double k = 0.0;
  int n_dirs = 64;
  Engine engine = Engine::Bie;
  int nodes = 0;
  double tolerance = 1e-6;
  std::vector<double> deltas{0.0};
  std::uint64_t seed = 1;
  SamplingGrid grid{4.0, 151, {}};
  std::vector<Method> methods{Method::New, Method::OSM, Method::RTM, Method::FM};
  std::vector<double> rhos{1.0};
  double fm_cutoff = kDefaultFmCutoff;
  std::vector<ComponentSpec> components;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw ValidationError("config key '" + key + "': bad number '" + s + "'");
  return v;
}

inline long long to_integer(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw ValidationError("config key '" + key + "': bad integer '" + s + "'");
  return v;
}

inline std::vector<double> doubles(const std::string& value, const std::string& key, std::size_t min_count,
                                   std::size_t max_count) {
  std::vector<double> out;
  for (const auto& w : words(value)) out.push_back(to_double(w, key));
  if (out.size() < min_count || out.size() > max_count) {
    throw ValidationError("config key '" + key + "': expected " + std::to_string(min_count) +
                          (max_count == min_count ? "" : " to " + std::to_string(max_count)) + " values");
  }
  return out;
}

inline Complex complex_value(const std::string& value, const std::string& key) {
  const auto v = doubles(value, key, 1, 2);
  return {v[0], v.size() > 1 ? v[1] : 0.0};
}

inline Vec2 point_value(const std::string& value, const std::string& key) {
  const auto v = doubles(value, key, 2, 2);
  return {v[0], v[1]};
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  if (!(c.k > 0.0)) throw ValidationError("config: k must be given and > 0");
  if (c.n_dirs < 4 || c.n_dirs % 2 != 0) throw ValidationError("config: n_dirs must be even and >= 4");
  if (c.components.empty()) throw ValidationError("config: at least one component is required");
  c.grid.validate();
  if (c.methods.empty()) throw ValidationError("config: methods list is empty");
  if (c.rhos.empty()) throw ValidationError("config: rho list is empty");
  for (double r : c.rhos)
    if (!(r >= 1.0)) throw ValidationError("config: rho values must be >= 1");
  for (double d : c.deltas)
    if (!(d >= 0.0)) throw ValidationError("config: noise.delta values must be >= 0");
  if (!(c.fm_cutoff > 0.0 && c.fm_cutoff < 1.0)) throw ValidationError("config: fm.cutoff must lie in (0, 1)");
  for (std::size_t i = 0; i < c.components.size(); ++i) {
    const auto& s = c.components[i];
    const std::string where = "config component " + std::to_string(i) + ": ";
    if (s.kind == CurveKind::Circle && !s.radius) throw ValidationError(where + "circle needs a radius");
    if (s.kind != CurveKind::Circle && s.radius) throw ValidationError(where + "radius applies to circles only");
    if (s.radius && !(*s.radius > 0.0)) throw ValidationError(where + "radius must be > 0");
    if (s.condition == "impedance") {
      if (!s.lambda) throw ValidationError(where + "impedance needs lambda");
      if (s.lambda->imag() < 0.0) throw ValidationError(where + "impedance requires Im(lambda) >= 0");
    } else if (s.lambda) {
      throw ValidationError(where + "lambda applies to impedance only");
    }
    if (s.condition == "penetrable") {
      if (s.kind != CurveKind::Circle) throw ValidationError("penetrable supported for disks only");
      if (!s.q) throw ValidationError(where + "penetrable needs q");
      if (c.engine != Engine::Analytic) throw ValidationError(where + "penetrable disks need the analytic engine");
    } else if (s.q) {
      throw ValidationError(where + "q applies to penetrable only");
    }
    if (s.condition != "dirichlet" && s.condition != "neumann" && s.condition != "impedance" &&
        s.condition != "penetrable") {
      throw ValidationError(where + "unknown condition '" + s.condition + "'");
    }
  }
  if (c.engine == Engine::Analytic && (c.components.size() != 1 || c.components[0].kind != CurveKind::Circle)) {
    throw ValidationError("config: the analytic engine handles a single circle only");
  }
}

inline ExperimentConfig parse_config(std::string_view text) {
  static const std::set<std::string> kTopKeys = {
      "name",        "note",        "k",           "n_dirs",  "engine", "nodes", "solver.tolerance",
      "noise.delta", "noise.seed",  "grid.extent", "grid.points", "grid.center", "methods", "rho",
      "fm.cutoff"};
  static const std::set<std::string> kComponentKeys = {"component.kind",      "component.center", "component.radius",
                                                       "component.condition", "component.lambda", "component.q"};
  ExperimentConfig c;
  std::set<std::string> seen;
  std::set<std::string> seen_component;
  std::istringstream is{std::string(text)};
  std::size_t lineno = 0;
  for (std::string raw; std::getline(is, raw);) {
    ++lineno;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (value.empty()) throw ValidationError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");

    if (kComponentKeys.count(key)) {
      if (key == "component.kind") {
        c.components.emplace_back();
        seen_component.clear();
      } else if (c.components.empty()) {
        throw ValidationError("config line " + std::to_string(lineno) + ": '" + key + "' before component.kind");
      }
      if (!seen_component.insert(key).second) {
        throw ValidationError("config line " + std::to_string(lineno) + ": duplicate '" + key + "' in component");
      }
      auto& s = c.components.back();
      if (key == "component.kind") s.kind = parse_curve_kind(value);
      else if (key == "component.center") s.center = detail::point_value(value, key);
      else if (key == "component.radius") s.radius = detail::to_double(value, key);
      else if (key == "component.condition") s.condition = value;
      else if (key == "component.lambda") s.lambda = detail::complex_value(value, key);
      else if (key == "component.q") s.q = detail::complex_value(value, key);
      continue;
    }
    if (!kTopKeys.count(key)) throw ValidationError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ValidationError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");

    if (key == "name") c.name = value;
    else if (key == "note") c.note = value;
    else if (key == "k") c.k = detail::to_double(value, key);
    else if (key == "n_dirs") c.n_dirs = static_cast<int>(detail::to_integer(value, key));
    else if (key == "engine") c.engine = parse_engine(value);
    else if (key == "nodes") c.nodes = static_cast<int>(detail::to_integer(value, key));
    else if (key == "solver.tolerance") c.tolerance = detail::to_double(value, key);
    else if (key == "noise.delta") c.deltas = detail::doubles(value, key, 1, 64);
    else if (key == "noise.seed") {
      const auto v = detail::to_integer(value, key);
      if (v < 0) throw ValidationError("config key 'noise.seed' must be >= 0");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "grid.extent") c.grid.extent = detail::to_double(value, key);
    else if (key == "grid.points") c.grid.m = static_cast<int>(detail::to_integer(value, key));
    else if (key == "grid.center") c.grid.center = detail::point_value(value, key);
    else if (key == "methods") {
      c.methods.clear();
      for (const auto& w : detail::words(value)) c.methods.push_back(parse_method(w));
    } else if (key == "rho") c.rhos = detail::doubles(value, key, 1, 16);
    else if (key == "fm.cutoff") c.fm_cutoff = detail::to_double(value, key);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Forward engines

inline BoundaryCurve curve_of(const ComponentSpec& s) {
  switch (s.kind) {
    case CurveKind::Circle: return BoundaryCurve::circle(s.center, s.radius.value_or(1.0));
    case CurveKind::Peanut: return BoundaryCurve::peanut(s.center);
    case CurveKind::Pear: return BoundaryCurve::pear(s.center);
    case CurveKind::Kite: return BoundaryCurve::kite(s.center);
  }
  throw ValidationError("unknown curve kind");
}

inline ObstacleCondition obstacle_condition(const ComponentSpec& s) {
  if (s.condition == "dirichlet") return Dirichlet{};
  if (s.condition == "neumann") return Neumann{};
  if (s.condition == "impedance") return Impedance{*s.lambda};
  throw ValidationError("condition '" + s.condition + "' is not available in the boundary-integral engine");
}

inline DiskScatterer disk_of(const ComponentSpec& s) {
  DiskScatterer d{s.center, s.radius.value_or(1.0), Dirichlet{}};
  if (s.condition == "penetrable") d.condition = Penetrable{*s.q};
  else if (s.condition == "impedance") d.condition = Impedance{*s.lambda};
  else if (s.condition == "neumann") d.condition = Neumann{};
  return d;
}

inline ScattererConfig scatterer_of(const ExperimentConfig& c) {
  ScattererConfig s;
  s.k = c.k;
  for (const auto& comp : c.components) s.components.push_back({curve_of(comp), obstacle_condition(comp)});
  return s;
}

struct ForwardResult {
  FarFieldMatrix matrix;
  Json info;
};

inline ForwardResult run_forward(const ExperimentConfig& c) {
  validate(c);
  Json info;
  info["engine"] = to_string(c.engine);
  if (c.engine == Engine::Analytic) {
    const auto disk = disk_of(c.components[0]);
    info["series_order"] = disk_series_order(c.k, disk.radius);
    return {disk_far_field_matrix(disk, c.k, c.n_dirs), info};
  }
  SolverSettings settings;
  settings.nodes_per_component = c.nodes;
  settings.target_tolerance = c.tolerance;
  ForwardSolver solver(scatterer_of(c), settings);
  Json nodes = Json::array();
  for (std::size_t i = 0; i < c.components.size(); ++i) nodes.push_back(solver.nodes_of(i));
  info["nodes_per_component"] = nodes;
  info["rcond"] = solver.rcond();
  return {solver.far_field_matrix(c.n_dirs), info};
}

// ---------------------------------------------------------------------------
// Output

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Header line, then m rows of m values; the first row is the largest y.
inline std::string format_csv(const IndicatorMap& map) {
  std::string out = "# indicator " + std::string(to_string(map.method)) + " rho=" + format_number(map.rho) +
                    " k=" + format_number(map.k) + " N=" + std::to_string(map.n) +
                    " delta=" + format_number(map.delta) + "\n";
  char buf[40];
  const int m = map.grid.m;
  for (int q = m - 1; q >= 0; --q) {
    for (int p = 0; p < m; ++p) {
      std::snprintf(buf, sizeof buf, p ? ",%.12e" : "%.12e", map.at(p, q));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

/// Plain (P2) graymap, min-max normalized to 0..255, same orientation as the CSV.
inline std::string format_pgm(const IndicatorMap& map) {
  const int m = map.grid.m;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double span = *hi - *lo;
  std::string out = "P2\n" + std::to_string(m) + " " + std::to_string(m) + "\n255\n";
  for (int q = m - 1; q >= 0; --q) {
    for (int p = 0; p < m; ++p) {
      const int g = span > 0.0 ? static_cast<int>(std::lround(255.0 * (map.at(p, q) - *lo) / span)) : 0;
      out += std::to_string(g);
      out += (p + 1 < m) ? ' ' : '\n';
    }
  }
  return out;
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  std::string write(const std::string& name, const std::string& bytes) {
    const auto path = dir_ / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open '" + path.string() + "' for writing");
    os << bytes;
    if (!os) throw ValidationError("write to '" + path.string() + "' failed");
    manifest_.push_back({{"file", name}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    return path.string();
  }

  const Json& manifest() const { return manifest_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  Json manifest_ = Json::array();
};

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json config_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["k"] = c.k;
  j["n_dirs"] = c.n_dirs;
  j["engine"] = to_string(c.engine);
  Json comps = Json::array();
  for (const auto& s : c.components) {
    Json e;
    e["kind"] = to_string(s.kind);
    e["center"] = Json::array({s.center.x, s.center.y});
    if (s.radius) e["radius"] = *s.radius;
    e["condition"] = s.condition;
    if (s.lambda) e["lambda"] = complex_json(*s.lambda);
    if (s.q) e["q"] = complex_json(*s.q);
    comps.push_back(e);
  }
  j["components"] = comps;
  j["noise"] = {{"delta", c.deltas}, {"seed", c.seed}};
  j["grid"] = {{"extent", c.grid.extent}, {"points", c.grid.m}, {"center", Json::array({c.grid.center.x, c.grid.center.y})}};
  Json methods = Json::array();
  for (auto m : c.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  j["rho"] = c.rhos;
  return j;
}

inline Json matrix_json(const FarFieldMatrix& F) {
  Json j;
  j["k"] = F.k();
  j["n"] = F.n();
  j["spectral_norm"] = spectral_norm(F.entries());
  j["reciprocity_residual"] = reciprocity_residual(F);
  j["unitarity_residual"] = unitarity_residual(F);
  return j;
}

inline void write_report(OutputDir& out, Json& report) {
  report["manifest"] = out.manifest();
  const auto path = out.path() / "report.json";
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path.string() + "' for writing");
  os << report.dump(2) << '\n';
}

inline std::string delta_tag(double delta) { return "delta" + format_number(delta); }

// ---------------------------------------------------------------------------
// Commands

struct ReconstructOptions {
  SamplingGrid grid;
  std::vector<Method> methods;
  std::vector<double> rhos;
  double fm_cutoff = kDefaultFmCutoff;
  double delta = 0.0;  // metadata only
};

inline ReconstructOptions reconstruct_options(const ExperimentConfig& c) {
  return {c.grid, c.methods, c.rhos, c.fm_cutoff, 0.0};
}

/// Maps for every (method, rho); returns per-map report entries.
inline Json reconstruct_into(OutputDir& out, const FarFieldMatrix& F, const ReconstructOptions& o,
                             const std::string& suffix) {
  Json maps = Json::array();
  for (Method method : o.methods) {
    for (double rho : o.rhos) {
      const auto t0 = std::chrono::steady_clock::now();
      IndicatorMap map = sweep(F, o.grid, method, rho, o.fm_cutoff);
      map.delta = o.delta;
      const double ms = elapsed_ms(t0);
      const std::string stem = std::string(to_string(method)) + "_rho" + format_number(rho) + suffix;
      out.write(stem + ".csv", format_csv(map));
      out.write(stem + ".pgm", format_pgm(map));
      const std::size_t best = argmax(map);
      const Vec2 z = o.grid.point(best);
      maps.push_back({{"method", to_string(method)},
                      {"rho", rho},
                      {"csv", stem + ".csv"},
                      {"argmax", {{"index", best}, {"z", Json::array({z.x, z.y})}, {"value", map.values[best]}}},
                      {"time_ms", ms}});
    }
  }
  return maps;
}

inline Json chain_json(const FarFieldMatrix& F, const SamplingGrid& grid) {
  const auto r = chain_report(F, grid);
  return {{"lower", r.lower}, {"middle", r.middle}, {"upper", r.upper}, {"scale", r.scale}};
}

inline Json cmd_forward(const ExperimentConfig& c, const std::string& out_dir) {
  OutputDir out(out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  auto fwd = run_forward(c);
  const double ms = elapsed_ms(t0);
  out.write("farfield.txt", format_far_field(fwd.matrix));
  Json report;
  report["command"] = "forward";
  report["config"] = config_json(c);
  if (!c.note.empty()) report["note"] = c.note;
  report["forward"] = fwd.info;
  report["forward"]["time_ms"] = ms;
  report["matrix"] = matrix_json(fwd.matrix);
  write_report(out, report);
  return report;
}

inline Json cmd_perturb(const std::string& in, double delta, std::uint64_t seed, const std::string& out_dir) {
  const FarFieldMatrix F = read_far_field(in);
  const FarFieldMatrix Fd = perturb(F, {delta, seed});
  OutputDir out(out_dir);
  const std::string name = "farfield_" + delta_tag(delta) + ".txt";
  out.write(name, format_far_field(Fd));
  const double fn = spectral_norm(F.entries());
  Json report;
  report["command"] = "perturb";
  report["input"] = in;
  report["noise"] = {{"delta", delta}, {"seed", seed}, {"norm", "spectral"}};
  report["measured_relative_error"] = fn > 0.0 ? spectral_norm(Fd.entries() - F.entries()) / fn : 0.0;
  report["matrix"] = matrix_json(Fd);
  write_report(out, report);
  return report;
}

inline Json cmd_reconstruct(const std::string& in, const ReconstructOptions& o, const std::string& out_dir) {
  const FarFieldMatrix F = read_far_field(in);
  OutputDir out(out_dir);
  Json report;
  report["command"] = "reconstruct";
  report["input"] = in;
  report["delta"] = o.delta;
  report["maps"] = reconstruct_into(out, F, o, "");
  report["chain"] = chain_json(F, o.grid);
  write_report(out, report);
  return report;
}

inline Json cmd_compare(const ExperimentConfig& c, const std::string& out_dir) {
  OutputDir out(out_dir);
  Json report;
  report["command"] = "compare";
  report["config"] = config_json(c);
  if (!c.note.empty()) report["note"] = c.note;

  const auto t0 = std::chrono::steady_clock::now();
  auto fwd = run_forward(c);
  report["forward"] = fwd.info;
  report["forward"]["time_ms"] = elapsed_ms(t0);
  out.write("farfield.txt", format_far_field(fwd.matrix));
  report["matrix"] = matrix_json(fwd.matrix);

  const double fn = spectral_norm(fwd.matrix.entries());
  Json runs = Json::array();
  for (double delta : c.deltas) {
    const FarFieldMatrix Fd = perturb(fwd.matrix, {delta, c.seed});
    const std::string tag = delta_tag(delta);
    out.write("farfield_" + tag + ".txt", format_far_field(Fd));
    ReconstructOptions o = reconstruct_options(c);
    o.delta = delta;
    const auto t1 = std::chrono::steady_clock::now();
    Json run;
    run["delta"] = delta;
    run["measured_relative_error"] = fn > 0.0 ? spectral_norm(Fd.entries() - fwd.matrix.entries()) / fn : 0.0;
    run["maps"] = reconstruct_into(out, Fd, o, "_" + tag);
    run["chain"] = chain_json(Fd, c.grid);
    run["time_ms"] = elapsed_ms(t1);
    runs.push_back(run);
  }
  report["runs"] = runs;
  write_report(out, report);
  return report;
}

struct VerifyOptions {
  SamplingGrid grid{4.0, 61, {}};
  double delta = 0.3;
  std::uint64_t seed = 1;
  double reciprocity_tol = 1e-6;
  double unitarity_tol = 1e-6;
  double positivity_tol = 1e-8;
  double chain_tol = 1e-8;
};

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

/// Reciprocity, unitarity (or R-positivity for lossy data), the indicator
/// chain and the stability bound against a fresh perturbation.
inline std::vector<VerifyCheck> verify_checks(const FarFieldMatrix& F, const VerifyOptions& o) {
  std::vector<VerifyCheck> out;
  const double rec = reciprocity_residual(F);
  out.push_back({"reciprocity", rec <= o.reciprocity_tol, rec, o.reciprocity_tol});

  const double uni = unitarity_residual(F);
  if (uni <= o.unitarity_tol) {
    out.push_back({"unitarity", true, uni, o.unitarity_tol});
  } else {
    const double norm2 = spectral_norm(F.entries());
    const double lam = r_form_min_eigenvalue(F);
    const double floor = -o.positivity_tol * norm2;
    out.push_back({"r_positivity", lam >= floor, lam, floor});
  }

  const auto chain = chain_report(F, o.grid);
  const double worst = std::min({chain.lower, chain.middle, chain.upper});
  out.push_back({"chain", chain.holds(o.chain_tol), worst, -o.chain_tol * chain.scale});

  const FarFieldMatrix Fd = perturb(F, {o.delta, o.seed});
  const double bound = stability_bound(F, Fd);
  const IndicatorMap a = sweep(F, o.grid, Method::New, 1.0);
  const IndicatorMap b = sweep(Fd, o.grid, Method::New, 1.0);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
  const double allowed = bound * (1.0 + 1e-12) + 1e-300;
  out.push_back({"stability", diff <= allowed, diff, bound});
  return out;
}

inline Json cmd_verify(const std::string& in, const VerifyOptions& o, const std::string& out_dir, bool& all_pass) {
  const FarFieldMatrix F = read_far_field(in);
  const auto checks = verify_checks(F, o);
  all_pass = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    all_pass = all_pass && c.pass;
    list.push_back({{"check", c.name}, {"pass", c.pass}, {"value", c.value}, {"threshold", c.threshold}});
  }
  Json report;
  report["command"] = "verify";
  report["input"] = in;
  report["checks"] = list;
  report["pass"] = all_pass;
  if (!out_dir.empty()) {
    OutputDir out(out_dir);
    write_report(out, report);
  }
  return report;
}

}  // namespace dsm::pipeline

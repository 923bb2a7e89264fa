// Command-line front end: forward, perturb, reconstruct, compare, verify.
//
// Exit codes: 0 success, 1 usage, 2 validation (bad input, failed verify),
// 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dsm/pipeline.hpp"

namespace {

namespace pl = dsm::pipeline;

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string out = "out";
  std::string in;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> engine;
  double delta = 0.0;
  bool quiet = false;
};

pl::ExperimentConfig load(const Options& o) {
  auto c = pl::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.engine) c.engine = pl::parse_engine(*o.engine);
  pl::validate(c);
  return c;
}

void summarize(const pl::Json& report, bool quiet) {
  if (!quiet) std::cout << report.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Far-field synthesis and sampling-indicator reconstruction"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "suppress the report on stdout");
  };

  auto* fwd = app.add_subcommand("forward", "synthesize a far-field matrix");
  fwd->add_option("--config", o.config, "experiment config")->required();
  fwd->add_option("--engine", o.engine, "bie | analytic (overrides config)");
  add_common(fwd);

  auto* per = app.add_subcommand("perturb", "add relative Gaussian noise to a far-field file");
  per->add_option("--in", o.in, "far-field file")->required();
  per->add_option("--delta", o.delta, "relative noise level")->required();
  per->add_option("--seed", o.seed, "noise seed")->default_str("1");
  add_common(per);

  auto* rec = app.add_subcommand("reconstruct", "indicator maps from a far-field file");
  rec->add_option("--in", o.in, "far-field file")->required();
  rec->add_option("--config", o.config, "config providing grid, methods and rho")->required();
  rec->add_option("--delta", o.delta, "noise level recorded in the output metadata");
  add_common(rec);

  auto* cmp = app.add_subcommand("compare", "forward + perturb + reconstruct");
  cmp->add_option("--config", o.config, "experiment config")->required();
  cmp->add_option("--seed", o.seed, "noise seed (overrides config)");
  cmp->add_option("--engine", o.engine, "bie | analytic (overrides config)");
  add_common(cmp);

  auto* ver = app.add_subcommand("verify", "operator identity checks on a far-field file");
  ver->add_option("--in", o.in, "far-field file")->required();
  ver->add_option("--config", o.config, "optional config providing the sampling grid");
  ver->add_option("--seed", o.seed, "seed of the stability perturbation");
  ver->add_option("--out", o.out, "directory for report.json");
  ver->add_flag("--quiet", o.quiet, "print only the pass/fail lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*fwd) {
      summarize(pl::cmd_forward(load(o), o.out), o.quiet);
    } else if (*per) {
      summarize(pl::cmd_perturb(o.in, o.delta, o.seed.value_or(1), o.out), o.quiet);
    } else if (*rec) {
      auto opts = pl::reconstruct_options(load(o));
      opts.delta = o.delta;
      summarize(pl::cmd_reconstruct(o.in, opts, o.out), o.quiet);
    } else if (*cmp) {
      summarize(pl::cmd_compare(load(o), o.out), o.quiet);
    } else if (*ver) {
      pl::VerifyOptions vo;
      if (!o.config.empty()) vo.grid = pl::load_config(o.config).grid;
      if (o.seed) vo.seed = *o.seed;
      bool pass = false;
      const auto report = pl::cmd_verify(o.in, vo, ver->count("--out") ? o.out : std::string{}, pass);
      for (const auto& c : report["checks"]) {
        std::printf("%s %-13s value=%.6e threshold=%.6e\n", c["pass"].get<bool>() ? "PASS" : "FAIL",
                    c["check"].get<std::string>().c_str(), c["value"].get<double>(), c["threshold"].get<double>());
      }
      return pass ? kOk : kValidation;
    }
  } catch (const dsm::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const dsm::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}

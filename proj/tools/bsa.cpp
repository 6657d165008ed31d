// Command-line front end: run, sweep, verify, show.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsa/config.hpp"
#include "bsa/experiment.hpp"
#include "bsa/interior_point.hpp"
#include "bsa/report.hpp"
#include "bsa/verify.hpp"

namespace fs = std::filesystem;
using namespace bsa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string solver;
};

fs::path outputRoot() {
  const char* env = std::getenv("BSA_OUTPUT_ROOT");
  return env && *env ? fs::path(env) : fs::path("results");
}

// --out wins, then the config's output key, then $BSA_OUTPUT_ROOT/<experiment>.
fs::path outputDir(const Common& c, const ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (!cfg.output.empty()) return cfg.output;
  return outputRoot() / toString(cfg.experiment);
}

ExperimentConfig effectiveConfig(const Common& c) {
  ExperimentConfig cfg = loadConfig(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.solver.empty()) {
    const auto names = nlp::solverNames();
    if (std::find(names.begin(), names.end(), c.solver) == names.end()) {
      throw ConfigError("solver.name", "unknown solver '" + c.solver + "'");
    }
    cfg.solver.name = c.solver;
  }
  if (c.threads < 1) throw ConfigError("--threads", "must be at least 1");
  cfg.validate();
  return cfg;
}

void writeEffectiveConfig(const fs::path& dir, const ExperimentConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << toIni(cfg, false);
}

void addCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("--threads", c.threads, "worker threads")->capture_default_str();
  cmd->add_option("--solver", c.solver, "NLP solver name");
}

int doRun(const Common& c) {
  const ExperimentConfig cfg = effectiveConfig(c);
  const fs::path dir = outputDir(c, cfg);
  writeEffectiveConfig(dir, cfg);
  if (cfg.experiment == ExperimentId::Sweep) {
    const SweepReport report = runSweep(cfg, {dir, c.threads});
    std::cout << formatSummary(nlohmann::json::parse(std::ifstream(dir / "summary.json")));
    std::cout << "artifacts: " << dir.string() << "\n";
    return report.allSucceeded() ? kExitOk : kExitSolver;
  }
  const RunReport report = runExperiment(cfg, {dir, c.threads});
  std::cout << formatSummary(toJson(report));
  std::cout << "artifacts: " << dir.string() << "\n";
  return report.success ? kExitOk : kExitSolver;
}

int doSweep(const Common& c) {
  const ExperimentConfig cfg = effectiveConfig(c);
  if (cfg.experiment != ExperimentId::Sweep) {
    throw ConfigError("experiment", "the sweep verb needs experiment = sweep");
  }
  return doRun(c);
}

int doVerify(const VerifyOptions& options, const std::string& out) {
  const auto results = runVerification(PendulumParams{}, options);
  bool all = true;
  for (const auto& r : results) {
    std::printf("%-4s %-40s value %-11.4g tol %-9.3g %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.value, r.tolerance, r.seconds, r.detail.c_str());
    all = all && r.passed;
  }
  if (!out.empty()) {
    fs::create_directories(out);
    writeJson(fs::path(out) / "verify.json", toJson(results));
  }
  return all ? kExitOk : kExitFailure;
}

int doShow(const std::string& path) {
  fs::path file = path;
  if (fs::is_directory(file)) file /= "summary.json";
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), "cannot open summary");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(file.string(), std::string("not a summary JSON: ") + e.what());
  }
  std::cout << formatSummary(j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-stiffness actuated double pendulum: optimal control experiments"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts;
  auto* run = app.add_subcommand("run", "run one experiment from a config");
  addCommon(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "effort-minimal runs over the configured horizons");
  addCommon(sweep, sweep_opts);

  VerifyOptions verify_opts;
  std::string verify_out;
  bool quick = false;
  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--seed", verify_opts.seed, "random seed")->capture_default_str();
  verify->add_option("--threads", verify_opts.threads, "worker threads")->capture_default_str();
  verify->add_option("--out", verify_out, "write verify.json here");
  verify->add_flag("--quick", quick, "skip the mesh-convergence solves");

  std::string show_path;
  auto* show = app.add_subcommand("show", "pretty-print a summary JSON");
  show->add_option("path", show_path, "summary.json or a run directory")->required();

  std::string template_id;
  auto* tmpl = app.add_subcommand("template", "print a commented default config");
  tmpl->add_option("experiment", template_id, "experiment id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return doRun(run_opts);
    if (*sweep) return doSweep(sweep_opts);
    if (*verify) {
      verify_opts.include_mesh = !quick;
      return doVerify(verify_opts, verify_out);
    }
    if (*show) return doShow(show_path);
    if (*tmpl) {
      std::cout << configTemplate(parseExperimentId(template_id));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

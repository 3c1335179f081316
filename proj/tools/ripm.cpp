#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "ripm/commands.hpp"

namespace {

void add_run_flags(CLI::App* app, ripm::cli::RunConfig& cfg, std::string& sketch) {
  app->add_option("--delta", cfg.delta, "target accuracy in (0,1)")->capture_default_str();
  app->add_option("--mode", cfg.mode, "parameter set")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ripm::ParamMode>{{"paper", ripm::ParamMode::Paper},
                                                 {"practical", ripm::ParamMode::Practical}},
          CLI::ignore_case));
  app->add_option("--seed", cfg.seed, "sketch seed")->capture_default_str();
  app->add_option("--sketch", sketch, "sketch rows, or 'identity'");
  app->add_option("--batch-exp", cfg.batch_exp, "batching exponent a in (0,1)")
      ->capture_default_str();
  app->add_option("--eps-mp", cfg.eps_mp, "maintenance accuracy (default from n)");
  app->add_option("--max-iters", cfg.max_iters, "iteration cap");
}

bool apply_sketch(const std::string& sketch, ripm::cli::RunConfig& cfg) {
  if (sketch.empty()) return true;
  if (sketch == "identity") {
    cfg.identity_sketch = true;
    return true;
  }
  try {
    std::size_t used = 0;
    const long long rows = std::stoll(sketch, &used);
    if (used != sketch.size() || rows < 1) return false;
    cfg.sketch_rows = rows;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void set_log_level() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("ripm"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("RIPM_LOG_LEVEL")) {
    const std::string s(lvl);
    if (s == "error" || s == "warn" || s == "info" || s == "debug") {
      spdlog::set_level(spdlog::level::from_str(s));
    } else {
      spdlog::warn("ignoring RIPM_LOG_LEVEL='{}'", s);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  set_log_level();
  CLI::App app{"Robust interior point solver"};
  app.require_subcommand(1);

  ripm::cli::RunConfig cfg;
  std::string sketch, instance, out, dir;

  auto* solve = app.add_subcommand("solve", "solve one instance");
  solve->add_option("instance", instance, "instance JSON")->required();
  add_run_flags(solve, cfg, sketch);
  solve->add_option("--log", cfg.log_path, "iteration CSV path");
  solve->add_option("--out,-o", out, "solution path (default <instance>.solution.json)");
  solve->add_flag("--check-oracle", cfg.check_oracle, "cross-check against the dense oracle");

  auto* bench = app.add_subcommand("bench", "solve every instance in a directory");
  bench->add_option("dir", dir, "suite directory")->required();
  add_run_flags(bench, cfg, sketch);
  bench->add_option("--out,-o", out, "summary CSV path (default stdout)");

  std::string kind;
  std::vector<ripm::Index> sizes;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen", "write synthetic instances");
  gen->add_option("kind", kind, "random_lp | l1_regression | quantile")->required();
  gen->add_option("--sizes", sizes, "problem sizes")->required()->expected(1, -1);
  gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
  gen->add_option("--out-dir,-o", dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ripm::cli::InvalidInput;
  }
  if (!apply_sketch(sketch, cfg)) {
    std::cerr << "error: --sketch takes a positive row count or 'identity'\n";
    return ripm::cli::InvalidInput;
  }

  if (*solve) return ripm::cli::solve_command(instance, cfg, out, std::cout);
  if (*bench) {
    if (out.empty()) return ripm::cli::bench_command(dir, cfg, std::cout);
    std::ofstream f(out);
    if (!f) {
      std::cerr << "error: cannot write '" << out << "'\n";
      return ripm::cli::InvalidInput;
    }
    return ripm::cli::bench_command(dir, cfg, f);
  }
  return ripm::cli::gen_command(kind, sizes, gen_seed, dir, std::cout);
}

#include "mmflow/acceptance.hpp"
#include "mmflow/config.hpp"
#include "mmflow/run.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

int do_run(const mmflow::RunConfig& cfg, const std::string& out, int threads) {
  mmflow::RunOptions opt;
  opt.threads = threads;
  opt.out = out;
  const auto start = std::chrono::steady_clock::now();
  const auto rep = mmflow::run(cfg, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  mmflow::write_report(std::cout, rep);
  // Wall-clock stays out of the artifacts so reruns are byte-identical.
  std::fprintf(stderr, "wall-clock: %.2f s, %d thread(s)\n", secs, threads);
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimizing-movements curvature flows on a grid"};
  app.require_subcommand(1);
  std::optional<int> threads;
  std::uint64_t seed = mmflow::AcceptanceOptions{}.seed;
  app.add_option("--threads", threads, "worker threads (default: $MMFLOW_THREADS, else 1)");
  app.add_option("--seed", seed, "seed for the randomized acceptance criteria");

  std::string config, out;
  auto* run = app.add_subcommand("run", "evolve a configuration and write its artifacts");
  run->add_option("--config", config, "configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "output directory")->required();

  std::string name;
  auto* pre = app.add_subcommand("preset", "run a named preset");
  pre->add_option("--name", name, "preset name")->required();
  pre->add_option("--out", out, "output directory")->required();
  auto* list = app.add_subcommand("presets", "list the available presets");

  std::string suite = "acceptance";
  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "run acceptance criteria");
  verify->add_option("--suite", suite, "acceptance or quick")->check(CLI::IsMember({"acceptance", "quick"}));
  verify->add_option("--only", only, "criterion ids to run");

  CLI11_PARSE(app, argc, argv);

  try {
    const int nthreads = mmflow::resolve_threads(threads);
    if (*run) return do_run(mmflow::load_config(config), out, nthreads);
    if (*pre) return do_run(mmflow::preset(name), out, nthreads);
    if (*list) {
      for (const auto& n : mmflow::preset_names()) std::cout << n << '\n';
      return 0;
    }
    if (*verify) {
      mmflow::AcceptanceOptions opt;
      opt.threads = nthreads;
      opt.seed = seed;
      const auto ids = only.empty() ? mmflow::suite_criteria(suite) : only;
      bool all = true;
      for (int id : ids) {
        const auto r = mmflow::run_criterion(id, opt);
        std::cout << mmflow::format_result(r) << std::endl;
        all = all && r.pass;
      }
      return all ? 0 : 1;
    }
  } catch (const mmflow::ConfigError& e) {
    for (const auto& p : e.problems) std::cerr << "config error: " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

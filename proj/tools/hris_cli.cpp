// Command-line front end: scenario runs, closed-form SNR tables and size
// thresholds, scenario validation.
//
// Exit codes: 0 success, 2 scenario validation error, 3 solver
// infeasibility in every trial.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hris/experiments.hpp"
#include "hris/scenario.hpp"

namespace {

int cmd_run(const std::string& scenario_path, const std::vector<std::string>& archs,
            int trials, std::uint64_t seed, bool have_seed, const std::string& out_path,
            int threads, const std::string& trace_path) {
  hris::Scenario sc = hris::validate_scenario(scenario_path);
  if (!archs.empty()) sc.archs = archs;
  if (trials > 0) sc.trials = trials;
  if (have_seed) sc.seed = seed;
  sc.validate();

  const auto t0 = std::chrono::steady_clock::now();
  hris::RunOptions opt;
  opt.threads = threads > 0 ? threads : int(std::thread::hardware_concurrency());
  opt.trace_path = trace_path;
  const std::vector<hris::ResultRow> rows = hris::run_sweep(sc, opt);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string csv = hris::result_csv(rows);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out_path);
    f << csv;
    hris::write_metadata_sidecar(out_path, sc, wall);
  }

  int successes = 0;
  for (const auto& r : rows) successes += r.trials - r.violations;
  return successes == 0 ? 3 : 0;
}

int cmd_asymptotics(const std::string& fig, bool with_mc, const std::string& out_path) {
  hris::FigureParams fp;
  fp.with_mc = with_mc;
  std::vector<hris::FigRow> rows;
  if (fig == "snr_vs_a")
    rows = hris::figure_snr_vs_a(fp);
  else if (fig == "snr_vs_S")
    rows = hris::figure_snr_vs_s(fp);
  else if (fig == "snr_vs_N")
    rows = hris::figure_snr_vs_n(fp);
  else {
    std::cerr << "unknown figure '" << fig << "'\n";
    return 2;
  }
  const std::string csv = hris::figure_csv(rows);
  if (out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out_path);
    f << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid-RIS downlink simulation and EE optimization toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario sweep through the optimizer");
  std::string scenario_path, out_path, trace_path;
  std::vector<std::string> archs;
  int trials = 0, threads = 0, lemma = 3;
  std::uint64_t seed = 0;
  bool with_mc = false;
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--arch", archs, "architecture pairs, e.g. sc/passive fc/sc");
  run->add_option("--trials", trials, "override trial count");
  auto* seed_opt = run->add_option("--seed", seed, "override root seed");
  run->add_option("--out", out_path, "output CSV path (stdout when omitted)");
  run->add_option("--threads", threads, "worker threads (default: hardware)");
  run->add_option("--trace", trace_path, "write the first trial's solver trace CSV");

  auto* asym = app.add_subcommand("asymptotics", "closed-form SNR law tables");
  std::string fig = "snr_vs_a";
  asym->add_option("--fig", fig, "snr_vs_a | snr_vs_S | snr_vs_N")->required();
  asym->add_flag("--mc", with_mc, "append Monte-Carlo oracle rows");
  asym->add_option("--out", out_path, "output CSV path (stdout when omitted)");

  auto* thr = app.add_subcommand("thresholds", "architecture crossover sizes");
  thr->add_option("--lemma", lemma, "3 | 4 | 5 | 6")->required();

  auto* val = app.add_subcommand("validate", "parse and invariant-check a scenario");
  val->add_option("--scenario", scenario_path, "scenario JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, archs, trials, seed, seed_opt->count() > 0,
                     out_path, threads, trace_path);
    if (asym->parsed()) return cmd_asymptotics(fig, with_mc, out_path);
    if (thr->parsed()) {
      hris::FigureParams fp;
      std::cout << hris::thresholds_csv(lemma, fp.params);
      return 0;
    }
    if (val->parsed()) {
      const hris::Scenario sc = hris::validate_scenario(scenario_path);
      std::cout << "ok: " << sc.name << " (M=" << sc.antennas << ", K=" << sc.users
                << ", N=" << sc.n_total << ", a=" << sc.split << ")\n";
      return 0;
    }
  } catch (const hris::ParseError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const hris::UnitError& e) {
    std::cerr << "unit error: " << e.what() << "\n";
    return 2;
  } catch (const hris::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  } catch (const hris::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hris/asymptotics.hpp"
#include "hris/errors.hpp"
#include "hris/metrics.hpp"
#include "hris/rng.hpp"
#include "hris/scenario.hpp"
#include "hris/solver.hpp"
#include "hris/units.hpp"

// Monte-Carlo orchestration over scenarios: per-trial seeding, the work
// pool, streaming aggregation and CSV/JSON export.

namespace hris {

struct ResultRow {
  std::string sweep_variable;
  double sweep_value = 0.0;
  std::string arch;
  int trials = 0;
  double mean_ee = 0.0;
  double stderr_ee = 0.0;
  double mean_sr = 0.0;
  double stderr_sr = 0.0;
  double mean_iters = 0.0;
  int violations = 0;
};

struct TrialOutcome {
  double ee = 0.0;
  double sr = 0.0;
  int iters = 0;
  bool ok = false;
};

/// Mean and standard error of the mean over the successful trials.
struct Aggregate {
  int n = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;
};

inline Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  a.n = static_cast<int>(xs.size());
  if (a.n == 0) return a;
  for (double x : xs) a.mean += x;
  a.mean /= a.n;
  if (a.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stderr_mean = std::sqrt(ss / (a.n - 1) / a.n);
  }
  return a;
}

/// Deterministic index-ordered work pool: results land in preassigned
/// slots, so the output is identical for any thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

struct RunOptions {
  int threads = 1;
  std::string trace_path;  // first trial's solver trace, when non-empty
};

/// One optimizer trial on a pinned scenario point.
inline TrialOutcome run_trial(const Scenario& point, std::uint64_t trial_seed,
                              bool zf_baseline, SolverState* trace_sink = nullptr) {
  TrialOutcome out;
  const HybridRisConfig ris = point.ris_config();
  const PowerParams bs = point.power_params();
  Rng channel_rng(mix_seed(trial_seed, 0x6368u));
  const ChannelSet ch =
      sample_channel_set(point.geometry, point.antennas, point.users, ris.n1(),
                         ris.n2(), point.fading, channel_rng);
  if (zf_baseline) {
    Rng zf_rng(mix_seed(trial_seed, 0x7a66u));
    const ZfResult zf = zf_heuristic(ch, ris, bs, zf_rng);
    const RateAndEe m =
        sum_rate_and_ee(zf.w, ch, zf.phi[0], zf.phi[1], ris, bs, point.sigma_sq);
    out.ee = m.ee;
    out.sr = m.sum_rate;
    out.ok = true;
    return out;
  }
  SolverConfig cfg = point.solver;
  cfg.init_seed = mix_seed(trial_seed, 0x696eu);
  const SolverState st = bca_solve(ch, ris, bs, point.sigma_sq, cfg);
  out.ee = st.eta;
  out.sr = st.sum_rate;
  out.iters = st.outer_iters;
  out.ok = true;
  if (trace_sink) *trace_sink = st;
  return out;
}

inline void write_trace_csv(const std::string& path, const SolverState& st) {
  std::ofstream f(path);
  f << "iteration,g,R,P_total,eta,bs_residual,rs1_residual,rs2_residual\n";
  char line[256];
  for (const auto& r : st.trace) {
    std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g,%.12g,%.3e,%.3e,%.3e\n",
                  r.iter, r.g, r.sum_rate, r.power, r.eta, r.bs_residual,
                  r.rs_residual[0], r.rs_residual[1]);
    f << line;
  }
}

/// Runs trials x sweep points x architectures. Trial seeds mix only
/// (root seed, sweep index, trial index), so every architecture sees the
/// same channel realizations and appending sweep values never perturbs
/// existing rows. Per-trial solver failures count as violations instead
/// of aborting the sweep.
inline std::vector<ResultRow> run_sweep(const Scenario& scenario,
                                        const RunOptions& opt = {}) {
  scenario.validate();
  std::vector<double> values =
      scenario.sweep ? scenario.sweep->values : std::vector<double>{0.0};
  const std::string var = scenario.sweep ? scenario.sweep->variable : "none";
  std::vector<std::string> archs = scenario.archs;
  if (archs.empty())
    archs = {arch_kind_name(scenario.arch_kind[0]) + "/" +
             arch_kind_name(scenario.arch_kind[1])};

  std::vector<ResultRow> rows;
  bool wrote_trace = false;
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const Scenario point_base = scenario.with_sweep_value(values[vi]);
    for (const std::string& arch : archs) {
      Scenario point = point_base;
      point.apply_arch_pair(arch);
      const int runs = scenario.include_zf ? 2 : 1;
      for (int zf = 0; zf < runs; ++zf) {
        std::vector<TrialOutcome> outcomes(scenario.trials);
        parallel_for(scenario.trials, opt.threads, [&](int t) {
          const std::uint64_t trial_seed =
              mix_seed(scenario.seed, static_cast<std::uint64_t>(vi),
                       static_cast<std::uint64_t>(t));
          try {
            outcomes[t] = run_trial(point, trial_seed, zf == 1);
          } catch (const std::exception&) {
            outcomes[t].ok = false;
          }
        });
        if (!wrote_trace && !opt.trace_path.empty() && zf == 0) {
          SolverState st;
          try {
            run_trial(point, mix_seed(scenario.seed, 0, 0), false, &st);
            write_trace_csv(opt.trace_path, st);
            wrote_trace = true;
          } catch (const Error&) {
          }
        }
        ResultRow row;
        row.sweep_variable = var;
        row.sweep_value = values[vi];
        row.arch = (zf == 1 ? "zf:" : "") + arch;
        row.trials = scenario.trials;
        std::vector<double> ees, srs, iters;
        for (const auto& o : outcomes) {
          if (!o.ok) {
            ++row.violations;
            continue;
          }
          ees.push_back(o.ee);
          srs.push_back(o.sr);
          iters.push_back(o.iters);
        }
        const Aggregate ee = aggregate(ees), sr = aggregate(srs), it = aggregate(iters);
        row.mean_ee = ee.mean;
        row.stderr_ee = ee.stderr_mean;
        row.mean_sr = sr.mean;
        row.stderr_sr = sr.stderr_mean;
        row.mean_iters = it.mean;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

inline std::string result_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "sweep_variable,sweep_value,arch,trials,mean_ee,stderr_ee,mean_sr,"
         "stderr_sr,mean_iters,violations\n";
  char line[512];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%.10g,%s,%d,%.10g,%.10g,%.10g,%.10g,%.6g,%d\n",
                  r.sweep_variable.c_str(), r.sweep_value, r.arch.c_str(), r.trials,
                  r.mean_ee, r.stderr_ee, r.mean_sr, r.stderr_sr, r.mean_iters,
                  r.violations);
    out << line;
  }
  return out.str();
}

inline std::string git_describe() {
#if defined(_WIN32)
  return "unknown";
#else
  FILE* p = ::popen("git describe --always --dirty 2>/dev/null", "r");
  if (!p) return "unknown";
  char buf[128] = {0};
  std::string out;
  while (std::fgets(buf, sizeof(buf), p)) out += buf;
  ::pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
#endif
}

/// JSON sidecar next to a CSV: provenance for reproducing the run.
inline void write_metadata_sidecar(const std::string& csv_path,
                                   const Scenario& scenario, double wall_seconds) {
  nlohmann::json meta;
  meta["scenario"] = scenario.name;
  meta["seed"] = scenario.seed;
  meta["trials"] = scenario.trials;
  meta["git_describe"] = git_describe();
  meta["wall_time_s"] = wall_seconds;
  std::ofstream f(csv_path + ".meta.json");
  f << meta.dump(2) << "\n";
}

// ---- Closed-form figure tables -------------------------------------------

struct FigRow {
  std::string architecture;
  double n = 0.0;
  double a_or_s = 0.0;
  double snr_db = 0.0;
  std::string regime;
};

struct FigureParams {
  SisoParams params = SisoParams::symmetric(db_to_linear(-70.0),
                                            dbm_to_watt(-100.0),
                                            dbm_to_watt(-100.0), 2.0);
  bool with_mc = false;
  int mc_n = 1 << 15;
  int mc_trials = 20;
  std::uint64_t mc_seed = 2024;
};

/// SNR of the active/passive hybrid and its two contributions versus the
/// active fraction, against the equivalent active RIS, equal split.
inline std::vector<FigRow> figure_snr_vs_a(const FigureParams& fp, double n = 256.0) {
  const SisoParams& p = fp.params;
  const double pt = p.p_max / 2.0, pr = p.p_max / 2.0;
  std::vector<FigRow> rows;
  const double active_ref = gamma_active(n, pt, pr, p.s1, p.sigma_sq);
  for (int i = 1; i <= 7; ++i) {
    const double a = 0.125 * i;
    const ApSnr ap = gamma_active_passive(n, a, pt, pr, p);
    rows.push_back({"active_passive", n, a, linear_to_db(ap.total), "standard"});
    // linear fraction of the equivalent active RIS's SNR (value column
    // holds the ratio, not dB)
    rows.push_back({"fraction_of_active", n, a, ap.total / active_ref, "ratio_linear"});
    rows.push_back({"active_rs_term", n, a, linear_to_db(ap.active_term), "standard"});
    // figure convention: passive contribution shown against the full budget
    const double passive_fig =
        ap.c * gamma_passive((1.0 - a) * n, p.p_max, p.s2, p.sigma_sq);
    rows.push_back({"passive_rs_term", n, a, linear_to_db(passive_fig), "standard"});
    rows.push_back({"loss_vs_active_db", n, a,
                    linear_to_db(active_ref / ap.total), "standard"});
    if (fp.with_mc) {
      McSetup mc;
      mc.kind = McSetup::Kind::active_passive;
      mc.a = a;
      mc.n = fp.mc_n;
      mc.trials = fp.mc_trials;
      mc.params = p;
      mc.p_t = pt;
      mc.p_r = pr;
      const McResult r = mc_siso_snr(mc, fp.mc_seed);
      rows.push_back({"active_passive", double(fp.mc_n), a,
                      linear_to_db(r.mean_snr), "mc"});
    }
  }
  rows.push_back({"active", n, 1.0, linear_to_db(active_ref), "standard"});
  return rows;
}

/// SNR of the active/active hybrid versus the number of sub-surfaces,
/// against the equivalent active RIS, equal split.
inline std::vector<FigRow> figure_snr_vs_s(const FigureParams& fp, double n = 256.0) {
  const SisoParams& p = fp.params;
  const double pt = p.p_max / 2.0, pr = p.p_max / 2.0;
  std::vector<FigRow> rows;
  const double active_ref = gamma_active(n, pt, pr, p.s1, p.sigma_sq);
  rows.push_back({"active", n, 1.0, linear_to_db(active_ref), "standard"});
  for (int s_count : {2, 4, 8}) {
    const double g =
        gamma_active_active(n, s_count, pt, pr / s_count, p.s1, p.sigma_sq);
    rows.push_back({"active_active", n, double(s_count), linear_to_db(g), "standard"});
    rows.push_back({"loss_vs_active_db", n, double(s_count),
                    linear_to_db(active_ref / g), "standard"});
    rows.push_back({"loss_large_pt_db", n, double(s_count),
                    10.0 * std::log10(double(s_count)), "large_transmit"});
    rows.push_back(
        {"active_active", n, double(s_count),
         linear_to_db(snr_limit_aa_large_reflect(n, s_count, pt, p.s1)),
         "large_reflect"});
    if (fp.with_mc) {
      McSetup mc;
      mc.kind = McSetup::Kind::active_active;
      mc.s_count = s_count;
      mc.n = fp.mc_n - fp.mc_n % s_count;
      mc.trials = fp.mc_trials;
      mc.params = p;
      mc.p_t = pt;
      mc.p_r = pr;
      const McResult r = mc_siso_snr(mc, fp.mc_seed);
      rows.push_back({"active_active", double(mc.n), double(s_count),
                      linear_to_db(r.mean_snr), "mc"});
    }
  }
  return rows;
}

/// SNR of each architecture versus the element count, with the size
/// thresholds where the orderings flip.
inline std::vector<FigRow> figure_snr_vs_n(const FigureParams& fp) {
  const SisoParams& p = fp.params;
  const double pt = p.p_max / 2.0, pr = p.p_max / 2.0;
  std::vector<FigRow> rows;
  for (int i = 1; i <= 4; ++i) {
    const double n = 0.25e6 * i;
    rows.push_back({"passive", n, 0.0,
                    linear_to_db(gamma_passive(n, p.p_max, p.s2, p.sigma_sq)),
                    "standard"});
    rows.push_back({"active", n, 1.0,
                    linear_to_db(gamma_active(n, pt, pr, p.s1, p.sigma_sq)),
                    "standard"});
    for (double a : {0.25, 0.5, 0.75})
      rows.push_back({"active_passive", n, a,
                      linear_to_db(gamma_active_passive(n, a, pt, pr, p).total),
                      "standard"});
    for (int s_count : {2, 4})
      rows.push_back(
          {"active_active", n, double(s_count),
           linear_to_db(gamma_active_active(n, s_count, pt, pr / s_count, p.s1,
                                            p.sigma_sq)),
           "standard"});
  }
  rows.push_back({"threshold_passive_vs_active",
                  n_min_passive_vs_active(pt, p.p_max, pr, p.s1, p.sigma_sq), 0.0,
                  0.0, "threshold"});
  for (double a : {0.25, 0.5, 0.75})
    rows.push_back(
        {"threshold_passive_vs_active_passive",
         n_min_passive_vs_active_passive(a, pt, p.p_max, pr, p.s1, p.sigma_sq), a,
         0.0, "threshold"});
  for (int s_count : {2, 4})
    rows.push_back({"threshold_passive_vs_active_active",
                    n_min_passive_vs_active_active(s_count, p.p_max, p.s1, p.sigma_sq),
                    double(s_count), 0.0, "threshold"});
  return rows;
}

inline std::string figure_csv(const std::vector<FigRow>& rows) {
  std::ostringstream out;
  out << "architecture,N,a_or_S,snr_db,regime\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%s,%.10g,%.10g,%.10g,%s\n",
                  r.architecture.c_str(), r.n, r.a_or_s, r.snr_db, r.regime.c_str());
    out << line;
  }
  return out.str();
}

/// Closed-form size thresholds for the CLI, running-example constants by
/// default.
inline std::string thresholds_csv(int lemma, const SisoParams& p) {
  const double pt = p.p_max / 2.0, pr = p.p_max / 2.0;
  std::ostringstream out;
  out << "lemma,parameter,value\n";
  char line[128];
  const auto emit = [&](int l, double param, double value) {
    std::snprintf(line, sizeof(line), "%d,%.10g,%.10g\n", l, param, value);
    out << line;
  };
  switch (lemma) {
    case 3: {
      emit(3, 1.0, n_min_passive_vs_active(pt, p.p_max, pr, p.s1, p.sigma_sq));
      for (double a : {0.25, 0.5, 0.75})
        emit(3, a,
             n_min_passive_vs_active_passive(a, pt, p.p_max, pr, p.s1, p.sigma_sq));
      break;
    }
    case 4:
      for (int s : {2, 4})
        emit(4, s, n_min_passive_vs_active_active(s, p.p_max, p.s1, p.sigma_sq));
      break;
    case 5:
      for (double a : {0.25, 0.5, 0.75})
        emit(5, a,
             n_min_active_passive_vs_active(a, pt, pr, pt, pr, p, p.s1, p.sigma_sq));
      break;
    case 6:
      for (int s : {2, 4, 8})
        emit(6, s, n_ratio_active_active_vs_active(s, pt, pr, p.s1, p.sigma_sq));
      break;
    default:
      throw InvalidRegime("lemma must be 3, 4, 5 or 6");
  }
  return out.str();
}

}  // namespace hris

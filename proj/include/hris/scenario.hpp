#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hris/architecture.hpp"
#include "hris/channel.hpp"
#include "hris/errors.hpp"
#include "hris/metrics.hpp"
#include "hris/solver.hpp"
#include "hris/units.hpp"

// Scenario files: one JSON document per experiment, dB/dBm at the file
// boundary, everything linear after parsing.

namespace hris {

struct SweepSpec {
  std::string variable;  // D, a, L, N, P_RIS_max_dbw, P_BS_max_dbw, M
  std::vector<double> values;
};

enum class ArchKind { passive, fc, sc };

inline ArchKind parse_arch_kind(const std::string& kind) {
  if (kind == "passive") return ArchKind::passive;
  if (kind == "fc") return ArchKind::fc;
  if (kind == "sc") return ArchKind::sc;
  throw ParseError("unknown architecture '" + kind + "' (want passive, fc or sc)");
}

inline std::string arch_kind_name(ArchKind k) {
  switch (k) {
    case ArchKind::passive: return "passive";
    case ArchKind::fc: return "fc";
    case ArchKind::sc: return "sc";
  }
  return "?";
}

struct Scenario {
  std::string name = "scenario";
  int antennas = 4;  // M
  int users = 2;     // K
  int n_total = 128;
  double split = 0.75;  // a
  ArchKind arch_kind[2] = {ArchKind::sc, ArchKind::passive};
  int partitions[2] = {1, 1};  // L1, L2 (used by sc surfaces)
  double beta_max = std::numeric_limits<double>::infinity();
  Geometry geometry;
  FadingSpec fading = FadingSpec::rician(1.0);
  double sigma_sq = dbm_to_watt(-80.0);
  double delta_sq = dbm_to_watt(-80.0);
  double w_bs = dbw_to_watt(6.0);
  double p_ps = dbm_to_watt(10.0);
  double p_dc = dbm_to_watt(10.0);
  double p_bs_max = dbw_to_watt(9.0);
  double p_rs_max = dbw_to_watt(9.0);
  double xi = 0.909;
  double zeta = 0.909;
  SolverConfig solver;
  int trials = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> archs;  // architecture pairs to run, e.g. "sc/passive"
  bool include_zf = false;
  std::optional<SweepSpec> sweep;

  RsArchitecture surface_arch(int s) const {
    switch (arch_kind[s]) {
      case ArchKind::passive: return RsArchitecture::passive();
      case ArchKind::fc: return RsArchitecture::fc(beta_max);
      case ArchKind::sc: return RsArchitecture::sc(partitions[s], beta_max);
    }
    return RsArchitecture::passive();
  }

  HybridRisConfig ris_config() const {
    HybridRisConfig ris;
    ris.n_total = n_total;
    ris.split = split;
    for (int s = 0; s < 2; ++s) {
      ris.arch[s] = surface_arch(s);
      ris.delta_sq[s] = delta_sq;
      ris.zeta[s] = zeta;
      ris.p_rs_max[s] = p_rs_max;
    }
    ris.p_ps = p_ps;
    ris.p_dc = p_dc;
    return ris;
  }

  PowerParams power_params() const { return {xi, w_bs, p_bs_max}; }

  /// Copy with the sweep variable pinned to one value (no sweep left).
  Scenario with_sweep_value(double v) const {
    Scenario s = *this;
    s.sweep.reset();
    if (!sweep) return s;
    const std::string& var = sweep->variable;
    if (var == "D")
      s.geometry.cluster_center_d = v;
    else if (var == "a")
      s.split = v;
    else if (var == "L")
      s.partitions[0] = s.partitions[1] = static_cast<int>(std::lround(v));
    else if (var == "N")
      s.n_total = static_cast<int>(std::lround(v));
    else if (var == "P_RIS_max_dbw")
      s.p_rs_max = dbw_to_watt(v);
    else if (var == "P_BS_max_dbw")
      s.p_bs_max = dbw_to_watt(v);
    else if (var == "M")
      s.antennas = static_cast<int>(std::lround(v));
    return s;
  }

  /// Applies an architecture-pair token like "sc/passive" or "fc/sc".
  void apply_arch_pair(const std::string& pair) {
    const auto slash = pair.find('/');
    if (slash == std::string::npos)
      throw ParseError("architecture pair must look like 'sc/passive'");
    arch_kind[0] = parse_arch_kind(pair.substr(0, slash));
    arch_kind[1] = parse_arch_kind(pair.substr(slash + 1));
  }

  void validate() const {
    if (trials < 1) throw InvariantViolation("trials must be at least 1");
    if (antennas < 1 || users < 1) throw InvariantViolation("need M >= 1 and K >= 1");
    solver.validate();
    if (sweep) {
      static const char* allowed[] = {"D",           "a",
                                      "L",           "N",
                                      "P_RIS_max_dbw", "P_BS_max_dbw",
                                      "M"};
      bool ok = false;
      for (const char* v : allowed) ok = ok || sweep->variable == v;
      if (!ok)
        throw InvariantViolation("unknown sweep variable '" + sweep->variable + "'");
      if (sweep->values.empty())
        throw InvariantViolation("sweep needs at least one value");
      for (double v : sweep->values) with_sweep_value(v).validate_point();
    } else {
      validate_point();
    }
  }

  void validate_point() const {
    geometry.validate();
    if (antennas < 1) throw InvariantViolation("M must be positive");
    power_params().validate();
    ris_config().validate();
    for (const std::string& pair : archs) {
      Scenario alt = *this;
      alt.archs.clear();
      alt.apply_arch_pair(pair);
      alt.ris_config().validate();
    }
  }
};

namespace detail {

inline double finite_number(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw ParseError("missing key '" + key + "'");
  if (!j[key].is_number()) throw ParseError("key '" + key + "' must be a number");
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) throw UnitError("key '" + key + "' is not finite");
  return v;
}

inline double number_or(const nlohmann::json& j, const std::string& key,
                        double fallback) {
  return j.contains(key) ? finite_number(j, key) : fallback;
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j) {
  Scenario sc;
  try {
    sc.name = j.value("name", sc.name);
    sc.antennas = j.value("M", sc.antennas);
    sc.users = j.value("K", sc.users);
    sc.n_total = j.value("N", sc.n_total);
    sc.split = detail::number_or(j, "a", sc.split);
    sc.arch_kind[0] = parse_arch_kind(j.value("arch1", "sc"));
    sc.arch_kind[1] = parse_arch_kind(j.value("arch2", "passive"));
    sc.partitions[0] = j.value("L1", 1);
    sc.partitions[1] = j.value("L2", 1);
    if (j.contains("beta_max") && !j["beta_max"].is_null())
      sc.beta_max = detail::finite_number(j, "beta_max");
    if (j.contains("geometry")) {
      const auto& g = j["geometry"];
      if (g.contains("bs")) sc.geometry.bs = {g["bs"][0], g["bs"][1]};
      if (g.contains("ris")) sc.geometry.ris = {g["ris"][0], g["ris"][1]};
      sc.geometry.cluster_center_d = detail::number_or(g, "D", 300.0);
      sc.geometry.cluster_radius = detail::number_or(g, "r", 5.0);
    }
    if (j.contains("fading")) {
      const auto& f = j["fading"];
      const std::string kind = f.value("kind", "rician");
      if (kind == "rayleigh")
        sc.fading = FadingSpec::rayleigh();
      else if (kind == "pure_los")
        sc.fading = FadingSpec::pure_los();
      else if (kind == "rician")
        sc.fading =
            FadingSpec::rician(db_to_linear(detail::number_or(f, "kappa_db", 0.0)));
      else
        throw ParseError("unknown fading kind '" + kind + "'");
    }
    if (j.contains("noise")) {
      sc.sigma_sq = dbm_to_watt(detail::finite_number(j["noise"], "sigma_sq_dbm"));
      sc.delta_sq = dbm_to_watt(detail::finite_number(j["noise"], "delta_sq_dbm"));
    }
    if (j.contains("power")) {
      const auto& p = j["power"];
      sc.w_bs = dbw_to_watt(detail::number_or(p, "W_BS_dbw", 6.0));
      sc.p_ps = dbm_to_watt(detail::number_or(p, "P_PS_dbm", 10.0));
      sc.p_dc = dbm_to_watt(detail::number_or(p, "P_DC_dbm", 10.0));
      sc.p_bs_max = dbw_to_watt(detail::number_or(p, "P_BS_max_dbw", 9.0));
      sc.p_rs_max = dbw_to_watt(detail::number_or(p, "P_RIS_max_dbw", 9.0));
      sc.xi = detail::number_or(p, "xi", 0.909);
      sc.zeta = detail::number_or(p, "zeta", 0.909);
    }
    if (j.contains("solver")) {
      const auto& s = j["solver"];
      sc.solver.t_max = s.value("T_max", sc.solver.t_max);
      sc.solver.bca_tol = s.value("bca_tol", sc.solver.bca_tol);
      sc.solver.dinkelbach_tol = s.value("dinkelbach_tol", sc.solver.dinkelbach_tol);
      sc.solver.multiplier_tol = s.value("multiplier_tol", sc.solver.multiplier_tol);
      sc.solver.mm_iters = s.value("mm_iters", sc.solver.mm_iters);
      sc.solver.sc_projection = s.value("sc_projection", sc.solver.sc_projection);
      const std::string lq = s.value("lambda_q_mode", "max_eigenvalue");
      if (lq == "max_eigenvalue")
        sc.solver.lambda_q = SolverConfig::LambdaQ::max_eigenvalue;
      else if (lq == "trace")
        sc.solver.lambda_q = SolverConfig::LambdaQ::trace;
      else
        throw ParseError("unknown lambda_q_mode '" + lq + "'");
      const std::string eu = s.value("eta_update", "per_pass");
      if (eu == "per_pass")
        sc.solver.eta_update = SolverConfig::EtaUpdate::per_pass;
      else if (eu == "per_convergence")
        sc.solver.eta_update = SolverConfig::EtaUpdate::per_convergence;
      else
        throw ParseError("unknown eta_update '" + eu + "'");
      sc.solver.inner_passes = s.value("inner_passes", sc.solver.inner_passes);
    }
    sc.trials = j.value("trials", sc.trials);
    sc.seed = j.value("seed", sc.seed);
    sc.include_zf = j.value("include_zf", false);
    if (j.contains("archs")) sc.archs = j["archs"].get<std::vector<std::string>>();
    if (j.contains("sweep") && !j["sweep"].is_null()) {
      SweepSpec sw;
      sw.variable = j["sweep"].value("variable", "");
      sw.values = j["sweep"]["values"].get<std::vector<double>>();
      sc.sweep = sw;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scenario: ") + e.what());
  }
  sc.validate();
  return sc;
}

/// Loads, unit-converts and invariant-checks a scenario file.
inline Scenario validate_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(j);
}

}  // namespace hris

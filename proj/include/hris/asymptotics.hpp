#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "hris/errors.hpp"
#include "hris/rng.hpp"

// Large-N SNR laws for single-user SISO setups with a blocked direct link
// and one shared power amplifier per active sub-surface, the size
// thresholds where one architecture overtakes another, and a Monte-Carlo
// oracle that simulates the optimized SISO system directly.
//
// Convention: every radiated budget here is a power in watts and every
// variance is linear. Under the equal-split rule the transmit budget is
// P_max/2 and the reflect budget P_max/2 (split evenly across active
// sub-surfaces); a purely passive surface gets the whole budget P_max.

namespace hris {

inline constexpr double kPiSq = std::numbers::pi * std::numbers::pi;

/// Per-surface channel statistics: BS->RS and RS->user variances plus
/// amplification-noise power.
struct SurfaceStats {
  double rho_f_sq = 0.0;
  double rho_g_sq = 0.0;
  double delta_sq = 0.0;
};

struct SisoParams {
  SurfaceStats s1, s2;
  double sigma_sq = 0.0;
  double p_max = 0.0;

  static SisoParams symmetric(double rho_sq, double delta_sq, double sigma_sq,
                              double p_max) {
    return {{rho_sq, rho_sq, delta_sq}, {rho_sq, rho_sq, delta_sq}, sigma_sq, p_max};
  }
};

/// Active sub-surface with n elements, shared amplifier, transmit budget
/// p_t and reflect budget p_r; grows linearly in n.
inline double gamma_active(double n, double p_t, double p_r, const SurfaceStats& s,
                           double sigma_sq) {
  const double den = p_r * s.delta_sq * s.rho_f_sq +
                     4.0 * p_t * sigma_sq * s.rho_g_sq + 4.0 * sigma_sq * s.delta_sq;
  return n * p_t * p_r * kPiSq * s.rho_f_sq * s.rho_g_sq / (16.0 * den);
}

/// Passive sub-surface with n elements; grows quadratically in n.
inline double gamma_passive(double n, double p_t, const SurfaceStats& s,
                            double sigma_sq) {
  return n * n * p_t * kPiSq * s.rho_f_sq * s.rho_g_sq / (16.0 * sigma_sq);
}

struct ApSnr {
  double total = 0.0;
  double active_term = 0.0;   // gamma_a(aN)
  double passive_term = 0.0;  // c * gamma_p((1-a)N, p_t)
  double c = 0.0;
};

/// Active/passive hybrid: exact split into the active contribution and a
/// damped passive contribution, c < 1.
inline ApSnr gamma_active_passive(double n, double a, double p_t, double p_r1,
                                  const SisoParams& p) {
  ApSnr out;
  const double den = p_r1 * p.s1.delta_sq * p.s1.rho_f_sq +
                     4.0 * p_t * p.sigma_sq * p.s1.rho_g_sq +
                     4.0 * p.sigma_sq * p.s1.delta_sq;
  out.c = 4.0 * (p_t * p.s1.rho_g_sq + p.s1.delta_sq) * p.sigma_sq / den;
  out.active_term = gamma_active(a * n, p_t, p_r1, p.s1, p.sigma_sq);
  out.passive_term = out.c * gamma_passive((1.0 - a) * n, p_t, p.s2, p.sigma_sq);
  out.total = out.active_term + out.passive_term;
  return out;
}

/// Single-expression form of the active/passive law, kept as an
/// independent algebraic route for the decomposition identity test.
inline double gamma_active_passive_direct(double n, double a, double p_t, double p_r1,
                                          const SisoParams& p) {
  const double n1 = a * n;
  const double n2 = (1.0 - a) * n;
  const double num =
      p_t * kPiSq *
      (p_r1 * p.s1.rho_f_sq * p.s1.rho_g_sq * n1 +
       4.0 * p.s2.rho_f_sq * p.s2.rho_g_sq * (p_t * p.s1.rho_g_sq + p.s1.delta_sq) * n2 * n2);
  const double den = 16.0 * (p_r1 * p.s1.delta_sq * p.s1.rho_f_sq +
                             4.0 * p_t * p.sigma_sq * p.s1.rho_g_sq +
                             4.0 * p.sigma_sq * p.s1.delta_sq);
  return num / den;
}

/// Active/active hybrid with per-surface stats and a common per-surface
/// reflect budget p_r_each; n/S elements per sub-surface.
inline double gamma_active_active(double n, const std::vector<SurfaceStats>& surfaces,
                                  double p_t, double p_r_each, double sigma_sq) {
  const int s_count = static_cast<int>(surfaces.size());
  if (s_count < 1) throw InvalidArchitecture("need at least one sub-surface");
  double acc = 0.0;
  for (const auto& s : surfaces)
    acc += gamma_active(n / s_count, p_t, p_r_each, s, sigma_sq);
  return acc;
}

inline double gamma_active_active(double n, int s_count, double p_t, double p_r_each,
                                  const SurfaceStats& sym, double sigma_sq) {
  return gamma_active_active(n, std::vector<SurfaceStats>(s_count, sym), p_t,
                             p_r_each, sigma_sq);
}

// ---- Limiting regimes -------------------------------------------------

enum class LimitRegime {
  ap_large_reflect,   // reflect budget -> infinity, active/passive
  ap_large_transmit,  // transmit budget -> infinity, active/passive
  aa_large_transmit,  // transmit budget -> infinity, active/active
  aa_large_reflect,   // reflect budget -> infinity, active/active
};

/// a * N-element active bound, reflect budget unbounded.
inline double snr_limit_ap_large_reflect(double n, double a, double p_t,
                                         const SurfaceStats& s1) {
  return a * n * p_t * kPiSq * s1.rho_g_sq / (16.0 * s1.delta_sq);
}

/// Passive remainder dominates: (1-a)^2 quadratic law.
inline double snr_limit_ap_large_transmit(double n, double a, double p_t,
                                          const SurfaceStats& s2, double sigma_sq) {
  return (1.0 - a) * (1.0 - a) * gamma_passive(n, p_t, s2, sigma_sq);
}

/// 1/S of the equivalent active bound; p_r_total is the whole reflect
/// budget, shared S ways.
inline double snr_limit_aa_large_transmit(double n, int s_count, double p_r_total,
                                          const std::vector<SurfaceStats>& surfaces,
                                          double sigma_sq) {
  double acc = 0.0;
  for (const auto& s : surfaces)
    acc += n * p_r_total * kPiSq * s.rho_f_sq / (64.0 * sigma_sq * s_count);
  return acc / s_count;
}

inline double snr_limit_aa_large_transmit(double n, int s_count, double p_r_total,
                                          const SurfaceStats& sym, double sigma_sq) {
  return snr_limit_aa_large_transmit(n, s_count, p_r_total,
                                     std::vector<SurfaceStats>(s_count, sym), sigma_sq);
}

/// Independent of S; equals the active-surface large-reflect bound.
inline double snr_limit_aa_large_reflect(double n, int s_count, double p_t,
                                         const std::vector<SurfaceStats>& surfaces) {
  double acc = 0.0;
  for (const auto& s : surfaces)
    acc += n * p_t * kPiSq * s.rho_g_sq / (16.0 * s.delta_sq);
  return acc / s_count;
}

inline double snr_limit_aa_large_reflect(double n, int s_count, double p_t,
                                         const SurfaceStats& sym) {
  return snr_limit_aa_large_reflect(n, s_count, p_t,
                                    std::vector<SurfaceStats>(s_count, sym));
}

struct LimitArgs {
  double n = 0.0;
  double a = 0.5;      // ap regimes
  int s_count = 2;     // aa regimes
  double p_t = 0.0;    // transmit budget where finite
  double p_r = 0.0;    // total reflect budget where finite
  SurfaceStats stats;  // symmetric surface statistics
  double sigma_sq = 0.0;
};

inline double limit_snr(LimitRegime regime, const LimitArgs& args) {
  switch (regime) {
    case LimitRegime::ap_large_reflect:
      return snr_limit_ap_large_reflect(args.n, args.a, args.p_t, args.stats);
    case LimitRegime::ap_large_transmit:
      return snr_limit_ap_large_transmit(args.n, args.a, args.p_t, args.stats,
                                         args.sigma_sq);
    case LimitRegime::aa_large_transmit:
      return snr_limit_aa_large_transmit(args.n, args.s_count, args.p_r, args.stats,
                                         args.sigma_sq);
    case LimitRegime::aa_large_reflect:
      return snr_limit_aa_large_reflect(args.n, args.s_count, args.p_t, args.stats);
  }
  throw InvalidRegime("unknown limiting regime");
}

// ---- Size thresholds ---------------------------------------------------

/// Elements beyond which a passive RIS with transmit budget p_t_passive
/// outperforms an active RIS with budgets (p_t_active, p_r).
inline double n_min_passive_vs_active(double p_t_active, double p_t_passive,
                                      double p_r, const SurfaceStats& s,
                                      double sigma_sq) {
  const double den = p_r * s.delta_sq * s.rho_f_sq +
                     4.0 * p_t_active * sigma_sq * s.rho_g_sq +
                     4.0 * sigma_sq * s.delta_sq;
  return (p_t_active / p_t_passive) * p_r * sigma_sq / den;
}

/// Passive vs active/passive with active fraction a: the threshold scales
/// by a (active contribution dominates the hybrid in the standard regime).
inline double n_min_passive_vs_active_passive(double a, double p_t_active,
                                              double p_t_passive, double p_r,
                                              const SurfaceStats& s, double sigma_sq) {
  return a * n_min_passive_vs_active(p_t_active, p_t_passive, p_r, s, sigma_sq);
}

/// Passive (budget p_max) vs active/active with S sub-surfaces under the
/// equal-split rule.
inline double n_min_passive_vs_active_active(int s_count, double p_max,
                                             const SurfaceStats& s, double sigma_sq) {
  const double den = 2.0 * p_max * s.delta_sq * s.rho_f_sq +
                     8.0 * s_count * sigma_sq * (p_max * s.rho_g_sq + 2.0 * s.delta_sq);
  return sigma_sq * p_max / den;
}

/// Active/passive (fraction a, budgets p_t_ap / p_r1) vs an active RIS
/// with the same element count and budgets (p_t_a, p_r).
inline double n_min_active_passive_vs_active(double a, double p_t_ap, double p_r1,
                                             double p_t_a, double p_r,
                                             const SisoParams& p,
                                             const SurfaceStats& active_rs,
                                             double sigma_sq) {
  const double d_ap = p_r1 * p.s1.delta_sq * p.s1.rho_f_sq +
                      4.0 * p_t_ap * sigma_sq * p.s1.rho_g_sq +
                      4.0 * sigma_sq * p.s1.delta_sq;
  const double d_a = p_r * active_rs.delta_sq * active_rs.rho_f_sq +
                     4.0 * p_t_a * sigma_sq * active_rs.rho_g_sq +
                     4.0 * sigma_sq * active_rs.delta_sq;
  const double num = p_t_a * p_r * active_rs.rho_f_sq * active_rs.rho_g_sq * d_ap -
                     a * p_t_ap * p_r1 * p.s1.rho_f_sq * p.s1.rho_g_sq * d_a;
  const double den = 4.0 * (1.0 - a) * (1.0 - a) * p_t_ap * p.s2.rho_f_sq *
                     p.s2.rho_g_sq * (p_t_ap * p.s1.rho_g_sq + p.s1.delta_sq) * d_a;
  return num / den;
}

/// Element-count multiplier for an S-way active/active RIS to match an
/// active RIS with n_a elements and the full reflect budget.
inline double n_ratio_active_active_vs_active(int s_count, double p_t, double p_r,
                                              const SurfaceStats& s, double sigma_sq) {
  const double base = 4.0 * sigma_sq * (p_t * s.rho_g_sq + s.delta_sq);
  return (p_r * s.delta_sq * s.rho_f_sq + s_count * base) /
         (p_r * s.delta_sq * s.rho_f_sq + base);
}

// ---- Pure line-of-sight variants ----------------------------------------

/// LoS active/passive law under the equal-split rule (no pi^2/16 fading
/// average; scaling in N unchanged).
inline double gamma_los_active_passive(double n, double a, const SisoParams& p) {
  const double pm = p.p_max;
  const double active =
      a * n * pm * pm * p.s1.rho_f_sq * p.s1.rho_g_sq /
      (4.0 * (pm * p.s1.delta_sq * p.s1.rho_f_sq + pm * p.sigma_sq * p.s1.rho_g_sq +
              2.0 * p.sigma_sq * p.s1.delta_sq));
  const double passive = (1.0 - a) * (1.0 - a) * n * n * pm * p.s2.rho_f_sq *
                         p.s2.rho_g_sq / (8.0 * p.sigma_sq);
  return active + passive;
}

inline double gamma_los_active_active(double n, int s_count,
                                      const std::vector<SurfaceStats>& surfaces,
                                      double sigma_sq, double p_max) {
  double acc = 0.0;
  for (const auto& s : surfaces)
    acc += p_max * p_max * s.rho_f_sq * s.rho_g_sq /
           (4.0 * (p_max * s.delta_sq * s.rho_f_sq +
                   s_count * p_max * sigma_sq * s.rho_g_sq +
                   2.0 * s_count * sigma_sq * s.delta_sq));
  return n / s_count * acc;
}

inline double gamma_los_active_active(double n, int s_count, const SurfaceStats& sym,
                                      double sigma_sq, double p_max) {
  return gamma_los_active_active(n, s_count,
                                 std::vector<SurfaceStats>(s_count, sym), sigma_sq,
                                 p_max);
}

// ---- Monte-Carlo SISO oracle --------------------------------------------

struct McSetup {
  enum class Kind { active_passive, active_active, passive_only };
  Kind kind = Kind::active_passive;
  double a = 0.5;   // active fraction (active_passive)
  int s_count = 2;  // sub-surfaces (active_active)
  int n = 1 << 13;  // total elements
  int trials = 20;
  SisoParams params;  // symmetric stats are taken from s1 for S > 2
  double p_t = 0.0;   // transmit budget
  double p_r = 0.0;   // total reflect budget (split across active RSs)
};

struct McResult {
  double mean_snr = 0.0;
  double stderr_snr = 0.0;
};

namespace detail {

// Draws |h| for one Rayleigh entry pair and accumulates the sums the
// optimal SISO solution depends on: sum |f_n||g_n|, sum |f_n|^2, sum |g_n|^2.
struct RayleighSums {
  double fg = 0.0, ff = 0.0, gg = 0.0;
};

inline RayleighSums draw_surface(int n, double rho_f_sq, double rho_g_sq, Rng& rng) {
  RayleighSums s;
  for (int i = 0; i < n; ++i) {
    const double fa = std::abs(rng.cgaussian(rho_f_sq));
    const double ga = std::abs(rng.cgaussian(rho_g_sq));
    s.fg += fa * ga;
    s.ff += fa * fa;
    s.gg += ga * ga;
  }
  return s;
}

// Per-surface SNR term of the optimized system: transmit amplitude
// w = sqrt(p_t), phases aligned, shared amplifier gain set to half the
// budget-saturating value (the gain convention the closed-form laws
// correspond to).
inline double active_term(const RayleighSums& s, int n, double p_t, double p_r,
                          double delta_sq, double sigma_sq) {
  const double beta_sq = 0.25 * n * p_r / (p_t * s.gg + n * delta_sq);
  const double sig = beta_sq * s.fg * s.fg * p_t;
  const double noise = beta_sq * s.ff * delta_sq + n * sigma_sq;
  return sig / noise;
}

}  // namespace detail

/// Simulates the optimal-solution SISO system on random Rayleigh draws and
/// returns the trial mean and standard error of the realized SNR. The
/// realized SNR is evaluated per surface (no inter-surface cross term),
/// mirroring the decomposition the closed-form laws describe.
inline McResult mc_siso_snr(const McSetup& cfg, std::uint64_t seed) {
  if (cfg.trials < 1) throw InvariantViolation("need at least one trial");
  std::vector<double> snr(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t), 0x6d63u));
    double value = 0.0;
    switch (cfg.kind) {
      case McSetup::Kind::active_passive: {
        const int n1 = static_cast<int>(std::lround(cfg.a * cfg.n));
        const int n2 = cfg.n - n1;
        const auto s1 =
            detail::draw_surface(n1, cfg.params.s1.rho_f_sq, cfg.params.s1.rho_g_sq, rng);
        const auto s2 =
            detail::draw_surface(n2, cfg.params.s2.rho_f_sq, cfg.params.s2.rho_g_sq, rng);
        const double beta_sq =
            0.25 * n1 * cfg.p_r / (cfg.p_t * s1.gg + n1 * cfg.params.s1.delta_sq);
        const double den =
            beta_sq * s1.ff * cfg.params.s1.delta_sq + n1 * cfg.params.sigma_sq;
        value = (beta_sq * s1.fg * s1.fg + n1 * s2.fg * s2.fg) * cfg.p_t / den;
        break;
      }
      case McSetup::Kind::active_active: {
        const int per = cfg.n / cfg.s_count;
        const double p_r_each = cfg.p_r / cfg.s_count;
        for (int s = 0; s < cfg.s_count; ++s) {
          const auto& st = (s == 1 && cfg.s_count == 2) ? cfg.params.s2 : cfg.params.s1;
          const auto sums = detail::draw_surface(per, st.rho_f_sq, st.rho_g_sq, rng);
          value += detail::active_term(sums, per, cfg.p_t, p_r_each, st.delta_sq,
                                       cfg.params.sigma_sq);
        }
        break;
      }
      case McSetup::Kind::passive_only: {
        const auto sums =
            detail::draw_surface(cfg.n, cfg.params.s1.rho_f_sq, cfg.params.s1.rho_g_sq, rng);
        value = sums.fg * sums.fg * cfg.p_t / cfg.params.sigma_sq;
        break;
      }
    }
    snr[t] = value;
  }
  McResult out;
  for (double v : snr) out.mean_snr += v;
  out.mean_snr /= cfg.trials;
  if (cfg.trials > 1) {
    double var = 0.0;
    for (double v : snr) var += (v - out.mean_snr) * (v - out.mean_snr);
    out.stderr_snr = std::sqrt(var / (cfg.trials - 1) / cfg.trials);
  }
  return out;
}

}  // namespace hris

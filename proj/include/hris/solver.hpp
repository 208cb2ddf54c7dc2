#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "hris/architecture.hpp"
#include "hris/channel.hpp"
#include "hris/errors.hpp"
#include "hris/metrics.hpp"
#include "hris/rng.hpp"

// Joint transmit-precoding / RIS-beamforming energy-efficiency maximizer.
//
// Outer loop: Dinkelbach refresh eta = R/P once per pass. Inner pass:
// block-coordinate ascent on the transformed objective
//
//   g = -eta*P + sum_k [ ln(1+mu_k) - mu_k + 2 sqrt(1+mu_k) rho_k ]
//       - sum_k |nu_k|^2 ( sum_i |h_k^H w_i|^2 + amplification noise + sigma^2 )
//
// over the blocks (mu, nu) -> w -> phi_1 -> phi_2, with rho_k =
// Re{conj(nu_k) h_k^H w_k}. Rates inside the solver are nats (g is a
// natural-log transform); the public state reports bps/Hz. Every quadratic
// block is assembled from g directly, and the multiplier searches return
// the feasible bracket endpoint so iterates never leave the feasible set.

namespace hris {

struct SolverConfig {
  int t_max = 50;
  double bca_tol = 1e-6;  // MM objective stall tolerance
  double dinkelbach_tol = 1e-4;
  double multiplier_tol = 1e-8;
  int mm_iters = 200;
  enum class LambdaQ { max_eigenvalue, trace };
  LambdaQ lambda_q = LambdaQ::max_eigenvalue;
  /// per_pass refreshes eta after every block cycle; per_convergence runs
  /// block cycles at fixed eta until g stalls before each refresh.
  enum class EtaUpdate { per_pass, per_convergence };
  EtaUpdate eta_update = EtaUpdate::per_pass;
  int inner_passes = 30;  // per_convergence cap on cycles per eta value
  bool sc_projection = true;
  bool record_block_objectives = false;
  std::uint64_t init_seed = 1;

  void validate() const {
    if (t_max < 1 || mm_iters < 1 || inner_passes < 1)
      throw InvariantViolation("iteration caps must be at least 1");
    if (bca_tol <= 0.0 || dinkelbach_tol <= 0.0 || multiplier_tol <= 0.0)
      throw InvariantViolation("tolerances must be positive");
  }
};

struct AuxVars {
  Eigen::VectorXd mu;
  Eigen::VectorXcd nu;
};

struct BcaState {
  PrecoderStack w;  // M x K
  std::array<Eigen::VectorXcd, 2> phi;
  AuxVars aux;
};

/// Validated problem bundle; keeps a pointer to the caller-owned channels.
struct BcaContext {
  const ChannelSet* ch = nullptr;
  HybridRisConfig ris;
  PowerParams bs;
  double sigma_sq = 0.0;
  double w_budget = 0.0;               // xi (P_BS_max - W_BS)
  std::array<double, 2> phi_budget{};  // zeta_s (P_s_max - W_rs), active only
  std::array<bool, 2> active{};

  static BcaContext make(const ChannelSet& ch, const HybridRisConfig& ris,
                         const PowerParams& bs, double sigma_sq) {
    ris.validate();
    bs.validate();
    if (!ris.arch[0].active())
      throw InvalidArchitecture("first sub-surface must be active");
    if (ch.users() < 1 || ch.antennas() < 1) throw ShapeError("empty channel set");
    if (ch.surface_elements(0) != ris.n1() || ch.surface_elements(1) != ris.n2())
      throw ShapeError("channel set does not match the element split");
    BcaContext ctx;
    ctx.ch = &ch;
    ctx.ris = ris;
    ctx.bs = bs;
    ctx.sigma_sq = sigma_sq;
    ctx.w_budget = bs.transmit_budget();
    if (ctx.w_budget <= 0.0)
      throw InfeasibleBudget("BS radiated budget is non-positive");
    for (int s = 0; s < 2; ++s) {
      ctx.active[s] = ris.arch[s].active();
      if (ctx.active[s]) {
        ctx.phi_budget[s] = ris.reflect_budget(s);
        if (ctx.phi_budget[s] <= 0.0)
          throw InfeasibleBudget("surface radiated budget is non-positive");
      }
    }
    return ctx;
  }

  int users() const { return ch->users(); }
  int antennas() const { return ch->antennas(); }
  int elements(int s) const { return ch->surface_elements(s); }
};

/// Quantities every block update reads, refreshed after each block.
struct BcaWorkspace {
  std::vector<Eigen::VectorXcd> h;     // effective channels
  Eigen::MatrixXcd hw;                 // (k,i) -> h_k^H w_i
  Eigen::MatrixXcd alpha;              // (k,i) -> g_k^H w_i
  std::array<Eigen::MatrixXcd, 2> pi;  // G_s * w
  Eigen::VectorXd user_noise;          // per-user amplification noise at RX
};

inline BcaWorkspace precompute(const BcaContext& ctx, const BcaState& st) {
  const auto& ch = *ctx.ch;
  const int k_count = ctx.users();
  BcaWorkspace ws;
  ws.h.resize(k_count);
  ws.hw.resize(k_count, k_count);
  ws.alpha.resize(k_count, k_count);
  for (int s = 0; s < 2; ++s) ws.pi[s] = ch.G[s] * st.w;
  ws.user_noise = Eigen::VectorXd::Zero(k_count);
  for (int k = 0; k < k_count; ++k) {
    ws.h[k] = effective_channel(k, ch, st.phi[0], st.phi[1]);
    ws.hw.row(k) = ws.h[k].adjoint() * st.w;
    ws.alpha.row(k) = ch.g[k].adjoint() * st.w;
    for (int s = 0; s < 2; ++s)
      if (ctx.active[s])
        ws.user_noise[k] +=
            surface_noise_at_user(ch.f[k][s], st.phi[s], ctx.ris.delta_sq[s]);
  }
  return ws;
}

/// Total power consumption at the current point.
inline double total_power(const BcaContext& ctx, const BcaState& st) {
  return tpc(st.w, st.phi[0], st.phi[1], *ctx.ch, ctx.ris, ctx.bs).total();
}

/// Sum rate in nats/Hz.
inline double sum_rate_nats(const BcaContext& ctx, const BcaWorkspace& ws) {
  double r = 0.0;
  for (int k = 0; k < ctx.users(); ++k) {
    double interference = 0.0;
    for (int i = 0; i < ctx.users(); ++i)
      if (i != k) interference += std::norm(ws.hw(k, i));
    r += std::log1p(std::norm(ws.hw(k, k)) /
                    (interference + ws.user_noise[k] + ctx.sigma_sq));
  }
  return r;
}

/// The transformed objective g at the given point (eta in nats).
inline double transformed_objective(const BcaContext& ctx, const BcaWorkspace& ws,
                                    const BcaState& st, double eta_nats) {
  double g = -eta_nats * total_power(ctx, st);
  for (int k = 0; k < ctx.users(); ++k) {
    const double mu_bar = 1.0 + st.aux.mu[k];
    const double rho = std::real(std::conj(st.aux.nu[k]) * ws.hw(k, k));
    double denom_terms = ws.user_noise[k] + ctx.sigma_sq;
    for (int i = 0; i < ctx.users(); ++i) denom_terms += std::norm(ws.hw(k, i));
    g += std::log(mu_bar) - st.aux.mu[k] + 2.0 * std::sqrt(mu_bar) * rho -
         std::norm(st.aux.nu[k]) * denom_terms;
  }
  return g;
}

/// f(w, phi) = R - eta P with the rate in bps/Hz; zero at the Dinkelbach
/// fixed point.
inline double dinkelbach_objective(const BcaContext& ctx, const BcaState& st,
                                   double eta_bits) {
  const BcaWorkspace ws = precompute(ctx, st);
  return sum_rate_nats(ctx, ws) / std::numbers::ln2 - eta_bits * total_power(ctx, st);
}

// ---- Auxiliary block ------------------------------------------------------

/// Closed-form conditional maximizers of g in mu then nu.
inline void update_aux(const BcaContext& ctx, const BcaWorkspace& ws, BcaState& st) {
  const int k_count = ctx.users();
  for (int k = 0; k < k_count; ++k) {
    const double rho = std::real(std::conj(st.aux.nu[k]) * ws.hw(k, k));
    st.aux.mu[k] = rho > 0.0 ? 0.5 * rho * (rho + std::sqrt(rho * rho + 4.0)) : 0.0;
  }
  for (int k = 0; k < k_count; ++k) {
    double denom = ws.user_noise[k] + ctx.sigma_sq;
    for (int i = 0; i < k_count; ++i) denom += std::norm(ws.hw(k, i));
    st.aux.nu[k] = std::sqrt(1.0 + st.aux.mu[k]) * ws.hw(k, k) / denom;
  }
}

// ---- Precoder block -------------------------------------------------------

namespace detail {

/// Hermitian solve of A x = b with an eigendecomposition fallback for the
/// semidefinite corner cases (first pass runs with eta = 0).
inline Eigen::MatrixXcd hermitian_solve(const Eigen::MatrixXcd& a,
                                        const Eigen::MatrixXcd& b) {
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(a);
  if (ldlt.info() == Eigen::Success) {
    Eigen::MatrixXcd x = ldlt.solve(b);
    if (x.allFinite() && (a * x - b).norm() <= 1e-8 * b.norm() + 1e-300) return x;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
  const Eigen::VectorXd& d = eig.eigenvalues();
  const double cutoff = std::max(d.cwiseAbs().maxCoeff(), 1.0e-300) * 1e-13;
  Eigen::MatrixXcd y = eig.eigenvectors().adjoint() * b;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    y.row(i) = (d[i] > cutoff) ? (y.row(i) / d[i]).eval() : (y.row(i) * 0.0).eval();
  return eig.eigenvectors() * y;
}

inline Eigen::VectorXcd to_complex(const Eigen::VectorXd& v) {
  return v.cast<std::complex<double>>();
}

}  // namespace detail

/// Shared per-user block data of the precoder sub-problem: maximize
/// sum_k Re{u_k^H w_k} - w_k^H S w_k subject to ||w||_F^2 <= w_budget and
/// sum_k w_k^H T_s w_k <= rs_budget[s] for each active surface.
struct PrecoderQuadratics {
  Eigen::MatrixXcd s_blk;                 // M x M, shared across users
  std::array<Eigen::MatrixXcd, 2> t_blk;  // reflect forms, active surfaces
  Eigen::MatrixXcd u;                     // M x K
  std::vector<int> constrained;           // active surface indices
  std::array<double, 2> rs_budget{0.0, 0.0};

  double objective(const PrecoderStack& w) const {
    double obj = 0.0;
    for (int k = 0; k < w.cols(); ++k)
      obj += std::real(u.col(k).dot(w.col(k))) -
             std::real(w.col(k).dot(s_blk * w.col(k)));
    return obj;
  }
};

inline PrecoderQuadratics assemble_precoder_quadratics(const BcaContext& ctx,
                                                       const BcaWorkspace& ws,
                                                       const BcaState& st,
                                                       double eta_nats) {
  const auto& ch = *ctx.ch;
  const int m = ctx.antennas();
  const int k_count = ctx.users();
  PrecoderQuadratics out;
  out.s_blk = (eta_nats / ctx.bs.xi) * Eigen::MatrixXcd::Identity(m, m);
  for (int s = 0; s < 2; ++s) {
    if (!ctx.active[s]) continue;
    const Eigen::VectorXcd amp_sq = detail::to_complex(st.phi[s].cwiseAbs2());
    out.t_blk[s] = ch.G[s].adjoint() * amp_sq.asDiagonal() * ch.G[s];
    out.s_blk += (eta_nats / ctx.ris.zeta[s]) * out.t_blk[s];
    out.rs_budget[s] =
        ctx.phi_budget[s] - ctx.ris.delta_sq[s] * st.phi[s].squaredNorm();
    if (out.rs_budget[s] <= 0.0)
      throw InfeasibleBudget("amplified noise exhausts the surface budget");
    out.constrained.push_back(s);
  }
  for (int k = 0; k < k_count; ++k)
    out.s_blk += std::norm(st.aux.nu[k]) * (ws.h[k] * ws.h[k].adjoint());
  out.u.resize(m, k_count);
  for (int k = 0; k < k_count; ++k)
    out.u.col(k) = 2.0 * std::sqrt(1.0 + st.aux.mu[k]) * st.aux.nu[k] * ws.h[k];
  return out;
}

struct PrecoderUpdate {
  PrecoderStack w;
  double lambda_bs = 0.0;
  std::array<double, 2> lambda_rs{0.0, 0.0};
};

/// Constrained quadratic maximum over w with fixed (phi, mu, nu). The
/// multipliers follow complementary slackness via nested bisection
/// (outer = BS budget, inner = active-surface reflect budgets); the
/// constraint value is non-increasing in its own multiplier once inner
/// multipliers are re-solved (convexity of the partially minimized dual),
/// so plain bisection suffices per level. Throws InfeasibleBudget when an
/// active surface's amplified noise alone exceeds its reflect budget.
inline PrecoderUpdate update_precoder(const BcaContext& ctx, const BcaWorkspace& ws,
                                      const BcaState& st, double eta_nats) {
  const auto& ch = *ctx.ch;
  const int m = ctx.antennas();
  const int k_count = ctx.users();
  const PrecoderQuadratics quad = assemble_precoder_quadratics(ctx, ws, st, eta_nats);

  PrecoderUpdate out;
  if (quad.u.isZero(0.0)) {
    out.w = PrecoderStack::Zero(m, k_count);
    return out;
  }

  double lambda_bs = 0.0;
  std::array<double, 2> lambda_rs{0.0, 0.0};
  const auto solve_w = [&]() {
    Eigen::MatrixXcd a = quad.s_blk + lambda_bs * Eigen::MatrixXcd::Identity(m, m);
    for (int s : quad.constrained) a += lambda_rs[s] * quad.t_blk[s];
    return Eigen::MatrixXcd(0.5 * detail::hermitian_solve(a, quad.u));
  };
  const auto con_value = [&](int c, const PrecoderStack& w) {
    if (c == 0) return w.squaredNorm();
    const int s = quad.constrained[c - 1];
    return st.phi[s].cwiseAbs2().dot((ch.G[s] * w).cwiseAbs2().rowwise().sum());
  };
  const auto con_budget = [&](int c) {
    return c == 0 ? ctx.w_budget : quad.rs_budget[quad.constrained[c - 1]];
  };
  const auto set_lambda = [&](int c, double v) {
    if (c == 0)
      lambda_bs = v;
    else
      lambda_rs[quad.constrained[c - 1]] = v;
  };

  const int n_con = 1 + static_cast<int>(quad.constrained.size());
  constexpr int kBisectIters = 70;
  std::function<PrecoderStack(int)> solve_from;
  solve_from = [&](int c) -> PrecoderStack {
    if (c == n_con) return solve_w();
    set_lambda(c, 0.0);
    PrecoderStack w = solve_from(c + 1);
    if (con_value(c, w) <= con_budget(c) * (1.0 + 1e-12)) return w;
    double hi = 1.0;
    for (int it = 0;; ++it) {
      set_lambda(c, hi);
      w = solve_from(c + 1);
      if (con_value(c, w) <= con_budget(c)) break;
      hi *= 4.0;
      if (it > 120 || !(hi < 1e60))
        throw NonFiniteValue("multiplier bracket diverged");
    }
    double lo = 0.0;
    for (int it = 0; it < kBisectIters; ++it) {
      const double mid = 0.5 * (lo + hi);
      set_lambda(c, mid);
      w = solve_from(c + 1);
      (con_value(c, w) > con_budget(c) ? lo : hi) = mid;
    }
    set_lambda(c, hi);  // feasible endpoint
    return solve_from(c + 1);
  };

  out.w = solve_from(0);
  out.lambda_bs = lambda_bs;
  out.lambda_rs = lambda_rs;
  return out;
}

// ---- Surface beamforming blocks --------------------------------------------

/// Data of one surface's sub-problem with everything else fixed:
/// maximize Re{phi^H v} - phi^H Q phi, subject to phi^H diag(r) phi <=
/// budget for active surfaces (r also carries the amplified-noise floor).
struct PhiQuadratics {
  Eigen::VectorXcd v;
  Eigen::MatrixXcd q;
  Eigen::VectorXd r;
  double budget = 0.0;
};

/// Builds (v, Q, r) for surface s from g. The fixed other-surface
/// contribution rides inside the interference constants; power and
/// amplification-noise terms appear only for active surfaces.
inline PhiQuadratics assemble_phi_quadratics(const BcaContext& ctx,
                                             const BcaWorkspace& ws,
                                             const BcaState& st, double eta_nats,
                                             int s) {
  const auto& ch = *ctx.ch;
  const int n = ctx.elements(s);
  const int k_count = ctx.users();
  const int o = 1 - s;

  PhiQuadratics out;
  out.v = Eigen::VectorXcd::Zero(n);
  out.q = Eigen::MatrixXcd::Zero(n, n);
  out.r = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd q_diag = Eigen::VectorXd::Zero(n);

  for (int k = 0; k < k_count; ++k) {
    const double nu_sq = std::norm(st.aux.nu[k]);
    const Eigen::VectorXcd f_conj = ch.f[k][s].conjugate();
    const Eigen::VectorXcd f_conj_o = ch.f[k][o].conjugate();
    for (int i = 0; i < k_count; ++i) {
      const Eigen::VectorXcd d = f_conj.cwiseProduct(ws.pi[s].col(i));
      // h_k^H w_i with this surface's own contribution removed
      const std::complex<double> fixed =
          ws.alpha(k, i) + st.phi[o].dot(f_conj_o.cwiseProduct(ws.pi[o].col(i)));
      if (i == k)
        out.v += 2.0 * std::sqrt(1.0 + st.aux.mu[k]) * std::conj(st.aux.nu[k]) * d;
      out.v -= 2.0 * nu_sq * std::conj(fixed) * d;
      out.q.noalias() += nu_sq * (d * d.adjoint());
    }
    if (ctx.active[s]) {
      q_diag += (nu_sq * ctx.ris.delta_sq[s]) * ch.f[k][s].cwiseAbs2();
      out.r += ws.pi[s].col(k).cwiseAbs2();
    }
  }
  if (ctx.active[s]) {
    const double power_weight = eta_nats / ctx.ris.zeta[s];
    q_diag += power_weight * out.r;
    q_diag.array() += power_weight * ctx.ris.delta_sq[s];
    out.r.array() += ctx.ris.delta_sq[s];
    out.budget = ctx.phi_budget[s];
  }
  out.q.diagonal() += detail::to_complex(q_diag);
  return out;
}

struct PhiUpdate {
  Eigen::VectorXcd phi;
  double multiplier = 0.0;
  double sc_deviation = 0.0;  // structural deviation removed by projection
  int mm_iters = 0;
};

/// Single-constraint QCQP: phi(m) = (Q + m diag(r))^{-1} v / 2 with the
/// smallest m >= 0 meeting the budget. Through x = sqrt(r) .* phi the
/// budget becomes an explicit monotone scalar in m (one eigendecomposition
/// plus scalar bisection); a direct-solve bisection covers the degenerate
/// diagonal left by delta^2 = 0 with never-illuminated elements.
inline PhiUpdate solve_phi_qcqp(const PhiQuadratics& quad) {
  const Eigen::Index n = quad.v.size();
  PhiUpdate out;
  if (quad.r.minCoeff() > 0.0) {
    const Eigen::VectorXcd ri = detail::to_complex(quad.r.cwiseSqrt().cwiseInverse());
    const Eigen::MatrixXcd b = ri.asDiagonal() * quad.q * ri.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(b);
    const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXcd c =
        eig.eigenvectors().adjoint() * ri.cwiseProduct(quad.v);
    const auto power_at = [&](double mult) {
      double p = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double cj = std::norm(c[j]);
        if (cj == 0.0) continue;
        const double den = lam[j] + mult;
        p += (den > 0.0) ? 0.25 * cj / (den * den)
                         : std::numeric_limits<double>::infinity();
      }
      return p;
    };
    double mult = 0.0;
    if (!(power_at(0.0) <= quad.budget)) {
      double hi = 0.5 * c.norm() / std::sqrt(quad.budget);  // power(hi) <= budget
      double lo = 0.0;
      for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        (power_at(mid) > quad.budget ? lo : hi) = mid;
      }
      mult = hi;
    }
    Eigen::VectorXcd x(n);
    for (Eigen::Index j = 0; j < n; ++j)
      x[j] = (std::norm(c[j]) == 0.0) ? std::complex<double>(0.0)
                                      : 0.5 * c[j] / (lam[j] + mult);
    out.phi = ri.cwiseProduct(Eigen::VectorXcd(eig.eigenvectors() * x));
    out.multiplier = mult;
    return out;
  }

  const Eigen::MatrixXcd r_mat =
      Eigen::MatrixXcd(detail::to_complex(quad.r).asDiagonal());
  const auto solve_at = [&](double mult) {
    return Eigen::VectorXcd(
        0.5 * detail::hermitian_solve(quad.q + mult * r_mat, quad.v));
  };
  const auto power_of = [&](const Eigen::VectorXcd& phi) {
    return quad.r.dot(phi.cwiseAbs2());
  };
  Eigen::VectorXcd phi = solve_at(0.0);
  if (quad.budget > 0.0 && power_of(phi) > quad.budget) {
    double hi = 1.0;
    while (power_of(solve_at(hi)) > quad.budget) {
      hi *= 4.0;
      if (!(hi < 1e60)) throw NonFiniteValue("phi multiplier bracket diverged");
    }
    double lo = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (power_of(solve_at(mid)) > quad.budget ? lo : hi) = mid;
    }
    out.multiplier = hi;
    phi = solve_at(hi);
  }
  out.phi = phi;
  return out;
}

/// Active-surface update, optionally restoring the sub-connected common
/// amplitude structure by projection (budget re-checked afterwards).
inline PhiUpdate update_phi_active(const BcaContext& ctx, const BcaWorkspace& ws,
                                   const BcaState& st, double eta_nats, int s,
                                   const SolverConfig& cfg) {
  const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, eta_nats, s);
  PhiUpdate out = solve_phi_qcqp(quad);
  const RsArchitecture& arch = ctx.ris.arch[s];
  if (cfg.sc_projection && arch.kind == SurfaceKind::sc_active) {
    out.sc_deviation = structural_deviation(out.phi, arch);
    out.phi = project_to_architecture(out.phi, arch);
    const double pr = quad.r.dot(out.phi.cwiseAbs2());
    if (pr > quad.budget) out.phi *= std::sqrt(quad.budget / pr) * (1.0 - 1e-15);
  } else if (std::isfinite(arch.beta_max)) {
    // amplitude cap only; structure restoration is the projection's job
    const double cap = arch.kind == SurfaceKind::sc_active
                           ? arch.beta_max / std::sqrt(double(ctx.elements(s)) /
                                                       arch.partitions)
                           : arch.beta_max;
    for (Eigen::Index i = 0; i < out.phi.size(); ++i)
      if (std::abs(out.phi[i]) > cap)
        out.phi[i] = std::polar(cap, std::arg(out.phi[i]));
  }
  return out;
}

// ---- Passive-surface (unit-modulus) block -----------------------------------

/// minimize phi^H Q phi - Re{phi^H v} over unit-modulus phi.
inline double mm_objective(const Eigen::MatrixXcd& q, const Eigen::VectorXcd& v,
                           const Eigen::VectorXcd& phi) {
  return std::real(phi.dot(q * phi)) - std::real(phi.dot(v));
}

inline double mm_lambda_q(const Eigen::MatrixXcd& q, SolverConfig::LambdaQ mode) {
  if (q.rows() == 0) return 0.0;
  if (mode == SolverConfig::LambdaQ::trace) return std::real(q.trace());
  return std::max(
      0.0,
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(q).eigenvalues().maxCoeff());
}

/// Majorizer of the unit-modulus objective around phi_t with X = lambda I.
inline double mm_surrogate(const Eigen::MatrixXcd& q, const Eigen::VectorXcd& v,
                           double lambda_q, const Eigen::VectorXcd& phi_t,
                           const Eigen::VectorXcd& phi) {
  const Eigen::VectorXcd xq = lambda_q * phi_t - q * phi_t;  // (X - Q) phi_t
  return lambda_q * phi.squaredNorm() - 2.0 * std::real(phi.dot(xq)) +
         std::real(phi_t.dot(xq)) - std::real(phi.dot(v));
}

/// One majorize-minimize step: the surrogate is linear over the unit
/// circle, so its minimizer is the phase of 2 (X - Q) phi_t + v. Elements
/// with a vanishing coefficient keep their phase (flat direction).
inline Eigen::VectorXcd mm_step(const Eigen::MatrixXcd& q, const Eigen::VectorXcd& v,
                                double lambda_q, const Eigen::VectorXcd& phi_t) {
  const Eigen::VectorXcd coef = 2.0 * (lambda_q * phi_t - q * phi_t) + v;
  Eigen::VectorXcd next(phi_t.size());
  for (Eigen::Index i = 0; i < phi_t.size(); ++i)
    next[i] =
        (std::abs(coef[i]) > 0.0) ? std::polar(1.0, std::arg(coef[i])) : phi_t[i];
  return next;
}

inline PhiUpdate update_phi_passive_mm(const BcaContext& ctx, const BcaWorkspace& ws,
                                       const BcaState& st, double eta_nats, int s,
                                       const SolverConfig& cfg) {
  const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, eta_nats, s);
  const double lambda_q = mm_lambda_q(quad.q, cfg.lambda_q);
  PhiUpdate out;
  out.phi = st.phi[s];
  double obj = mm_objective(quad.q, quad.v, out.phi);
  for (int it = 0; it < cfg.mm_iters; ++it) {
    const Eigen::VectorXcd next = mm_step(quad.q, quad.v, lambda_q, out.phi);
    const double next_obj = mm_objective(quad.q, quad.v, next);
    ++out.mm_iters;
    if (next_obj > obj) break;  // numerical stall
    const double drop = obj - next_obj;
    out.phi = next;
    obj = next_obj;
    if (drop < cfg.bca_tol * std::max(1.0, std::abs(obj))) break;
  }
  return out;
}

// ---- Full algorithm ---------------------------------------------------------

struct IterationRecord {
  int iter = 0;
  double eta = 0.0;       // Dinkelbach parameter used this pass (bps/Hz/W)
  double g = 0.0;         // transformed objective after the pass (nats)
  double sum_rate = 0.0;  // bps/Hz after the pass
  double power = 0.0;     // W after the pass
  double bs_residual = 0.0;
  std::array<double, 2> rs_residual{0.0, 0.0};
  int mm_iters = 0;
  std::vector<double> block_g;  // g at [start, aux, w, phi1, phi2] when recorded
};

struct SolverState {
  PrecoderStack w;
  std::array<Eigen::VectorXcd, 2> phi;
  AuxVars aux;
  double eta = 0.0;       // bps/Hz/W at the final point
  double sum_rate = 0.0;  // bps/Hz
  double power = 0.0;     // W
  double dinkelbach_residual = 0.0;  // |R - eta_used P| / P at the end
  int outer_iters = 0;               // I_0
  int total_mm_iters = 0;
  bool converged = false;
  std::array<double, 2> sc_deviation{0.0, 0.0};  // last projection distances
  std::vector<IterationRecord> trace;
};

/// Relative TPC constraint violations at a point (positive = violated).
inline void feasibility_residuals(const BcaContext& ctx, const BcaState& st,
                                  double& bs_res, std::array<double, 2>& rs_res) {
  const TpcBreakdown p = tpc(st.w, st.phi[0], st.phi[1], *ctx.ch, ctx.ris, ctx.bs);
  bs_res = (p.p_bs - ctx.bs.p_bs_max) / ctx.bs.p_bs_max;
  for (int s = 0; s < 2; ++s)
    rs_res[s] = ctx.active[s]
                    ? (p.p_rs[s] - ctx.ris.p_rs_max[s]) / ctx.ris.p_rs_max[s]
                    : 0.0;
}

/// Strictly interior random start: half the transmit budget, half of each
/// reflect budget, unit-modulus random phases on passive surfaces.
inline BcaState initial_state(const BcaContext& ctx, std::uint64_t seed) {
  Rng rng(seed);
  const int m = ctx.antennas();
  const int k_count = ctx.users();
  BcaState st;
  st.w.resize(m, k_count);
  for (int k = 0; k < k_count; ++k)
    for (int i = 0; i < m; ++i) st.w(i, k) = rng.cgaussian();
  st.w *= std::sqrt(0.5 * ctx.w_budget / st.w.squaredNorm());
  for (int s = 0; s < 2; ++s) {
    const int n = ctx.elements(s);
    st.phi[s].resize(n);
    if (ctx.active[s]) {
      const Eigen::MatrixXcd pi = ctx.ch->G[s] * st.w;
      const double load = pi.cwiseAbs2().sum() + ctx.ris.delta_sq[s] * n;
      const double amp = load > 0.0 ? std::sqrt(0.5 * ctx.phi_budget[s] / load) : 0.0;
      for (int i = 0; i < n; ++i) st.phi[s][i] = std::polar(amp, rng.angle());
    } else {
      for (int i = 0; i < n; ++i) st.phi[s][i] = std::polar(1.0, rng.angle());
    }
  }
  st.aux.mu = Eigen::VectorXd::Zero(k_count);
  st.aux.nu = Eigen::VectorXcd::Zero(k_count);
  return st;
}

inline SolverState bca_solve(const ChannelSet& ch, const HybridRisConfig& ris,
                             const PowerParams& bs, double sigma_sq,
                             const SolverConfig& cfg) {
  cfg.validate();
  BcaContext ctx = BcaContext::make(ch, ris, bs, sigma_sq);
  BcaState st = initial_state(ctx, cfg.init_seed);

  SolverState out;
  double eta_prev_bits = 0.0;
  double eta_used_bits = 0.0;
  for (int iter = 0; iter < cfg.t_max; ++iter) {
    BcaWorkspace ws = precompute(ctx, st);
    const double power = total_power(ctx, st);
    const double rate_nats = sum_rate_nats(ctx, ws);
    const double eta_nats = rate_nats / power;
    const double eta_bits = eta_nats / std::numbers::ln2;

    if (iter > 0 && std::abs(eta_bits - eta_prev_bits) <=
                        cfg.dinkelbach_tol * std::clamp(eta_bits, 1e-9, 1.0)) {
      out.converged = true;
      break;
    }
    eta_prev_bits = eta_bits;
    eta_used_bits = eta_bits;

    IterationRecord rec;
    rec.iter = iter;
    rec.eta = eta_bits;
    const auto record_g = [&](const BcaWorkspace& wsp) {
      if (cfg.record_block_objectives)
        rec.block_g.push_back(transformed_objective(ctx, wsp, st, eta_nats));
    };

    const auto run_cycle = [&]() {
      record_g(ws);
      // Iterate the two auxiliary closed forms to their joint fixed point:
      // one sweep leaves mu matched to the stale nu, which would let eta
      // dip after a large (w, phi) move. Each sweep ascends g.
      double g_aux = transformed_objective(ctx, ws, st, eta_nats);
      for (int it = 0; it < 200; ++it) {
        update_aux(ctx, ws, st);
        const double g_next = transformed_objective(ctx, ws, st, eta_nats);
        const bool stalled =
            g_next - g_aux <= 1e-14 * std::max(1.0, std::abs(g_next));
        g_aux = g_next;
        if (stalled) break;
      }
      record_g(ws);

      // Reflect-budget headroom guard before the precoder block.
      for (int s = 0; s < 2; ++s) {
        if (!ctx.active[s]) continue;
        const double noise_load = ctx.ris.delta_sq[s] * st.phi[s].squaredNorm();
        if (noise_load >= ctx.phi_budget[s])
          st.phi[s] *= std::sqrt(0.9 * ctx.phi_budget[s] / noise_load);
      }
      ws = precompute(ctx, st);
      st.w = update_precoder(ctx, ws, st, eta_nats).w;
      ws = precompute(ctx, st);
      record_g(ws);

      for (int s = 0; s < 2; ++s) {
        PhiUpdate up;
        if (ctx.active[s]) {
          up = update_phi_active(ctx, ws, st, eta_nats, s, cfg);
          out.sc_deviation[s] = up.sc_deviation;
        } else {
          up = update_phi_passive_mm(ctx, ws, st, eta_nats, s, cfg);
          rec.mm_iters += up.mm_iters;
          out.total_mm_iters += up.mm_iters;
        }
        st.phi[s] = up.phi;
        ws = precompute(ctx, st);
        record_g(ws);
      }
      return transformed_objective(ctx, ws, st, eta_nats);
    };

    double g_cycle = run_cycle();
    if (cfg.eta_update == SolverConfig::EtaUpdate::per_convergence) {
      for (int inner = 1; inner < cfg.inner_passes; ++inner) {
        const double g_next = run_cycle();
        if (g_next - g_cycle <= cfg.bca_tol * std::max(1.0, std::abs(g_next))) {
          g_cycle = g_next;
          break;
        }
        g_cycle = g_next;
      }
    }

    rec.g = g_cycle;
    rec.power = total_power(ctx, st);
    rec.sum_rate = sum_rate_nats(ctx, ws) / std::numbers::ln2;
    feasibility_residuals(ctx, st, rec.bs_residual, rec.rs_residual);
    out.trace.push_back(std::move(rec));
    out.outer_iters = iter + 1;

    if (!st.w.allFinite() || !st.phi[0].allFinite() || !st.phi[1].allFinite() ||
        !std::isfinite(out.trace.back().g))
      throw NonFiniteValue("solver iterate degenerated");
  }

  const BcaWorkspace ws = precompute(ctx, st);
  out.w = st.w;
  out.phi = st.phi;
  out.aux = st.aux;
  out.power = total_power(ctx, st);
  out.sum_rate = sum_rate_nats(ctx, ws) / std::numbers::ln2;
  out.eta = out.sum_rate / out.power;
  out.dinkelbach_residual =
      std::abs(out.sum_rate - eta_used_bits * out.power) / out.power;
  return out;
}

// ---- Zero-forcing baseline ---------------------------------------------------

struct ZfResult {
  PrecoderStack w;
  std::array<Eigen::VectorXcd, 2> phi;
};

/// Zero-forcing on the stacked direct channels, scaled to radiate the full
/// transmit budget; random phases on the RIS, active amplitudes exhausting
/// each reflect budget with equality.
inline ZfResult zf_heuristic(const ChannelSet& ch, const HybridRisConfig& ris,
                             const PowerParams& bs, Rng& rng) {
  const int m = ch.antennas();
  const int k_count = ch.users();
  if (k_count > m) throw RankDeficientDirectChannel("more users than antennas");
  Eigen::MatrixXcd d(k_count, m);
  for (int k = 0; k < k_count; ++k) d.row(k) = ch.g[k].adjoint();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(d,
                                         Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv[k_count - 1] > 1e-12 * sv[0]))
    throw RankDeficientDirectChannel("direct channel matrix is rank deficient");
  const Eigen::MatrixXcd f =
      svd.matrixV() *
      detail::to_complex(sv.cwiseInverse()).asDiagonal() *
      svd.matrixU().adjoint();  // D^+, M x K
  ZfResult out;
  out.w = std::sqrt(bs.transmit_budget() / f.squaredNorm()) * f;
  for (int s = 0; s < 2; ++s) {
    const int n = ris.n_surface(s);
    out.phi[s].resize(n);
    for (int i = 0; i < n; ++i) out.phi[s][i] = std::polar(1.0, rng.angle());
    if (ris.arch[s].active()) {
      const Eigen::MatrixXcd pi = ch.G[s] * out.w;
      const double load = pi.cwiseAbs2().sum() + ris.delta_sq[s] * n;
      out.phi[s] *= std::sqrt(ris.reflect_budget(s) / load);
    }
  }
  return out;
}

}  // namespace hris

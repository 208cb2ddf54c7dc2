#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "hris/solver.hpp"

using namespace hris;
using cm = std::complex<double>;

namespace {

struct Instance {
  ChannelSet ch;
  HybridRisConfig ris;
  PowerParams bs;
  double sigma_sq = 0.1;
};

Instance make_instance(int m, int k, int n1, int n2, bool second_active,
                       std::uint64_t seed, double delta = 0.1,
                       double p_bs_max = 8.0, double p_rs_max = 6.0,
                       double cvar = 1.0) {
  Instance in;
  Rng rng(seed);
  in.ch.G[0] = sample_channel(n1, m, cvar, FadingSpec::rayleigh(), rng);
  in.ch.G[1] = sample_channel(n2, m, cvar, FadingSpec::rayleigh(), rng);
  in.ch.g.resize(k);
  in.ch.f.resize(k);
  for (int u = 0; u < k; ++u) {
    in.ch.g[u] = sample_channel(m, 1, cvar, FadingSpec::rayleigh(), rng).col(0);
    in.ch.f[u][0] = sample_channel(n1, 1, cvar, FadingSpec::rayleigh(), rng).col(0);
    in.ch.f[u][1] = sample_channel(n2, 1, cvar, FadingSpec::rayleigh(), rng).col(0);
  }
  in.ris.n_total = n1 + n2;
  in.ris.split = double(n1) / (n1 + n2);
  in.ris.arch[0] = RsArchitecture::fc();
  in.ris.arch[1] = second_active ? RsArchitecture::fc() : RsArchitecture::passive();
  in.ris.delta_sq[0] = delta;
  in.ris.delta_sq[1] = second_active ? delta : 0.0;
  in.ris.zeta[0] = in.ris.zeta[1] = 0.9;
  in.ris.p_ps = in.ris.p_dc = 0.001;
  in.ris.p_rs_max[0] = in.ris.p_rs_max[1] = p_rs_max;
  in.bs = PowerParams{0.9, 0.5, p_bs_max};
  return in;
}

/// A state with meaningful auxiliary variables: random start plus two aux
/// refreshes.
BcaState warmed_state(const BcaContext& ctx, std::uint64_t seed) {
  BcaState st = initial_state(ctx, seed);
  BcaWorkspace ws = precompute(ctx, st);
  update_aux(ctx, ws, st);
  ws = precompute(ctx, st);
  update_aux(ctx, ws, st);
  return st;
}

bool near(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

TEST_CASE("update_aux: closed forms satisfy their stationarity conditions") {
  // mu* solves 1/(1+mu) - 1 + rho/sqrt(1+mu) = 0
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const double rho = rng.uniform() * 10.0;
    const double mu = 0.5 * rho * (rho + std::sqrt(rho * rho + 4.0));
    const double residual = 1.0 / (1.0 + mu) - 1.0 + rho / std::sqrt(1.0 + mu);
    CHECK(std::abs(residual) < 1e-10);
  }

  // rho = 0 pins mu at zero
  const Instance in = make_instance(2, 2, 3, 3, false, 11);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = initial_state(ctx, 5);
  st.aux.nu.setZero();
  BcaWorkspace ws = precompute(ctx, st);
  update_aux(ctx, ws, st);  // mu computed while nu is still zero
  CHECK(st.aux.mu.maxCoeff() == doctest::Approx(0.0));
  CHECK(st.aux.nu.norm() > 0.0);  // nu then picks the channels up
}

TEST_CASE("update_aux: conditional maximizer of g under perturbations") {
  const Instance in = make_instance(3, 2, 4, 4, true, 21);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 9);
  BcaWorkspace ws = precompute(ctx, st);
  // iterate the two closed forms to their joint fixed point
  for (int it = 0; it < 30; ++it) update_aux(ctx, ws, st);
  const double eta = 0.4;
  const double g_star = transformed_objective(ctx, ws, st, eta);
  Rng rng(77);
  for (int t = 0; t < 40; ++t) {
    BcaState bumped = st;
    const int k = int(rng.uniform() * ctx.users());
    if (t % 2 == 0)
      bumped.aux.mu[k] = std::max(0.0, bumped.aux.mu[k] + (rng.uniform() - 0.5) * 2e-3);
    else
      bumped.aux.nu[k] += rng.cgaussian(1e-6);
    CHECK(transformed_objective(ctx, ws, bumped, eta) <=
          g_star + 1e-10 * std::max(1.0, std::abs(g_star)));
  }
}

TEST_CASE("precoder block: quadratic model reproduces g exactly") {
  for (const bool second_active : {false, true}) {
    const Instance in = make_instance(3, 2, 4, 4, second_active, 31);
    const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
    BcaState st = warmed_state(ctx, 13);
    const BcaWorkspace ws = precompute(ctx, st);
    const double eta = 0.6;
    const PrecoderQuadratics quad = assemble_precoder_quadratics(ctx, ws, st, eta);

    BcaState st0 = st;
    st0.w.setZero();
    const double g0 = transformed_objective(ctx, precompute(ctx, st0), st0, eta);

    Rng rng(41);
    for (int t = 0; t < 20; ++t) {
      BcaState stx = st;
      for (int j = 0; j < stx.w.cols(); ++j)
        for (int i = 0; i < stx.w.rows(); ++i) stx.w(i, j) = rng.cgaussian(0.5);
      const double gx = transformed_objective(ctx, precompute(ctx, stx), stx, eta);
      CHECK(near(gx - g0, quad.objective(stx.w), 1e-10));
    }
  }
}

TEST_CASE("phi blocks: quadratic model reproduces g exactly") {
  for (const bool second_active : {false, true}) {
    const Instance in = make_instance(3, 2, 4, 5, second_active, 51);
    const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
    BcaState st = warmed_state(ctx, 17);
    const BcaWorkspace ws = precompute(ctx, st);
    const double eta = 0.8;
    for (int s = 0; s < 2; ++s) {
      const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, eta, s);
      BcaState st0 = st;
      st0.phi[s].setZero();
      const double g0 = transformed_objective(ctx, precompute(ctx, st0), st0, eta);
      Rng rng(61 + s);
      for (int t = 0; t < 20; ++t) {
        BcaState stx = st;
        for (Eigen::Index i = 0; i < stx.phi[s].size(); ++i)
          stx.phi[s][i] = rng.cgaussian(0.5);
        const double gx = transformed_objective(ctx, precompute(ctx, stx), stx, eta);
        const double model = std::real(stx.phi[s].dot(quad.v)) -
                             std::real(stx.phi[s].dot(quad.q * stx.phi[s]));
        CHECK(near(gx - g0, model, 1e-10));
      }
    }
  }
}

TEST_CASE("assembled forms are positive semidefinite") {
  for (int seed = 1; seed <= 10; ++seed) {
    const Instance in = make_instance(3, 2, 4, 4, seed % 2 == 0, seed);
    const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
    BcaState st = warmed_state(ctx, seed * 7);
    const BcaWorkspace ws = precompute(ctx, st);
    const PrecoderQuadratics pq = assemble_precoder_quadratics(ctx, ws, st, 0.5);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(pq.s_blk)
              .eigenvalues()
              .minCoeff() > -1e-10);
    for (int s : pq.constrained)
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(pq.t_blk[s])
                .eigenvalues()
                .minCoeff() > -1e-10);
    for (int s = 0; s < 2; ++s) {
      const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, 0.5, s);
      CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(quad.q)
                .eigenvalues()
                .minCoeff() > -1e-10);
      CHECK(quad.r.minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("update_precoder: interior solutions come back untouched") {
  const Instance in = make_instance(2, 2, 3, 3, false, 71, 0.1, 500.0, 500.0);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 19);
  const BcaWorkspace ws = precompute(ctx, st);
  const PrecoderUpdate up = update_precoder(ctx, ws, st, 0.5);
  CHECK(up.lambda_bs == 0.0);
  CHECK(up.lambda_rs[0] == 0.0);
  // and the returned point is the unconstrained stationary point
  const PrecoderQuadratics quad = assemble_precoder_quadratics(ctx, ws, st, 0.5);
  const Eigen::MatrixXcd resid = 2.0 * (quad.s_blk * up.w) - quad.u;
  CHECK(resid.norm() <= 1e-8 * quad.u.norm());
}

TEST_CASE("update_precoder: complementary slackness on a tight budget") {
  const Instance in = make_instance(2, 2, 3, 3, false, 81, 0.1, 1.2, 2.0);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 23);
  const BcaWorkspace ws = precompute(ctx, st);
  const PrecoderUpdate up = update_precoder(ctx, ws, st, 0.05);
  const double tsp = up.w.squaredNorm();
  CHECK(tsp <= ctx.w_budget * (1.0 + 1e-12));
  if (up.lambda_bs > 0.0)
    CHECK(std::abs(tsp - ctx.w_budget) <= 1e-8 * ctx.w_budget);
  const PrecoderQuadratics quad = assemble_precoder_quadratics(ctx, ws, st, 0.05);
  for (int s : quad.constrained) {
    const double val =
        st.phi[s].cwiseAbs2().dot((in.ch.G[s] * up.w).cwiseAbs2().rowwise().sum());
    CHECK(val <= quad.rs_budget[s] * (1.0 + 1e-12));
    if (up.lambda_rs[s] > 0.0)
      CHECK(std::abs(val - quad.rs_budget[s]) <= 1e-8 * quad.rs_budget[s]);
  }
}

TEST_CASE("update_precoder: scalar instance matches a dense multiplier grid") {
  // M = K = 1 with one active surface: two multipliers, brute-forced over
  // [0, 1e3]^2 with local refinement passes
  const Instance in = make_instance(1, 1, 1, 1, false, 91, 0.2, 0.8, 0.9);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 29);
  const BcaWorkspace ws = precompute(ctx, st);
  const double eta = 0.3;
  const PrecoderQuadratics quad = assemble_precoder_quadratics(ctx, ws, st, eta);

  const cm s_val = quad.s_blk(0, 0);
  const cm t_val = quad.t_blk[0](0, 0);
  const cm u_val = quad.u(0, 0);
  const double b0 = ctx.w_budget;
  const double b1 = quad.rs_budget[0];

  const auto objective_at = [&](double l0, double l1) {
    const cm w = 0.5 * u_val / (s_val + l0 + l1 * t_val);
    const double p0 = std::norm(w);
    const double p1 = std::real(t_val) * std::norm(w);
    if (p0 > b0 * (1.0 + 1e-9) || p1 > b1 * (1.0 + 1e-9))
      return -std::numeric_limits<double>::infinity();
    return std::real(std::conj(u_val) * w) - std::real(s_val) * std::norm(w);
  };

  double lo0 = 0.0, hi0 = 1000.0, lo1 = 0.0, hi1 = 1000.0;
  double best = -std::numeric_limits<double>::infinity();
  double best0 = 0.0, best1 = 0.0;
  for (int level = 0; level < 4; ++level) {
    const int grid = 160;
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j <= grid; ++j) {
        const double l0 = lo0 + (hi0 - lo0) * i / grid;
        const double l1 = lo1 + (hi1 - lo1) * j / grid;
        const double obj = objective_at(l0, l1);
        if (obj > best) {
          best = obj;
          best0 = l0;
          best1 = l1;
        }
      }
    }
    const double span0 = (hi0 - lo0) / grid, span1 = (hi1 - lo1) / grid;
    lo0 = std::max(0.0, best0 - 2 * span0);
    hi0 = best0 + 2 * span0;
    lo1 = std::max(0.0, best1 - 2 * span1);
    hi1 = best1 + 2 * span1;
  }

  const PrecoderUpdate up = update_precoder(ctx, ws, st, eta);
  const double closed = quad.objective(up.w);
  CHECK(std::abs(closed - best) <= 1e-6);
  CHECK(closed >= best - 1e-9);  // the grid cannot beat the exact solution
}

TEST_CASE("update_precoder: infeasible reflect budget throws") {
  const Instance in = make_instance(2, 2, 3, 3, false, 95, 0.5, 8.0, 0.02);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 31);
  // inflate the surface amplitudes until delta^2 ||Phi||_F^2 alone exceeds
  // the reflect budget
  st.phi[0] *= 50.0;
  const BcaWorkspace ws = precompute(ctx, st);
  CHECK_THROWS_AS(update_precoder(ctx, ws, st, 0.3), InfeasibleBudget);
}

TEST_CASE("solve_phi_qcqp: scalar brute force over the complex plane") {
  Rng rng(107);
  for (int t = 0; t < 10; ++t) {
    PhiQuadratics quad;
    quad.v = Eigen::VectorXcd(1);
    quad.v[0] = rng.cgaussian(2.0);
    quad.q = Eigen::MatrixXcd(1, 1);
    quad.q(0, 0) = 0.3 + rng.uniform();
    quad.r = Eigen::VectorXd(1);
    quad.r[0] = 0.2 + rng.uniform();
    quad.budget = 0.05 + 0.4 * rng.uniform();

    const PhiUpdate up = solve_phi_qcqp(quad);
    const double closed = std::real(up.phi.dot(quad.v)) -
                          std::real(up.phi.dot(quad.q * up.phi));
    CHECK(quad.r.dot(up.phi.cwiseAbs2()) <= quad.budget * (1.0 + 1e-10));

    // polar grid over the feasible disk
    const double a_max = std::sqrt(quad.budget / quad.r[0]);
    double best = -1e300;
    for (int ia = 0; ia <= 1500; ++ia) {
      const double amp = a_max * ia / 1500.0;
      for (int ip = 0; ip < 1500; ++ip) {
        const cm phi = std::polar(amp, 2.0 * std::numbers::pi * ip / 1500.0);
        const double obj = std::real(std::conj(phi) * quad.v[0]) -
                           std::real(quad.q(0, 0)) * std::norm(phi);
        best = std::max(best, obj);
      }
    }
    CHECK(std::abs(closed - best) <= 1e-4);
    CHECK(closed >= best - 1e-9);
  }
}

TEST_CASE("solve_phi_qcqp: constraint value is monotone in the multiplier") {
  const Instance in = make_instance(3, 2, 6, 4, true, 111);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 37);
  const BcaWorkspace ws = precompute(ctx, st);
  const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, 0.5, 0);

  const Eigen::MatrixXcd r_mat = Eigen::MatrixXcd(quad.r.cast<cm>().asDiagonal());
  double prev = std::numeric_limits<double>::infinity();
  for (double m : {0.0, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
    const Eigen::VectorXcd phi =
        Eigen::VectorXcd((quad.q + m * r_mat).ldlt().solve(quad.v) * 0.5);
    const double pow_m = quad.r.dot(phi.cwiseAbs2());
    CHECK(pow_m <= prev * (1.0 + 1e-12));
    prev = pow_m;
  }
}

TEST_CASE("update_phi_active: multiplier zero when interior, tight when bound") {
  {
    const Instance in = make_instance(2, 2, 4, 4, false, 117, 0.1, 8.0, 500.0);
    const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
    BcaState st = warmed_state(ctx, 41);
    const BcaWorkspace ws = precompute(ctx, st);
    const PhiUpdate up = update_phi_active(ctx, ws, st, 0.5, 0, SolverConfig{});
    CHECK(up.multiplier == 0.0);
  }
  {
    const Instance in = make_instance(2, 2, 4, 4, false, 119, 0.1, 8.0, 0.5);
    const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
    BcaState st = warmed_state(ctx, 43);
    const BcaWorkspace ws = precompute(ctx, st);
    const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, 0.5, 0);
    const PhiUpdate up = update_phi_active(ctx, ws, st, 0.5, 0, SolverConfig{});
    const double pw = quad.r.dot(up.phi.cwiseAbs2());
    CHECK(pw <= quad.budget * (1.0 + 1e-12));
    if (up.multiplier > 0.0)
      CHECK(std::abs(pw - quad.budget) <= 1e-8 * quad.budget);
  }
}

TEST_CASE("update_phi_active: sub-connected projection restores structure") {
  Instance in = make_instance(2, 2, 8, 4, false, 123);
  in.ris.arch[0] = RsArchitecture::sc(2);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  BcaState st = warmed_state(ctx, 47);
  const BcaWorkspace ws = precompute(ctx, st);
  SolverConfig cfg;
  cfg.sc_projection = true;
  const PhiUpdate up = update_phi_active(ctx, ws, st, 0.5, 0, cfg);
  CHECK(structural_deviation(up.phi, in.ris.arch[0]) <= 1e-9);
  const PhiQuadratics quad = assemble_phi_quadratics(ctx, ws, st, 0.5, 0);
  CHECK(quad.r.dot(up.phi.cwiseAbs2()) <= quad.budget * (1.0 + 1e-12));
  SolverConfig off;
  off.sc_projection = false;
  const PhiUpdate raw = update_phi_active(ctx, ws, st, 0.5, 0, off);
  CHECK(structural_deviation(raw.phi, in.ris.arch[0]) > 1e-6);
  CHECK(up.sc_deviation == doctest::Approx(
            structural_deviation(raw.phi, in.ris.arch[0])));
}

TEST_CASE("mm: zero quadratic part solves in one step") {
  Rng rng(131);
  const int n = 6;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.cgaussian();
  const Eigen::MatrixXcd q = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd phi0(n);
  for (int i = 0; i < n; ++i) phi0[i] = std::polar(1.0, rng.angle());
  const Eigen::VectorXcd next =
      mm_step(q, v, mm_lambda_q(q, SolverConfig::LambdaQ::max_eigenvalue), phi0);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(next[i] - std::polar(1.0, std::arg(v[i]))) <= 1e-12);
}

TEST_CASE("mm: surrogate majorizes the objective, tight at the expansion point") {
  Rng rng(137);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + int(rng.uniform() * 14);
    Eigen::MatrixXcd a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = rng.cgaussian();
    const Eigen::MatrixXcd q = a.adjoint() * a;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cgaussian(2.0);
    Eigen::VectorXcd phi_t(n), phi(n);
    for (int i = 0; i < n; ++i) phi_t[i] = std::polar(1.0, rng.angle());
    for (int i = 0; i < n; ++i) phi[i] = std::polar(1.0, rng.angle());
    for (const auto mode :
         {SolverConfig::LambdaQ::max_eigenvalue, SolverConfig::LambdaQ::trace}) {
      const double lq = mm_lambda_q(q, mode);
      CHECK(mm_surrogate(q, v, lq, phi_t, phi) >= mm_objective(q, v, phi) - 1e-9);
      CHECK(mm_surrogate(q, v, lq, phi_t, phi_t) ==
            doctest::Approx(mm_objective(q, v, phi_t)).epsilon(1e-10));
    }
  }
}

TEST_CASE("mm: iterates never increase the objective") {
  Rng rng(139);
  for (int t = 0; t < 20; ++t) {
    const int n = 8;
    Eigen::MatrixXcd a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = rng.cgaussian();
    const Eigen::MatrixXcd q = a.adjoint() * a;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cgaussian(2.0);
    for (const auto mode :
         {SolverConfig::LambdaQ::max_eigenvalue, SolverConfig::LambdaQ::trace}) {
      const double lq = mm_lambda_q(q, mode);
      Eigen::VectorXcd phi(n);
      for (int i = 0; i < n; ++i) phi[i] = std::polar(1.0, rng.angle());
      double obj = mm_objective(q, v, phi);
      for (int it = 0; it < 40; ++it) {
        phi = mm_step(q, v, lq, phi);
        const double next = mm_objective(q, v, phi);
        CHECK(next <= obj + 1e-11);
        obj = next;
      }
    }
  }
}

TEST_CASE("mm: matches a 16-phase exhaustive search on small instances") {
  Rng rng(149);
  for (int t = 0; t < 8; ++t) {
    const int n = 4;
    Eigen::MatrixXcd a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) a(i, j) = rng.cgaussian(0.001);
    const Eigen::MatrixXcd q = a.adjoint() * a;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cgaussian(0.0004);

    // exhaustive minimum over 16 quantized phases per element
    double best = 1e300;
    Eigen::VectorXcd best_phi(n);
    Eigen::VectorXcd probe(n);
    const int grid = 16;
    for (int code = 0; code < grid * grid * grid * grid; ++code) {
      int c = code;
      for (int i = 0; i < n; ++i) {
        probe[i] = std::polar(1.0, 2.0 * std::numbers::pi * (c % grid) / grid);
        c /= grid;
      }
      const double obj = mm_objective(q, v, probe);
      if (obj < best) {
        best = obj;
        best_phi = probe;
      }
    }

    // descending from the exhaustive minimizer only refines it
    const double lq = mm_lambda_q(q, SolverConfig::LambdaQ::max_eigenvalue);
    Eigen::VectorXcd phi = best_phi;
    double obj = best;
    for (int it = 0; it < 200; ++it) {
      const Eigen::VectorXcd next = mm_step(q, v, lq, phi);
      const double next_obj = mm_objective(q, v, next);
      if (next_obj > obj - 1e-14) break;
      phi = next;
      obj = next_obj;
    }
    CHECK(obj <= best + 1e-12);
    CHECK(std::abs(obj - best) <= 1e-3);
  }
}

TEST_CASE("zf_heuristic: pseudo-inverse, budget equality, matched filter") {
  const Instance in = make_instance(4, 2, 6, 6, false, 151);
  Rng rng(157);
  const ZfResult zf = zf_heuristic(in.ch, in.ris, in.bs, rng);

  Eigen::MatrixXcd d(2, 4);
  for (int k = 0; k < 2; ++k) d.row(k) = in.ch.g[k].adjoint();
  const Eigen::MatrixXcd dw = d * zf.w;
  CHECK(std::abs(dw(0, 1)) <= 1e-10 * std::abs(dw(0, 0)));
  CHECK(std::abs(dw(1, 0)) <= 1e-10 * std::abs(dw(1, 1)));
  CHECK(std::abs(dw(0, 0) - dw(1, 1)) <= 1e-10 * std::abs(dw(0, 0)));

  CHECK(transmit_sum_power(zf.w) ==
        doctest::Approx(in.bs.transmit_budget()).epsilon(1e-9));

  // active surface radiates its whole reflect budget
  const double pr = reflect_power(zf.phi[0], in.ch.G[0], zf.w, in.ris.delta_sq[0]);
  CHECK(pr == doctest::Approx(in.ris.reflect_budget(0)).epsilon(1e-9));
  // passive surface keeps unit amplitudes
  for (int i = 0; i < zf.phi[1].size(); ++i)
    CHECK(std::abs(zf.phi[1][i]) == doctest::Approx(1.0));

  // K = 1 reduces to a matched filter on the only direct channel
  Instance in1 = make_instance(4, 1, 6, 6, false, 161);
  Rng rng1(163);
  const ZfResult zf1 = zf_heuristic(in1.ch, in1.ris, in1.bs, rng1);
  const double corr = std::abs(in1.ch.g[0].dot(zf1.w.col(0)));
  CHECK(corr ==
        doctest::Approx(in1.ch.g[0].norm() * zf1.w.col(0).norm()).epsilon(1e-10));

  // duplicated user rows are rank deficient
  Instance bad = make_instance(4, 2, 6, 6, false, 167);
  bad.ch.g[1] = bad.ch.g[0];
  Rng rng2(169);
  CHECK_THROWS_AS(zf_heuristic(bad.ch, bad.ris, bad.bs, rng2),
                  RankDeficientDirectChannel);
}

TEST_CASE("dinkelbach objective: fixed point, zero parameter, monotone in eta") {
  const Instance in = make_instance(3, 2, 4, 4, false, 171);
  const BcaContext ctx = BcaContext::make(in.ch, in.ris, in.bs, in.sigma_sq);
  const BcaState st = warmed_state(ctx, 53);
  const BcaWorkspace ws = precompute(ctx, st);
  const double r_bits = sum_rate_nats(ctx, ws) / std::numbers::ln2;
  const double p = total_power(ctx, st);
  CHECK(dinkelbach_objective(ctx, st, r_bits / p) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dinkelbach_objective(ctx, st, 0.0) == doctest::Approx(r_bits));
  double prev = std::numeric_limits<double>::infinity();
  for (double eta : {0.0, 0.1, 0.5, 1.0, 2.0}) {
    const double f = dinkelbach_objective(ctx, st, eta);
    CHECK(f < prev);
    prev = f;
  }
}

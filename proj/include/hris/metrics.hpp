#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "hris/architecture.hpp"
#include "hris/channel.hpp"
#include "hris/errors.hpp"

// Power, SINR, rate and energy-efficiency bookkeeping for a given
// precoder / reflection-coefficient configuration. Powers are watts,
// rates bps/Hz (unit bandwidth), EE bps/Hz/W.

namespace hris {

struct PowerParams {
  double xi = 0.909;      // BS amplifier efficiency
  double w_bs = 0.0;      // BS static power (W)
  double p_bs_max = 0.0;  // BS TPC budget (W)

  void validate() const {
    if (!(xi > 0.0 && xi < 1.0))
      throw InvariantViolation("BS amplifier efficiency must lie in (0,1)");
    if (p_bs_max <= w_bs)
      throw InvariantViolation("BS power budget does not cover its static power");
  }

  /// Transmit-sum-power budget implied by the BS TPC constraint.
  double transmit_budget() const { return xi * (p_bs_max - w_bs); }
};

/// Precoders as an M x K matrix, one column per user.
using PrecoderStack = Eigen::MatrixXcd;

inline Eigen::VectorXcd stack(const PrecoderStack& w) {
  return Eigen::VectorXcd::Map(w.data(), w.size());
}

inline PrecoderStack unstack(const Eigen::VectorXcd& w, int antennas, int users) {
  if (w.size() != static_cast<Eigen::Index>(antennas) * users)
    throw ShapeError("precoder vector has wrong length");
  return PrecoderStack::Map(w.data(), antennas, users);
}

inline double transmit_sum_power(const PrecoderStack& w) { return w.squaredNorm(); }

/// Radiated power of an active surface: signal through the surface plus
/// amplified thermal noise.
inline double reflect_power(const Eigen::VectorXcd& phi, const Eigen::MatrixXcd& G,
                            const PrecoderStack& w, double delta_sq) {
  if (G.rows() != phi.size() || G.cols() != w.rows())
    throw ShapeError("reflect_power: inconsistent dimensions");
  // || diag(conj(phi)) G w_k ||^2 summed over users
  double p = (phi.conjugate().asDiagonal() * (G * w)).squaredNorm();
  return p + delta_sq * phi.squaredNorm();
}

struct TpcBreakdown {
  double p_bs = 0.0;
  double p_rs[2] = {0.0, 0.0};
  double total() const { return p_bs + p_rs[0] + p_rs[1]; }
};

inline TpcBreakdown tpc(const PrecoderStack& w, const Eigen::VectorXcd& phi1,
                        const Eigen::VectorXcd& phi2, const ChannelSet& ch,
                        const HybridRisConfig& ris, const PowerParams& bs) {
  TpcBreakdown out;
  out.p_bs = transmit_sum_power(w) / bs.xi + bs.w_bs;
  const Eigen::VectorXcd* phis[2] = {&phi1, &phi2};
  for (int s = 0; s < 2; ++s) {
    if (ris.arch[s].active()) {
      out.p_rs[s] = reflect_power(*phis[s], ch.G[s], w, ris.delta_sq[s]) / ris.zeta[s] +
                    ris.surface_static_power(s);
    } else {
      out.p_rs[s] = ris.surface_static_power(s);
    }
  }
  return out;
}

/// Receiver-side amplification-noise power contributed by surface s:
/// delta_s^2 ||f_{k,s}^H Phi_s||^2.
inline double surface_noise_at_user(const Eigen::VectorXcd& f,
                                    const Eigen::VectorXcd& phi, double delta_sq) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    acc += std::norm(f[i]) * std::norm(phi[i]);
  return delta_sq * acc;
}

/// SINR of user k. Active surfaces contribute amplification noise; with a
/// passive second surface this reduces to the active/passive form.
inline double sinr(int user, const PrecoderStack& w, const ChannelSet& ch,
                   const Eigen::VectorXcd& phi1, const Eigen::VectorXcd& phi2,
                   const HybridRisConfig& ris, double sigma_sq) {
  const Eigen::VectorXcd h = effective_channel(user, ch, phi1, phi2);
  const Eigen::RowVectorXcd hw = h.adjoint() * w;
  double interference = 0.0;
  for (int i = 0; i < w.cols(); ++i)
    if (i != user) interference += std::norm(hw[i]);
  double noise = sigma_sq;
  const Eigen::VectorXcd* phis[2] = {&phi1, &phi2};
  for (int s = 0; s < 2; ++s)
    if (ris.arch[s].active())
      noise += surface_noise_at_user(ch.f[user][s], *phis[s], ris.delta_sq[s]);
  return std::norm(hw[user]) / (interference + noise);
}

struct RateAndEe {
  double sum_rate = 0.0;  // bps/Hz
  double ee = 0.0;        // bps/Hz/W
};

inline RateAndEe sum_rate_and_ee(const PrecoderStack& w, const ChannelSet& ch,
                                 const Eigen::VectorXcd& phi1,
                                 const Eigen::VectorXcd& phi2,
                                 const HybridRisConfig& ris, const PowerParams& bs,
                                 double sigma_sq) {
  RateAndEe out;
  for (int k = 0; k < ch.users(); ++k)
    out.sum_rate += std::log2(1.0 + sinr(k, w, ch, phi1, phi2, ris, sigma_sq));
  out.ee = out.sum_rate / tpc(w, phi1, phi2, ch, ris, bs).total();
  return out;
}

}  // namespace hris

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "hris/errors.hpp"
#include "hris/rng.hpp"
#include "hris/units.hpp"

// Channel generation: quasi-static flat fading with distance-dependent
// variance, plus composition of the effective BS -> user channel through
// the two reflecting sub-surfaces.

namespace hris {

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Geometry {
  Vec2 bs{0.0, -60.0};
  Vec2 ris{300.0, 10.0};
  double cluster_center_d = 300.0;  // cluster center on the x-axis (m)
  double cluster_radius = 5.0;      // m

  void validate() const {
    if (cluster_radius <= 0.0 || cluster_center_d <= 0.0)
      throw InvariantViolation("geometry needs positive D and r");
  }
};

enum class LinkType { bs_ris, ris_user, bs_user };

/// Distance-dependent path loss in dB; the two-slope model is not
/// calibrated below one meter.
inline double path_loss_db(double d, LinkType link) {
  if (d < 1.0) throw InvalidDistance("path-loss model undefined below 1 m");
  switch (link) {
    case LinkType::bs_ris:
    case LinkType::ris_user:
      return 37.3 + 22.0 * std::log10(d);
    case LinkType::bs_user:
      return 41.2 + 28.7 * std::log10(d);
  }
  return 0.0;
}

inline double path_gain(double d, LinkType link) {
  return db_to_linear(-path_loss_db(d, link));
}

enum class FadingKind { rayleigh, rician, pure_los };

struct FadingSpec {
  FadingKind kind = FadingKind::rayleigh;
  double kappa = 0.0;  // linear Rician factor

  static FadingSpec rayleigh() { return {FadingKind::rayleigh, 0.0}; }
  static FadingSpec rician(double kappa_linear) {
    if (kappa_linear < 0.0) throw InvariantViolation("Rician factor must be >= 0");
    return {FadingKind::rician, kappa_linear};
  }
  static FadingSpec pure_los() { return {FadingKind::pure_los, 0.0}; }
};

/// Draws a rows x cols channel matrix with per-entry variance `variance`.
/// The LoS component uses unit-modulus entries with phases drawn once per
/// link from the stream (no array-response model; the asymptotic laws
/// depend only on entry magnitudes).
inline Eigen::MatrixXcd sample_channel(int rows, int cols, double variance,
                                       const FadingSpec& fading, Rng& rng) {
  if (variance <= 0.0) throw InvariantViolation("channel variance must be positive");
  Eigen::MatrixXcd h(rows, cols);
  const double amp = std::sqrt(variance);
  switch (fading.kind) {
    case FadingKind::rayleigh:
      for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) h(i, j) = rng.cgaussian(variance);
      break;
    case FadingKind::pure_los:
      for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) h(i, j) = std::polar(amp, rng.angle());
      break;
    case FadingKind::rician: {
      const double los_w = std::sqrt(fading.kappa / (1.0 + fading.kappa));
      const double nlos_var = variance / (1.0 + fading.kappa);
      for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) h(i, j) = std::polar(los_w * amp, rng.angle());
      for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) h(i, j) += rng.cgaussian(nlos_var);
      break;
    }
  }
  return h;
}

/// One realization of every link: direct g_k (M), incident G_s (N_s x M),
/// reflected f_{k,s} (N_s).
struct ChannelSet {
  std::vector<Eigen::VectorXcd> g;               // per user
  std::array<Eigen::MatrixXcd, 2> G;             // per surface
  std::vector<std::array<Eigen::VectorXcd, 2>> f;  // per user, per surface

  int users() const { return static_cast<int>(g.size()); }
  int antennas() const { return g.empty() ? 0 : static_cast<int>(g[0].size()); }
  int surface_elements(int s) const { return static_cast<int>(G[s].rows()); }
};

/// h_k with h_k^H = g_k^H + sum_s f_{k,s}^H Phi_s G_s, where Phi_s is the
/// diagonal matrix whose conjugate diagonal is the stored phi_s.
inline Eigen::VectorXcd effective_channel(const Eigen::VectorXcd& g,
                                          const std::array<Eigen::MatrixXcd, 2>& G,
                                          const std::array<Eigen::VectorXcd, 2>& f,
                                          const Eigen::VectorXcd& phi1,
                                          const Eigen::VectorXcd& phi2) {
  Eigen::VectorXcd h = g;
  const Eigen::VectorXcd* phis[2] = {&phi1, &phi2};
  for (int s = 0; s < 2; ++s) {
    if (G[s].rows() == 0) continue;
    if (G[s].cols() != g.size() || f[s].size() != G[s].rows() ||
        phis[s]->size() != G[s].rows())
      throw ShapeError("effective_channel: inconsistent dimensions");
    // h += G^H * (phi .* f)   (adjoint of f^H diag(conj(phi)) G)
    h += G[s].adjoint() * phis[s]->cwiseProduct(f[s]);
  }
  return h;
}

inline Eigen::VectorXcd effective_channel(int user, const ChannelSet& ch,
                                          const Eigen::VectorXcd& phi1,
                                          const Eigen::VectorXcd& phi2) {
  return effective_channel(ch.g[user], ch.G, ch.f[user], phi1, phi2);
}

/// K user positions uniform on the disk of radius r centered at (D, 0).
inline std::vector<Vec2> drop_users(const Geometry& geom, int users, Rng& rng) {
  geom.validate();
  std::vector<Vec2> out(users);
  for (auto& p : out) {
    const double rad = geom.cluster_radius * std::sqrt(rng.uniform());
    const double ang = rng.angle();
    p = {geom.cluster_center_d + rad * std::cos(ang), rad * std::sin(ang)};
  }
  return out;
}

/// Samples all links of a multi-user scenario. Per-entry variances come
/// from the path-loss model applied to the geometry, so rho^2 of each link
/// equals its linear path gain.
inline ChannelSet sample_channel_set(const Geometry& geom, int antennas, int users,
                                     int n1, int n2, const FadingSpec& fading,
                                     Rng& rng) {
  ChannelSet ch;
  const auto positions = drop_users(geom, users, rng);
  const double var_bs_ris = path_gain(distance(geom.bs, geom.ris), LinkType::bs_ris);
  const int ns[2] = {n1, n2};
  for (int s = 0; s < 2; ++s)
    ch.G[s] = sample_channel(ns[s], antennas, var_bs_ris, fading, rng);
  ch.g.resize(users);
  ch.f.resize(users);
  for (int k = 0; k < users; ++k) {
    const double var_direct =
        path_gain(distance(geom.bs, positions[k]), LinkType::bs_user);
    const double var_refl =
        path_gain(distance(geom.ris, positions[k]), LinkType::ris_user);
    ch.g[k] = sample_channel(antennas, 1, var_direct, fading, rng).col(0);
    for (int s = 0; s < 2; ++s)
      ch.f[k][s] = sample_channel(ns[s], 1, var_refl, fading, rng).col(0);
  }
  return ch;
}

}  // namespace hris

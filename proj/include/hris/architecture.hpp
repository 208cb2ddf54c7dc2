#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "hris/errors.hpp"

// Hybrid RIS surface architectures and the per-surface reflection
// coefficient vectors. A surface is passive (unit-modulus elements),
// fully-connected active (one amplifier per element) or sub-connected
// active (one amplifier shared by each partition of T consecutive
// elements; common amplitude per partition, individual phases).

namespace hris {

using RsBeamforming = Eigen::VectorXcd;

enum class SurfaceKind { passive, fc_active, sc_active };

struct RsArchitecture {
  SurfaceKind kind = SurfaceKind::passive;
  int partitions = 1;  // L, sc_active only
  double beta_max = std::numeric_limits<double>::infinity();

  static RsArchitecture passive() { return {SurfaceKind::passive, 1, 1.0}; }
  static RsArchitecture fc(double beta_max = std::numeric_limits<double>::infinity()) {
    return {SurfaceKind::fc_active, 1, beta_max};
  }
  static RsArchitecture sc(int partitions,
                           double beta_max = std::numeric_limits<double>::infinity()) {
    return {SurfaceKind::sc_active, partitions, beta_max};
  }

  bool active() const { return kind != SurfaceKind::passive; }

  void validate(int n_elements) const {
    if (kind == SurfaceKind::sc_active) {
      if (partitions < 1)
        throw InvalidArchitecture("sc_active surface needs at least one partition");
      if (n_elements % partitions != 0)
        throw InvalidArchitecture("partition count " + std::to_string(partitions) +
                                  " does not divide surface size " +
                                  std::to_string(n_elements));
    }
    if (active() && std::isfinite(beta_max) && beta_max <= 1.0)
      throw InvalidArchitecture("finite amplitude cap must exceed 1 (amplification)");
  }
};

/// Binary N x L map from partitions to elements (I_L kron 1_T).
struct CouplingMatrix {
  int partitions = 0;  // L
  int partition_size = 0;  // T

  int rows() const { return partitions * partition_size; }
  int cols() const { return partitions; }
  int entry(int n, int l) const { return (n / partition_size == l) ? 1 : 0; }

  Eigen::MatrixXi dense() const {
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(rows(), cols());
    for (int n = 0; n < rows(); ++n) m(n, n / partition_size) = 1;
    return m;
  }
};

inline CouplingMatrix coupling_matrix(int partitions, int partition_size) {
  if (partitions < 1 || partition_size < 1)
    throw InvalidArchitecture("coupling matrix needs L >= 1 and T >= 1");
  return {partitions, partition_size};
}

/// phi_n = beta_tilde[l(n)] / sqrt(T) * exp(j theta_n), l(n) the partition
/// of element n. The 1/sqrt(T) models equal power split across the T
/// elements fed by one shared amplifier.
inline RsBeamforming assemble_sc_phi(
    const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& theta,
    double beta_max = std::numeric_limits<double>::infinity()) {
  const int partitions = static_cast<int>(beta_tilde.size());
  const int n = static_cast<int>(theta.size());
  if (partitions < 1 || n % partitions != 0)
    throw ShapeError("theta length must be a positive multiple of beta_tilde length");
  const int t = n / partitions;
  const double scale = 1.0 / std::sqrt(static_cast<double>(t));
  for (int l = 0; l < partitions; ++l) {
    if (beta_tilde[l] < 0.0)
      throw AmplitudeExceedsCap("partition amplitude must be nonnegative");
    if (beta_tilde[l] > beta_max * (1.0 + 1e-15))
      throw AmplitudeExceedsCap("partition amplitude " + std::to_string(beta_tilde[l]) +
                                " exceeds cap " + std::to_string(beta_max));
  }
  RsBeamforming phi(n);
  for (int i = 0; i < n; ++i)
    phi[i] = std::polar(beta_tilde[i / t] * scale, theta[i]);
  return phi;
}

struct ScDecomposition {
  Eigen::VectorXd beta_tilde;  // per-partition amplitudes, sqrt(T)-scaled back
  Eigen::VectorXd theta;       // per-element phases
  double deviation = 0.0;      // max within-partition amplitude spread

  /// Physical phase-shifter settings; the signal passes each shifter on
  /// the forward and the reverse path, so the hardware phase is half the
  /// reflection phase. Report-only.
  Eigen::VectorXd shifter_settings() const { return 0.5 * theta; }
};

/// Inverse of assemble_sc_phi. For inputs that are not exactly
/// SC-structured the partition amplitude is the within-partition mean and
/// the structural deviation (largest amplitude spread) is reported rather
/// than thrown, so callers can measure projection distance.
inline ScDecomposition decompose_phi(const RsBeamforming& phi, int partitions) {
  const int n = static_cast<int>(phi.size());
  if (partitions < 1 || n % partitions != 0)
    throw ShapeError("phi length must be a positive multiple of the partition count");
  const int t = n / partitions;
  ScDecomposition out;
  out.beta_tilde.resize(partitions);
  out.theta.resize(n);
  for (int i = 0; i < n; ++i) out.theta[i] = std::arg(phi[i]);
  const double root_t = std::sqrt(static_cast<double>(t));
  for (int l = 0; l < partitions; ++l) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int i = l * t; i < (l + 1) * t; ++i) {
      const double a = std::abs(phi[i]);
      sum += a;
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    out.beta_tilde[l] = root_t * (sum / t);
    out.deviation = std::max(out.deviation, hi - lo);
  }
  return out;
}

/// Static (DC + phase-shifter) power of one surface in watts.
inline double static_power(const RsArchitecture& arch, int n_elements, double p_ps,
                           double p_dc) {
  arch.validate(n_elements);
  switch (arch.kind) {
    case SurfaceKind::passive:
      return n_elements * p_ps;
    case SurfaceKind::fc_active:
      return n_elements * (p_ps + p_dc);
    case SurfaceKind::sc_active:
      return n_elements * p_ps + arch.partitions * p_dc;
  }
  return 0.0;
}

inline int amplifier_count(const RsArchitecture& arch, int n_elements) {
  switch (arch.kind) {
    case SurfaceKind::passive:
      return 0;
    case SurfaceKind::fc_active:
      return n_elements;
    case SurfaceKind::sc_active:
      return arch.partitions;
  }
  return 0;
}

/// Nearest feasible beamforming vector for the given architecture,
/// phases preserved. Passive: unit amplitudes. FC: amplitudes clipped to
/// beta_max. SC: per-partition common amplitude (the within-partition mean
/// minimizes squared deviation), clipped to beta_max/sqrt(T).
inline RsBeamforming project_to_architecture(const RsBeamforming& phi,
                                             const RsArchitecture& arch) {
  const int n = static_cast<int>(phi.size());
  arch.validate(n);
  RsBeamforming out(n);
  switch (arch.kind) {
    case SurfaceKind::passive:
      for (int i = 0; i < n; ++i) out[i] = std::polar(1.0, std::arg(phi[i]));
      break;
    case SurfaceKind::fc_active:
      for (int i = 0; i < n; ++i) {
        const double a = std::min(std::abs(phi[i]), arch.beta_max);
        out[i] = std::polar(a, std::arg(phi[i]));
      }
      break;
    case SurfaceKind::sc_active: {
      const int t = n / arch.partitions;
      const double cap = arch.beta_max / std::sqrt(static_cast<double>(t));
      for (int l = 0; l < arch.partitions; ++l) {
        double mean = 0.0;
        for (int i = l * t; i < (l + 1) * t; ++i) mean += std::abs(phi[i]);
        mean = std::min(mean / t, cap);
        for (int i = l * t; i < (l + 1) * t; ++i)
          out[i] = std::polar(mean, std::arg(phi[i]));
      }
      break;
    }
  }
  return out;
}

/// Largest violation of the architecture's structural invariants
/// (unit modulus for passive, amplitude cap, common partition amplitude).
inline double structural_deviation(const RsBeamforming& phi, const RsArchitecture& arch) {
  const int n = static_cast<int>(phi.size());
  arch.validate(n);
  double dev = 0.0;
  switch (arch.kind) {
    case SurfaceKind::passive:
      for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(std::abs(phi[i]) - 1.0));
      break;
    case SurfaceKind::fc_active:
      for (int i = 0; i < n; ++i)
        dev = std::max(dev, std::max(0.0, std::abs(phi[i]) - arch.beta_max));
      break;
    case SurfaceKind::sc_active: {
      dev = decompose_phi(phi, arch.partitions).deviation;
      const int t = n / arch.partitions;
      const double cap = arch.beta_max / std::sqrt(static_cast<double>(t));
      for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(phi[i]) - cap);
      break;
    }
  }
  return dev;
}

/// Element split and per-surface parameters of a two-surface hybrid RIS.
struct HybridRisConfig {
  int n_total = 0;            // N
  double split = 0.5;         // a, fraction of elements on surface 1
  RsArchitecture arch[2];
  double delta_sq[2] = {0.0, 0.0};  // amplification-noise power (W)
  double zeta[2] = {0.909, 0.909};  // amplifier efficiency
  double p_ps = 0.0;                // per phase shifter (W)
  double p_dc = 0.0;                // per amplifier DC bias (W)
  double p_rs_max[2] = {0.0, 0.0};  // per-surface TPC budget (W)

  int n1() const { return static_cast<int>(std::lround(split * n_total)); }
  int n2() const { return n_total - n1(); }
  int n_surface(int s) const { return s == 0 ? n1() : n2(); }

  void validate() const {
    const double n1_exact = split * n_total;
    if (n_total < 2 || split <= 0.0 || split >= 1.0)
      throw InvariantViolation("need N >= 2 and split fraction a in (0,1)");
    if (std::abs(n1_exact - std::round(n1_exact)) > 1e-9)
      throw InvariantViolation("a*N = " + std::to_string(n1_exact) +
                               " is not an integer element count");
    if (n1() < 1 || n2() < 1)
      throw InvariantViolation("both surfaces need at least one element");
    for (int s = 0; s < 2; ++s) {
      arch[s].validate(n_surface(s));
      if (arch[s].active()) {
        if (!(zeta[s] > 0.0 && zeta[s] < 1.0))
          throw InvariantViolation("amplifier efficiency must lie in (0,1)");
        if (delta_sq[s] < 0.0) throw InvariantViolation("negative noise power");
        if (p_rs_max[s] <= 0.0)
          throw InvariantViolation("active surface needs a positive power budget");
      }
    }
  }

  double surface_static_power(int s) const {
    return static_power(arch[s], n_surface(s), p_ps, p_dc);
  }

  /// Radiated (reflect) power budget of an active surface after static
  /// consumption and amplifier efficiency.
  double reflect_budget(int s) const {
    return zeta[s] * (p_rs_max[s] - surface_static_power(s));
  }
};

}  // namespace hris

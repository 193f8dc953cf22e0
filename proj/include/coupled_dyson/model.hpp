#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace cdyson {

/// k coupled N x N matrix OU processes
///   dH_p = (beta N)^{-1/2} dB_p + (-gamma_pp H_p + sum_{q != p} gamma_pq H_q) dt
/// with noise cross-correlation rho_pq between the B_p.
struct CouplingModel {
  int k = 1;
  int N = 1;
  double beta = 1.0;
  Eigen::MatrixXd gamma;  // diagonal: damping, off-diagonal: coupling
  Eigen::MatrixXd rho;    // unit-diagonal correlation

  /// A_pp = -gamma_pp, A_pq = gamma_pq.
  Eigen::MatrixXd drift_matrix() const;

  /// Two processes with gamma_pp = 1/2, gamma_12 = gamma_21 = g, rho_12 = r.
  static CouplingModel symmetric_pair(double g, double r, int N = 1, double beta = 1.0);
  /// Single process with damping gamma_11.
  static CouplingModel single(double damping, int N = 1, double beta = 1.0);
};

struct ValidationReport {
  bool stable = false;
  std::vector<std::complex<double>> drift_eigenvalues;
  double max_real_part = 0.0;
};

inline constexpr double kStabilityMargin = 1e-12;
inline constexpr double kCorrelationTolerance = 1e-10;

/// Checks shapes and rho (symmetric, unit diagonal, PSD); reports drift
/// eigenvalues and whether all real parts are below -kStabilityMargin.
ValidationReport validate_model(const CouplingModel& model);

/// Throws unless the model is stable.
void require_stable(const CouplingModel& model);

}  // namespace cdyson

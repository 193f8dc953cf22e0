#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coupled_dyson/model.hpp"
#include "coupled_dyson/rng.hpp"

namespace cdyson {

/// Square-root factor L of a correlation (or covariance) matrix, L L^T = C.
/// Cholesky when C is positive definite, otherwise pivoted LDL^T so that
/// rank-deficient C (e.g. rho_12 = +-1) is still accepted.
class CorrelationFactor {
 public:
  explicit CorrelationFactor(const Eigen::MatrixXd& c);

  const Eigen::MatrixXd& matrix() const { return factor_; }
  int size() const { return static_cast<int>(factor_.rows()); }

  /// L z for z drawn iid N(0, 1) from `stream`.
  Eigen::VectorXd sample(NormalStream& stream) const;
  void sample_into(NormalStream& stream, double* out, double* scratch) const;

 private:
  Eigen::MatrixXd factor_;
};

/// Increments dW with covariance rho * dt.
Eigen::VectorXd correlated_scalar_increments(const Eigen::MatrixXd& rho, double dt,
                                             NormalStream& stream);

/// Symmetric N x N increment of B (before the (beta N)^{-1/2} prefactor):
/// off-diagonal variance dt, diagonal variance 2 dt. Real symmetric only.
Eigen::MatrixXd symmetric_matrix_increment(int N, double beta, double dt,
                                           NormalStream& stream);

/// k symmetric increments with E[dB_p,ij dB_q,ij] = rho_pq dt (i < j) and
/// 2 rho_pq dt on the diagonal. Unscaled, as above.
std::vector<Eigen::MatrixXd> correlated_matrix_increments(const CouplingModel& model,
                                                          double dt,
                                                          NormalStream& stream);
void correlated_matrix_increments(const CorrelationFactor& factor, int N, double dt,
                                  NormalStream& stream, std::vector<Eigen::MatrixXd>& out);

}  // namespace cdyson

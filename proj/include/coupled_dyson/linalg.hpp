#pragma once

#include <Eigen/Dense>

namespace cdyson {

/// e^M by scaling-and-squaring with Pade approximants (Eigen, order up to 13).
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

/// Solves A X + X A^T + Q = 0 through the Kronecker-vectorized linear system.
/// Intended for small k; A must be stable for a unique symmetric solution.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Exact discretization of dx = A x dt + dW, Cov(dW) = Q dt over one step h:
/// x(t+h) = F x(t) + e, Cov(e) = S (Van Loan block exponential).
struct LinearTransition {
  Eigen::MatrixXd F;
  Eigen::MatrixXd S;
};
LinearTransition discretize_linear_sde(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                       double h);

}  // namespace cdyson

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cdyson {

/// Two symmetric coupled traces: A = [[-1/2, g], [g, -1/2]], Q = 2 [[1, r], [r, 1]].
struct LdpModel {
  double gamma = 0.0;
  double rho = 0.0;

  Eigen::Matrix2d A() const;
  Eigen::Matrix2d Q() const;
  /// Stationary covariance; throws "degenerate" unless |g| < 1/2 and |r| < 1.
  Eigen::Matrix2d sigma() const;
  Eigen::Matrix2d sigma_inverse() const;
};

/// I(x, y) = [(1 + 2gr)(x^2 + y^2) - 2(r + 2g) x y] / (4 (1 - r^2)).
double rate_function(double x, double y, const LdpModel& model);

/// (1/2) v^T Sigma^{-1} v from the numerically inverted covariance.
double quadratic_rate(const Eigen::Vector2d& v, const LdpModel& model);

/// H = (1/2) p^T Q p + p^T A x.
double hamiltonian(const Eigen::Vector2d& p, const Eigen::Vector2d& x, const LdpModel& model);

struct ActionEstimates {
  double quadrature = 0.0;  // trapezoid of p.xdot - H
  double endpoint = 0.0;    // (1/2) p(T) . x(T)
  bool mismatch = false;    // |quadrature - endpoint| > 1e-3 (1 + |endpoint|)
};

struct InstantonSolution {
  std::vector<double> times;
  std::vector<Eigen::Vector2d> x_path;
  std::vector<Eigen::Vector2d> p_path;
  Eigen::Vector2d p0 = Eigen::Vector2d::Zero();
  double action = 0.0;  // endpoint estimate
  double terminal_error = 0.0;
  double hamiltonian_drift = 0.0;  // max |H(t) - H(0)| along the path
  ActionEstimates estimates;
};

/// Solves x' = A x + Q p, p' = -A^T p with x(0) = 0 and x(T) = target through
/// the block exponential of [[A, Q], [0, -A^T]]: p(0) = M12^{-1} target.
InstantonSolution solve_instanton(const Eigen::Vector2d& target, const LdpModel& model,
                                  double T = 20.0, int steps = 2000);

ActionEstimates evaluate_action(const InstantonSolution& solution, const LdpModel& model);

struct PhaseRow {
  double gamma = 0.0;
  double det_sigma_inverse = 0.0;  // numerical
  double det_formula = 0.0;        // (1/4 - g^2) / (1 - r^2)
  Eigen::Vector2d null_direction = Eigen::Vector2d::Zero();  // softest eigenvector of Sigma^{-1}
  double alignment_plus = 0.0;   // |<n, (1, 1)/sqrt 2>|
  double alignment_minus = 0.0;  // |<n, (1, -1)/sqrt 2>|
};

std::vector<PhaseRow> phase_diagnostics(const std::vector<double>& gammas, double rho);

/// g_c(gamma) / g_c(0) = (1 + gamma^2 / (1 - 4 gamma^2))^{1/2}.
double neural_stability_shift(double gamma);

}  // namespace cdyson

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "coupled_dyson/eigen_sde.hpp"
#include "coupled_dyson/model.hpp"
#include "coupled_dyson/rng.hpp"

namespace cdyson {

/// Time series of k traces tau_p(t).
struct TracePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool unstable_model = false;  // transient study of an unstable drift
};

enum class TraceScheme {
  kEulerMaruyama,
  kExact,  // exact Gaussian transition (exponential integrator)
};

struct TraceSimOptions {
  double T = 1.0;
  double dt = 1e-3;
  int record_every = 1;
  TraceScheme scheme = TraceScheme::kEulerMaruyama;
  double burn_in = 0.0;     // simulated but not recorded; time restarts at 0
  Eigen::VectorXd tau0;     // empty: zeros
};

/// Trace-level drift and noise of the matrix system: tau' = A tau + noise with
/// noise covariance Q = (2/beta) rho. For k = 2 this is the coupled trace flow;
/// for general k it is obtained by summing the matrix SDE diagonals.
Eigen::MatrixXd trace_noise_covariance(const CouplingModel& model);

/// Single Dyson trace flow d tau = sqrt(2/beta) dB - tau/2 dt.
/// beta = +infinity switches the noise off.
TracePath simulate_trace_flow(double tau0, double beta, double T, double dt,
                              const SeededRng& rng, int record_every = 1);

TracePath simulate_coupled_traces(const CouplingModel& model, const TraceSimOptions& options,
                                  const SeededRng& rng);

/// Exact Gaussian law of the linear trace process started from tau0.
class GaussianMoments {
 public:
  GaussianMoments(Eigen::MatrixXd drift, Eigen::MatrixXd noise, Eigen::VectorXd tau0);

  Eigen::VectorXd mean(double t) const;
  /// Cov(tau(t), tau(s)).
  Eigen::MatrixXd covariance(double t, double s) const;
  /// Solution of A S + S A^T + Q = 0; empty when the drift is not stable.
  const std::optional<Eigen::MatrixXd>& stationary_covariance() const { return stationary_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd q_;
  Eigen::VectorXd tau0_;
  std::optional<Eigen::MatrixXd> stationary_;
};

/// k = 1: mean e^{-t/2} tau0, Cov = (2/beta)(e^{-|t-s|/2} - e^{-(t+s)/2}).
GaussianMoments exact_trace_moments(double tau0, double beta);
GaussianMoments coupled_trace_moments(const CouplingModel& model, Eigen::VectorXd tau0);

struct StationaryCovariance {
  Eigen::MatrixXd sigma;
  double determinant = 0.0;
  double lyapunov_residual = 0.0;      // max-norm of A S + S A^T + Q
  std::optional<double> closed_form_gap;  // max-norm vs. the 2-process closed form
};

/// Closed form for gamma_pp = 1/2, gamma_12 = gamma_21 = g, rho_12 = r, beta = 1:
/// S = [[1 + 2gr, r + 2g], [r + 2g, 1 + 2gr]] / (2 (1/4 - g^2)).
Eigen::Matrix2d closed_form_stationary_covariance(double g, double r);

/// Numerical Lyapunov solve for any stable model, cross-checked against the
/// closed form when the model has the symmetric 2-process shape.
StationaryCovariance stationary_covariance(const CouplingModel& model);

/// -N damping - (1/N) sum_i sum_{j != i} (l_i - l_j)^{-2}.
double divergence_of_drift(const Eigen::VectorXd& lambda, double damping = 0.5);

/// Phase-space volume accounting along an eigenvalue path.
struct VolumeLedger {
  std::vector<double> times;
  std::vector<double> log_jacobian;
  std::vector<double> base_rate_term;   // -N t sum_p gamma_pp
  std::vector<double> repulsion_term;   // trapezoid integral of the repulsion part, <= 0
  double log_j0 = 0.0;
};

VolumeLedger integrate_volume(const EigenPath& path, const CouplingModel& model, double j0 = 1.0);

/// log J_t <= log J_0 + base_rate_term at every recorded time.
bool liouville_inequality_holds(const VolumeLedger& ledger, double tolerance = 0.0);

}  // namespace cdyson

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "coupled_dyson/model.hpp"
#include "coupled_dyson/rng.hpp"

namespace cdyson {

/// Truncated repulsion kernel: 1/x for |x| >= 1/R, R^2 x inside. Odd,
/// continuous, |phi_R| <= R.
inline double phi_R(double x, double R) {
  const double inv = 1.0 / x;  // unconditional so the caller's loop vectorizes
  return (x >= 1.0 / R || x <= -1.0 / R) ? inv : R * R * x;
}

/// Ordered eigenvalues of k coupled processes at time t.
struct EigenEnsembleState {
  double t = 0.0;
  std::vector<Eigen::VectorXd> lambda;  // k vectors, each nondecreasing
  std::vector<double> min_gap;          // smallest adjacent gap per process
  double R = 0.0;
  std::int64_t rejections = 0;  // proposals refused for ordering violations
  std::int64_t resorts = 0;     // steps accepted at dt_min after re-sorting

  int k() const { return static_cast<int>(lambda.size()); }
  int N() const { return lambda.empty() ? 0 : static_cast<int>(lambda.front().size()); }
};

struct EigenSdeOptions {
  double R = 0.0;        // <= 0 selects 10 N
  int max_halvings = 10;  // dt_min = dt / 2^max_halvings
};

/// Builds a state from explicit vectors (sorted, gaps checked).
EigenEnsembleState make_eigen_state(std::vector<Eigen::VectorXd> lambda, double R,
                                    double t = 0.0);

/// lambda_i = eps (i - (N+1)/2) / N.
Eigen::VectorXd perturbed_zero_start(int N, double eps = 1e-4);

/// (1/N) sum_{j != i} phi_R(lambda_i - lambda_j) for every i.
Eigen::VectorXd repulsion_drift(const Eigen::VectorXd& lambda, double R);

/// Euler-Maruyama for
///   d lambda_i^p = N^{-1/2} dW_{p,i} + (-g_pp l_i^p + sum_q g_pq l_i^q
///                  + (1/N) sum_j phi_R(l_i^p - l_j^p)) dt,
///   E[dW_{p,i} dW_{q,j}] = 2 rho_pq delta_ij dt.
/// A proposal that breaks ordering is refined by Brownian-bridge halving down
/// to dt_min; at dt_min the result is re-sorted and counted.
class EigenIntegrator {
 public:
  EigenIntegrator(const CouplingModel& model, EigenSdeOptions options = {});

  double R() const { return R_; }

  /// Advances `state` by dt using the increment keyed by (rng, step_index).
  void step(EigenEnsembleState& state, double dt, const SeededRng& rng,
            std::uint64_t step_index) const;

 private:
  void advance(EigenEnsembleState& state, double h, const Eigen::MatrixXd& dw,
               const SeededRng& rng, std::uint64_t step_index, std::uint64_t node,
               int depth, const Eigen::MatrixXd* known_drift = nullptr) const;
  void drift(const EigenEnsembleState& state, Eigen::MatrixXd& out) const;

  CouplingModel model_;
  EigenSdeOptions options_;
  double R_;
  Eigen::MatrixXd factor_;  // square root of rho
};

EigenEnsembleState step_eigen_system(const EigenEnsembleState& state,
                                     const CouplingModel& model, double dt,
                                     const SeededRng& rng, std::uint64_t step_index,
                                     EigenSdeOptions options = {});

/// (1/N) sum_p sum_i (l_i^p)^2 - (1/N^2) sum_p sum_{i != j} log|l_i^p - l_j^p|;
/// +infinity on collision.
double lyapunov_f(const EigenEnsembleState& state);

/// Time series of spectra; spectra[n][p] is process p at times[n].
struct EigenPath {
  std::vector<double> times;
  std::vector<std::vector<Eigen::VectorXd>> spectra;
};

struct EigenRunOptions {
  double T = 1.0;
  double dt = 1e-3;
  int record_every = 1;
  bool record_path = true;
  EigenSdeOptions sde;
  double bound_slope = 2.0;  // max|l| <= 1 + max|l(0)| + C t
};

struct EigenRunResult {
  EigenPath path;
  std::vector<double> lyapunov;  // f at recorded times
  EigenEnsembleState final_state;
  bool bound_violated = false;
  double max_abs_eigenvalue = 0.0;
};

EigenRunResult run_eigen_sde(const CouplingModel& model,
                             const std::vector<Eigen::VectorXd>& initial,
                             const EigenRunOptions& options, const SeededRng& rng);

}  // namespace cdyson

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "coupled_dyson/model.hpp"
#include "coupled_dyson/noise.hpp"
#include "coupled_dyson/rng.hpp"

namespace cdyson {

/// k real symmetric N x N matrices H_p at time t.
struct MatrixEnsembleState {
  double t = 0.0;
  std::vector<Eigen::MatrixXd> H;

  int k() const { return static_cast<int>(H.size()); }
  int N() const { return H.empty() ? 0 : static_cast<int>(H.front().rows()); }
};

enum class MatrixScheme {
  kEulerMaruyama,
  kExponential,  // exact linear drift and exactly integrated additive noise
};

/// Stepper for dH_p = (beta N)^{-1/2} dB_p + sum_q A_pq H_q dt. Only the real
/// symmetric case beta = 1 is simulated.
class MatrixIntegrator {
 public:
  MatrixIntegrator(const CouplingModel& model, double dt,
                   MatrixScheme scheme = MatrixScheme::kEulerMaruyama);

  void step(MatrixEnsembleState& state, const SeededRng& rng, std::uint64_t step_index) const;
  double dt() const { return dt_; }

 private:
  CouplingModel model_;
  double dt_;
  MatrixScheme scheme_;
  Eigen::MatrixXd transition_;    // I + A dt, or e^{A dt}
  CorrelationFactor noise_factor_;  // per-entry noise across processes
};

MatrixEnsembleState step_matrix_system(const MatrixEnsembleState& state,
                                       const CouplingModel& model, double dt,
                                       const SeededRng& rng, std::uint64_t step_index,
                                       MatrixScheme scheme = MatrixScheme::kEulerMaruyama);

MatrixEnsembleState zero_matrix_state(const CouplingModel& model);

/// Ascending eigenvalues of every H_p.
std::vector<Eigen::VectorXd> eigenvalues_of(const MatrixEnsembleState& state);

/// tau_p = tr H_p.
Eigen::VectorXd empirical_trace(const MatrixEnsembleState& state);

struct MatrixRunOptions {
  double T = 1.0;
  double dt = 1e-3;
  int record_every = 1;
  MatrixScheme scheme = MatrixScheme::kEulerMaruyama;
  bool record_spectra = false;
  double bound_slope = 2.0;  // max|l| <= 1 + max|l(0)| + C t, checked when spectra are taken
};

struct MatrixRunResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> traces;
  std::vector<std::vector<Eigen::VectorXd>> spectra;  // empty unless requested
  MatrixEnsembleState final_state;
  bool bound_violated = false;
  double max_abs_eigenvalue = 0.0;
};

MatrixRunResult run_matrix_sde(const CouplingModel& model, MatrixEnsembleState initial,
                               const MatrixRunOptions& options, const SeededRng& rng);

}  // namespace cdyson

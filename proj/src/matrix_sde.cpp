#include "coupled_dyson/matrix_sde.hpp"

#include <algorithm>
#include <cmath>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/linalg.hpp"

namespace cdyson {
namespace {

Eigen::MatrixXd checked_model_noise(const CouplingModel& model, double dt, MatrixScheme scheme) {
  validate_model(model);
  if (model.beta != 1.0) fail_argument("matrix sde: only the real symmetric case beta = 1 is simulated");
  if (!(dt > 0.0)) fail_argument("matrix sde: dt must be > 0");
  // Unit-entry noise covariance over one step, before the 1/(beta N) and
  // diagonal factor 2.
  if (scheme == MatrixScheme::kExponential)
    return discretize_linear_sde(model.drift_matrix(), model.rho, dt).S;
  return model.rho * dt;
}

}  // namespace

MatrixIntegrator::MatrixIntegrator(const CouplingModel& model, double dt, MatrixScheme scheme)
    : model_(model),
      dt_(dt),
      scheme_(scheme),
      noise_factor_(checked_model_noise(model, dt, scheme)) {
  const Eigen::MatrixXd a = model_.drift_matrix();
  transition_ = scheme_ == MatrixScheme::kExponential
                    ? expm(a * dt_)
                    : Eigen::MatrixXd(Eigen::MatrixXd::Identity(model_.k, model_.k) + dt_ * a);
}

void MatrixIntegrator::step(MatrixEnsembleState& state, const SeededRng& rng,
                            std::uint64_t step_index) const {
  const int k = model_.k;
  const int n = model_.N;
  if (state.k() != k || state.N() != n) fail_argument("matrix sde: state does not match model");
  const double scale = 1.0 / std::sqrt(model_.beta * n);
  const double off = scale;
  const double diag = scale * std::sqrt(2.0);

  std::vector<Eigen::MatrixXd> next(k, Eigen::MatrixXd::Zero(n, n));
  for (int p = 0; p < k; ++p)
    for (int q = 0; q < k; ++q)
      if (transition_(p, q) != 0.0) next[p].noalias() += transition_(p, q) * state.H[q];

  NormalStream stream = rng.at(step_index, RngDomain::kIncrement);
  Eigen::VectorXd v(k), scratch(k);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i <= j; ++i) {
      noise_factor_.sample_into(stream, v.data(), scratch.data());
      const double s = (i == j) ? diag : off;
      for (int p = 0; p < k; ++p) next[p](i, j) += s * v[p];
    }
  }
  for (auto& m : next) {
    // Noise went into the upper triangle only; mirroring keeps H exactly symmetric.
    m.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
    if (!m.allFinite()) fail_numerical("matrix sde: non-finite entry");
  }
  state.H = std::move(next);
  state.t += dt_;
}

MatrixEnsembleState step_matrix_system(const MatrixEnsembleState& state,
                                       const CouplingModel& model, double dt,
                                       const SeededRng& rng, std::uint64_t step_index,
                                       MatrixScheme scheme) {
  MatrixIntegrator integrator(model, dt, scheme);
  MatrixEnsembleState next = state;
  integrator.step(next, rng, step_index);
  return next;
}

MatrixEnsembleState zero_matrix_state(const CouplingModel& model) {
  MatrixEnsembleState s;
  s.H.assign(model.k, Eigen::MatrixXd::Zero(model.N, model.N));
  return s;
}

std::vector<Eigen::VectorXd> eigenvalues_of(const MatrixEnsembleState& state) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(state.H.size());
  for (const auto& h : state.H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) fail_numerical("eigensolver did not converge");
    out.push_back(es.eigenvalues());
  }
  return out;
}

Eigen::VectorXd empirical_trace(const MatrixEnsembleState& state) {
  Eigen::VectorXd tau(state.k());
  for (int p = 0; p < state.k(); ++p) tau[p] = state.H[p].trace();
  return tau;
}

MatrixRunResult run_matrix_sde(const CouplingModel& model, MatrixEnsembleState initial,
                               const MatrixRunOptions& options, const SeededRng& rng) {
  if (!(options.T >= 0.0)) fail_argument("matrix run: T must be >= 0");
  if (options.record_every < 1) fail_argument("matrix run: record_every must be >= 1");
  MatrixIntegrator integrator(model, options.dt, options.scheme);
  if (initial.H.empty()) initial = zero_matrix_state(model);
  for (const auto& h : initial.H)
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      fail_argument("matrix run: initial matrices must be symmetric");

  MatrixRunResult out;
  double bound0 = 1.0;
  auto record = [&](const MatrixEnsembleState& s) {
    out.times.push_back(s.t);
    out.traces.push_back(empirical_trace(s));
    if (!options.record_spectra) return;
    auto spec = eigenvalues_of(s);
    double m = 0.0;
    for (const auto& v : spec) m = std::max({m, std::abs(v[0]), std::abs(v[v.size() - 1])});
    if (out.spectra.empty()) bound0 = 1.0 + m;
    out.max_abs_eigenvalue = std::max(out.max_abs_eigenvalue, m);
    if (m > bound0 + options.bound_slope * s.t) out.bound_violated = true;
    out.spectra.push_back(std::move(spec));
  };

  MatrixEnsembleState state = std::move(initial);
  state.t = 0.0;
  record(state);
  const auto steps = static_cast<std::int64_t>(std::llround(options.T / options.dt));
  for (std::int64_t n = 0; n < steps; ++n) {
    integrator.step(state, rng, static_cast<std::uint64_t>(n));
    state.t = (n + 1) * options.dt;
    if ((n + 1) % options.record_every == 0 || n + 1 == steps) record(state);
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace cdyson

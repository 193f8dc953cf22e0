#include "coupled_dyson/trace_flow.hpp"

#include <cmath>
#include <limits>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/linalg.hpp"
#include "coupled_dyson/noise.hpp"

namespace cdyson {
namespace {

std::int64_t step_count(double T, double dt) {
  if (!(dt > 0.0)) fail_argument("trace flow: dt must be > 0");
  if (!(T >= 0.0)) fail_argument("trace flow: T must be >= 0");
  return static_cast<std::int64_t>(std::llround(T / dt));
}

}  // namespace

Eigen::MatrixXd trace_noise_covariance(const CouplingModel& model) {
  return (2.0 / model.beta) * model.rho;
}

TracePath simulate_trace_flow(double tau0, double beta, double T, double dt,
                              const SeededRng& rng, int record_every) {
  if (!(beta >= 1.0)) fail_argument("trace flow: beta must be >= 1");
  if (record_every < 1) fail_argument("trace flow: record_every must be >= 1");
  const std::int64_t steps = step_count(T, dt);
  const double sigma = std::isinf(beta) ? 0.0 : std::sqrt(2.0 / beta);
  const double sq = std::sqrt(dt);

  TracePath path;
  path.seed = rng.master_seed;
  path.stream = rng.stream_id;
  double tau = tau0;
  path.times.push_back(0.0);
  path.values.push_back(Eigen::VectorXd::Constant(1, tau));
  for (std::int64_t n = 0; n < steps; ++n) {
    NormalStream s = rng.at(static_cast<std::uint64_t>(n));
    tau += sigma * sq * s.normal() - 0.5 * tau * dt;
    if ((n + 1) % record_every == 0 || n + 1 == steps) {
      path.times.push_back((n + 1) * dt);
      path.values.push_back(Eigen::VectorXd::Constant(1, tau));
    }
  }
  return path;
}

TracePath simulate_coupled_traces(const CouplingModel& model, const TraceSimOptions& options,
                                  const SeededRng& rng) {
  const ValidationReport report = validate_model(model);
  if (options.record_every < 1) fail_argument("traces: record_every must be >= 1");
  const int k = model.k;
  const Eigen::MatrixXd a = model.drift_matrix();
  const Eigen::MatrixXd q = trace_noise_covariance(model);
  const std::int64_t steps = step_count(options.T, options.dt);
  const std::int64_t burn = step_count(options.burn_in, options.dt);

  Eigen::MatrixXd transition;
  Eigen::MatrixXd noise_factor;
  if (options.scheme == TraceScheme::kExact) {
    const LinearTransition lt = discretize_linear_sde(a, q, options.dt);
    transition = lt.F;
    noise_factor = CorrelationFactor(lt.S).matrix();
  } else {
    transition = Eigen::MatrixXd::Identity(k, k) + options.dt * a;
    noise_factor = CorrelationFactor(q).matrix() * std::sqrt(options.dt);
  }

  Eigen::VectorXd tau = options.tau0.size() == 0 ? Eigen::VectorXd::Zero(k) : options.tau0;
  if (tau.size() != k) fail_argument("traces: tau0 must have k entries");

  TracePath path;
  path.seed = rng.master_seed;
  path.stream = rng.stream_id;
  path.unstable_model = !report.stable;

  Eigen::VectorXd z(k);
  auto advance = [&](std::int64_t index) {
    NormalStream s = rng.at(static_cast<std::uint64_t>(index));
    for (int p = 0; p < k; ++p) z[p] = s.normal();
    tau = transition * tau + noise_factor * z;
  };
  for (std::int64_t n = 0; n < burn; ++n) advance(n);
  path.times.push_back(0.0);
  path.values.push_back(tau);
  for (std::int64_t n = 0; n < steps; ++n) {
    advance(burn + n);
    if ((n + 1) % options.record_every == 0 || n + 1 == steps) {
      path.times.push_back((n + 1) * options.dt);
      path.values.push_back(tau);
    }
  }
  return path;
}

GaussianMoments::GaussianMoments(Eigen::MatrixXd drift, Eigen::MatrixXd noise,
                                 Eigen::VectorXd tau0)
    : a_(std::move(drift)), q_(std::move(noise)), tau0_(std::move(tau0)) {
  if (a_.rows() != a_.cols() || q_.rows() != a_.rows() || tau0_.size() != a_.rows())
    fail_argument("gaussian moments: dimension mismatch");
  Eigen::EigenSolver<Eigen::MatrixXd> es(a_, false);
  if (es.eigenvalues().real().maxCoeff() < -kStabilityMargin)
    stationary_ = solve_lyapunov(a_, q_);
}

Eigen::VectorXd GaussianMoments::mean(double t) const { return expm(a_ * t) * tau0_; }

Eigen::MatrixXd GaussianMoments::covariance(double t, double s) const {
  if (t < 0.0 || s < 0.0) fail_argument("gaussian moments: negative time");
  if (t < s) return covariance(s, t).transpose();
  if (s == 0.0) return Eigen::MatrixXd::Zero(a_.rows(), a_.cols());
  // Cov(tau(t), tau(s)) = e^{A (t - s)} Var(tau(s)) for t >= s.
  const Eigen::MatrixXd var_s = discretize_linear_sde(a_, q_, s).S;
  return expm(a_ * (t - s)) * var_s;
}

GaussianMoments exact_trace_moments(double tau0, double beta) {
  if (!(beta >= 1.0)) fail_argument("trace moments: beta must be >= 1");
  return GaussianMoments(Eigen::MatrixXd::Constant(1, 1, -0.5),
                         Eigen::MatrixXd::Constant(1, 1, 2.0 / beta),
                         Eigen::VectorXd::Constant(1, tau0));
}

GaussianMoments coupled_trace_moments(const CouplingModel& model, Eigen::VectorXd tau0) {
  validate_model(model);
  return GaussianMoments(model.drift_matrix(), trace_noise_covariance(model), std::move(tau0));
}

Eigen::Matrix2d closed_form_stationary_covariance(double g, double r) {
  if (!(std::abs(g) < 0.5)) fail_argument("unstable model: |gamma| must be < 1/2");
  Eigen::Matrix2d s;
  s << 1.0 + 2.0 * g * r, r + 2.0 * g, r + 2.0 * g, 1.0 + 2.0 * g * r;
  return s / (2.0 * (0.25 - g * g));
}

StationaryCovariance stationary_covariance(const CouplingModel& model) {
  require_stable(model);
  const Eigen::MatrixXd a = model.drift_matrix();
  const Eigen::MatrixXd q = trace_noise_covariance(model);
  StationaryCovariance out;
  out.sigma = solve_lyapunov(a, q);
  out.determinant = out.sigma.determinant();
  out.lyapunov_residual =
      (a * out.sigma + out.sigma * a.transpose() + q).cwiseAbs().maxCoeff();

  const Eigen::MatrixXd& gm = model.gamma;
  if (model.k == 2 && gm(0, 0) == 0.5 && gm(1, 1) == 0.5 && gm(0, 1) == gm(1, 0)) {
    const Eigen::Matrix2d closed =
        closed_form_stationary_covariance(gm(0, 1), model.rho(0, 1)) / model.beta;
    out.closed_form_gap = (closed - out.sigma).cwiseAbs().maxCoeff();
  }
  return out;
}

double divergence_of_drift(const Eigen::VectorXd& lambda, double damping) {
  const Eigen::Index n = lambda.size();
  if (n == 0) fail_argument("divergence: empty spectrum");
  double rep = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double gap = lambda[i] - lambda[j];
      if (std::abs(gap) < 1e-14) fail_numerical("collision: eigenvalue gap below 1e-14");
      rep += 2.0 / (gap * gap);
    }
  }
  return -static_cast<double>(n) * damping - rep / static_cast<double>(n);
}

VolumeLedger integrate_volume(const EigenPath& path, const CouplingModel& model, double j0) {
  if (!(j0 > 0.0)) fail_argument("volume: J0 must be > 0");
  if (path.times.empty()) fail_argument("volume: empty path");
  const double total_damping = model.gamma.diagonal().sum();
  VolumeLedger ledger;
  ledger.log_j0 = std::log(j0);

  auto repulsion_rate = [&](const std::vector<Eigen::VectorXd>& spectra) {
    double r = 0.0;
    // divergence_of_drift with zero damping leaves only the repulsion part.
    for (const auto& v : spectra) r += divergence_of_drift(v, 0.0);
    return r;
  };

  const double t0 = path.times.front();
  const double n = static_cast<double>(model.N);
  double rep_integral = 0.0;
  double prev_rate = repulsion_rate(path.spectra.front());
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    if (i > 0) {
      const double rate = repulsion_rate(path.spectra[i]);
      const double h = path.times[i] - path.times[i - 1];
      if (!(h > 0.0)) fail_argument("volume: times must be strictly increasing");
      rep_integral += 0.5 * h * (prev_rate + rate);
      prev_rate = rate;
    }
    const double base = -n * total_damping * (path.times[i] - t0);
    ledger.times.push_back(path.times[i]);
    ledger.base_rate_term.push_back(base);
    ledger.repulsion_term.push_back(rep_integral);
    ledger.log_jacobian.push_back(ledger.log_j0 + base + rep_integral);
  }
  return ledger;
}

bool liouville_inequality_holds(const VolumeLedger& ledger, double tolerance) {
  for (std::size_t i = 0; i < ledger.times.size(); ++i)
    if (ledger.log_jacobian[i] > ledger.log_j0 + ledger.base_rate_term[i] + tolerance) return false;
  return true;
}

}  // namespace cdyson

#include "coupled_dyson/eigen_sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/noise.hpp"

namespace cdyson {
namespace {

double min_adjacent_gap(const Eigen::VectorXd& v) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < v.size(); ++i) g = std::min(g, v[i] - v[i - 1]);
  return g;
}

bool strictly_increasing(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

void refresh_gaps(EigenEnsembleState& s) {
  s.min_gap.resize(s.lambda.size());
  for (std::size_t p = 0; p < s.lambda.size(); ++p) s.min_gap[p] = min_adjacent_gap(s.lambda[p]);
}

}  // namespace

EigenEnsembleState make_eigen_state(std::vector<Eigen::VectorXd> lambda, double R,
                                    double t) {
  if (lambda.empty()) fail_argument("eigen state: no processes");
  const Eigen::Index n = lambda.front().size();
  if (n < 1) fail_argument("eigen state: empty spectrum");
  for (auto& v : lambda) {
    if (v.size() != n) fail_argument("eigen state: processes differ in N");
    if (!v.allFinite()) fail_argument("eigen state: non-finite eigenvalue");
    std::sort(v.data(), v.data() + v.size());
    if (!strictly_increasing(v))
      fail_argument("eigen state: initial eigenvalues must be distinct");
  }
  EigenEnsembleState s;
  s.t = t;
  s.lambda = std::move(lambda);
  s.R = R;
  refresh_gaps(s);
  return s;
}

Eigen::VectorXd perturbed_zero_start(int N, double eps) {
  Eigen::VectorXd v(N);
  for (int i = 0; i < N; ++i) v[i] = eps * ((i + 1) - 0.5 * (N + 1)) / N;
  return v;
}

Eigen::VectorXd repulsion_drift(const Eigen::VectorXd& lambda, double R) {
  const Eigen::Index n = lambda.size();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double li = lambda[i];
    double acc = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double f = phi_R(li - lambda[j], R);
      acc += f;
      r[j] -= f;
    }
    r[i] += acc;
  }
  return r / static_cast<double>(n);
}

EigenIntegrator::EigenIntegrator(const CouplingModel& model, EigenSdeOptions options)
    : model_(model), options_(options) {
  validate_model(model_);
  R_ = options_.R > 0.0 ? options_.R : 10.0 * model_.N;
  if (options_.max_halvings < 0 || options_.max_halvings > 40)
    fail_argument("eigen sde: max_halvings out of range");
  factor_ = CorrelationFactor(model_.rho).matrix();
}

void EigenIntegrator::drift(const EigenEnsembleState& s, Eigen::MatrixXd& out) const {
  const int k = s.k();
  const int n = s.N();
  out.resize(k, n);
  for (int p = 0; p < k; ++p) {
    out.row(p) = repulsion_drift(s.lambda[p], R_).transpose();
    for (int q = 0; q < k; ++q) {
      const double c = (p == q) ? -model_.gamma(p, p) : model_.gamma(p, q);
      if (c != 0.0) out.row(p) += c * s.lambda[q].transpose();
    }
  }
}

void EigenIntegrator::step(EigenEnsembleState& state, double dt, const SeededRng& rng,
                           std::uint64_t step_index) const {
  if (!(dt > 0.0)) fail_argument("eigen sde: dt must be > 0");
  const int k = state.k();
  const int n = state.N();
  if (k != model_.k || n != model_.N) fail_argument("eigen sde: state does not match model");
  NormalStream stream = rng.at(step_index, RngDomain::kIncrement);
  Eigen::MatrixXd dw(k, n);
  Eigen::VectorXd z(k);
  const double scale = std::sqrt(2.0 * dt);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < k; ++p) z[p] = stream.normal();
    dw.col(i) = scale * (factor_ * z);
  }
  advance(state, dt, dw, rng, step_index, 1, 0);
}

void EigenIntegrator::advance(EigenEnsembleState& state, double h, const Eigen::MatrixXd& dw,
                              const SeededRng& rng, std::uint64_t step_index,
                              std::uint64_t node, int depth,
                              const Eigen::MatrixXd* known_drift) const {
  const int k = state.k();
  const int n = state.N();
  const double noise_scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd d;
  if (known_drift) d = *known_drift;
  else drift(state, d);

  std::vector<Eigen::VectorXd> proposal(k);
  bool ordered = true;
  for (int p = 0; p < k; ++p) {
    proposal[p] = state.lambda[p] + h * d.row(p).transpose() + noise_scale * dw.row(p).transpose();
    if (!proposal[p].allFinite()) fail_numerical("eigen sde: non-finite eigenvalue");
    ordered = ordered && strictly_increasing(proposal[p]);
  }

  if (!ordered && depth < options_.max_halvings) {
    ++state.rejections;
    // Brownian bridge: W(h/2) | W(h) ~ N(W(h)/2, 2 rho h/4).
    NormalStream stream = rng.at(step_index, RngDomain::kBridge, node);
    Eigen::MatrixXd first(k, n);
    Eigen::VectorXd z(k);
    const double scale = std::sqrt(2.0 * h / 4.0);
    for (int i = 0; i < n; ++i) {
      for (int p = 0; p < k; ++p) z[p] = stream.normal();
      first.col(i) = 0.5 * dw.col(i) + scale * (factor_ * z);
    }
    const Eigen::MatrixXd second = dw - first;
    // The first half starts from the same state, so its drift is d.
    advance(state, 0.5 * h, first, rng, step_index, 2 * node, depth + 1, &d);
    advance(state, 0.5 * h, second, rng, step_index, 2 * node + 1, depth + 1);
    return;
  }

  if (!ordered) {
    for (auto& v : proposal) {
      std::sort(v.data(), v.data() + v.size());
      if (!strictly_increasing(v)) fail_numerical("step collapse: eigenvalues coincide at dt_min");
    }
    ++state.resorts;
  }
  state.lambda = std::move(proposal);
  state.t += h;
  refresh_gaps(state);
}

EigenEnsembleState step_eigen_system(const EigenEnsembleState& state,
                                     const CouplingModel& model, double dt,
                                     const SeededRng& rng, std::uint64_t step_index,
                                     EigenSdeOptions options) {
  if (options.R <= 0.0 && state.R > 0.0) options.R = state.R;
  EigenIntegrator integrator(model, options);
  EigenEnsembleState next = state;
  next.R = integrator.R();
  integrator.step(next, dt, rng, step_index);
  return next;
}

double lyapunov_f(const EigenEnsembleState& state) {
  const int n = state.N();
  if (n == 0) return 0.0;
  double quad = 0.0;
  double logs = 0.0;
  for (const auto& v : state.lambda) {
    quad += v.squaredNorm();
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double gap = std::abs(v[i] - v[j]);
        if (gap == 0.0) return std::numeric_limits<double>::infinity();
        logs += 2.0 * std::log(gap);
      }
    }
  }
  return quad / n - logs / (static_cast<double>(n) * n);
}

EigenRunResult run_eigen_sde(const CouplingModel& model,
                             const std::vector<Eigen::VectorXd>& initial,
                             const EigenRunOptions& options, const SeededRng& rng) {
  if (!(options.T >= 0.0) || !(options.dt > 0.0)) fail_argument("eigen run: need T >= 0, dt > 0");
  if (options.record_every < 1) fail_argument("eigen run: record_every must be >= 1");
  if (static_cast<int>(initial.size()) != model.k) fail_argument("eigen run: need k initial spectra");
  EigenIntegrator integrator(model, options.sde);

  EigenRunResult out;
  EigenEnsembleState state = make_eigen_state(initial, integrator.R());
  for (const auto& v : state.lambda)
    if (v.size() != model.N) fail_argument("eigen run: initial spectrum size != N");

  auto max_abs = [](const EigenEnsembleState& s) {
    double m = 0.0;
    for (const auto& v : s.lambda) m = std::max({m, std::abs(v[0]), std::abs(v[v.size() - 1])});
    return m;
  };
  const double bound0 = 1.0 + max_abs(state);
  auto record = [&](const EigenEnsembleState& s) {
    if (!options.record_path) return;
    out.path.times.push_back(s.t);
    out.path.spectra.push_back(s.lambda);
    out.lyapunov.push_back(lyapunov_f(s));
  };

  const auto steps = static_cast<std::int64_t>(std::llround(options.T / options.dt));
  record(state);
  for (std::int64_t n = 0; n < steps; ++n) {
    integrator.step(state, options.dt, rng, static_cast<std::uint64_t>(n));
    state.t = (n + 1) * options.dt;  // avoid accumulated rounding in t
    const double m = max_abs(state);
    out.max_abs_eigenvalue = std::max(out.max_abs_eigenvalue, m);
    if (m > bound0 + options.bound_slope * state.t) out.bound_violated = true;
    if ((n + 1) % options.record_every == 0 || n + 1 == steps) record(state);
  }
  out.final_state = std::move(state);
  return out;
}

}  // namespace cdyson

#include "coupled_dyson/ldp.hpp"

#include <cmath>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/linalg.hpp"

namespace cdyson {
namespace {

void require_regular(const LdpModel& m) {
  if (!std::isfinite(m.gamma) || !std::isfinite(m.rho))
    fail_argument("ldp: non-finite parameters");
  if (!(std::abs(m.gamma) < 0.5) || !(std::abs(m.rho) < 1.0))
    fail_argument("degenerate: need |gamma| < 1/2 and |rho| < 1");
}

}  // namespace

Eigen::Matrix2d LdpModel::A() const {
  Eigen::Matrix2d a;
  a << -0.5, gamma, gamma, -0.5;
  return a;
}

Eigen::Matrix2d LdpModel::Q() const {
  Eigen::Matrix2d q;
  q << 2.0, 2.0 * rho, 2.0 * rho, 2.0;
  return q;
}

Eigen::Matrix2d LdpModel::sigma() const {
  require_regular(*this);
  return solve_lyapunov(A(), Q());
}

Eigen::Matrix2d LdpModel::sigma_inverse() const { return sigma().inverse(); }

double rate_function(double x, double y, const LdpModel& m) {
  require_regular(m);
  const double g = m.gamma;
  const double r = m.rho;
  return ((1.0 + 2.0 * g * r) * (x * x + y * y) - 2.0 * (r + 2.0 * g) * x * y) /
         (4.0 * (1.0 - r * r));
}

double quadratic_rate(const Eigen::Vector2d& v, const LdpModel& m) {
  return 0.5 * v.dot(m.sigma_inverse() * v);
}

double hamiltonian(const Eigen::Vector2d& p, const Eigen::Vector2d& x, const LdpModel& m) {
  return 0.5 * p.dot(m.Q() * p) + p.dot(m.A() * x);
}

InstantonSolution solve_instanton(const Eigen::Vector2d& target, const LdpModel& model,
                                  double T, int steps) {
  require_regular(model);
  if (!target.allFinite()) fail_argument("instanton: non-finite target");
  if (!(T > 0.0)) fail_argument("instanton: T must be > 0");
  if (steps < 1) fail_argument("instanton: steps must be >= 1");

  Eigen::MatrixXd ext = Eigen::MatrixXd::Zero(4, 4);
  ext.topLeftCorner(2, 2) = model.A();
  ext.topRightCorner(2, 2) = model.Q();
  ext.bottomRightCorner(2, 2) = -model.A().transpose();

  const Eigen::Matrix2d m12 = expm(ext * T).topRightCorner(2, 2);
  Eigen::FullPivLU<Eigen::Matrix2d> lu(m12);
  const double scale = m12.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || std::abs(m12.determinant()) < 1e-14 * scale * scale)
    fail_numerical("singular transition block");

  InstantonSolution sol;
  sol.p0 = lu.solve(target);
  Eigen::Vector4d y0;
  y0 << 0.0, 0.0, sol.p0;
  // One-step propagator applied repeatedly; endpoints are also computed from
  // e^{ext T} directly to avoid accumulating roundoff in x(T).
  const double h = T / steps;
  const Eigen::Matrix4d step = expm(ext * h);
  Eigen::Vector4d y = y0;
  sol.times.reserve(steps + 1);
  const double h0 = hamiltonian(sol.p0, Eigen::Vector2d::Zero(), model);
  for (int n = 0; n <= steps; ++n) {
    if (n == steps) y = expm(ext * T) * y0;
    sol.times.push_back(n * h);
    sol.x_path.push_back(y.head<2>());
    sol.p_path.push_back(y.tail<2>());
    sol.hamiltonian_drift =
        std::max(sol.hamiltonian_drift, std::abs(hamiltonian(y.tail<2>(), y.head<2>(), model) - h0));
    y = step * y;
  }
  sol.times.back() = T;
  sol.terminal_error = (sol.x_path.back() - target).norm();
  sol.estimates = evaluate_action(sol, model);
  sol.action = sol.estimates.endpoint;
  return sol;
}

ActionEstimates evaluate_action(const InstantonSolution& s, const LdpModel& model) {
  ActionEstimates e;
  if (s.times.empty()) return e;
  const Eigen::Matrix2d a = model.A();
  const Eigen::Matrix2d q = model.Q();
  auto lagrangian = [&](std::size_t n) {
    const Eigen::Vector2d& x = s.x_path[n];
    const Eigen::Vector2d& p = s.p_path[n];
    const Eigen::Vector2d xdot = a * x + q * p;
    return p.dot(xdot) - hamiltonian(p, x, model);
  };
  double prev = lagrangian(0);
  for (std::size_t n = 1; n < s.times.size(); ++n) {
    const double cur = lagrangian(n);
    e.quadrature += 0.5 * (s.times[n] - s.times[n - 1]) * (prev + cur);
    prev = cur;
  }
  e.endpoint = 0.5 * s.p_path.back().dot(s.x_path.back());
  e.mismatch = std::abs(e.quadrature - e.endpoint) > 1e-3 * (1.0 + std::abs(e.endpoint));
  return e;
}

std::vector<PhaseRow> phase_diagnostics(const std::vector<double>& gammas, double rho) {
  std::vector<PhaseRow> rows;
  const Eigen::Vector2d plus = Eigen::Vector2d(1.0, 1.0) / std::sqrt(2.0);
  const Eigen::Vector2d minus = Eigen::Vector2d(1.0, -1.0) / std::sqrt(2.0);
  for (double g : gammas) {
    const LdpModel m{g, rho};
    const Eigen::Matrix2d inv = m.sigma_inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (inv + inv.transpose()));
    PhaseRow row;
    row.gamma = g;
    row.det_sigma_inverse = inv.determinant();
    row.det_formula = (0.25 - g * g) / (1.0 - rho * rho);
    row.null_direction = es.eigenvectors().col(0);
    row.alignment_plus = std::abs(row.null_direction.dot(plus));
    row.alignment_minus = std::abs(row.null_direction.dot(minus));
    rows.push_back(row);
  }
  return rows;
}

double neural_stability_shift(double gamma) {
  if (!(std::abs(gamma) < 0.5)) fail_argument("neural stability shift: need |gamma| < 1/2");
  return std::sqrt(1.0 + gamma * gamma / (1.0 - 4.0 * gamma * gamma));
}

}  // namespace cdyson

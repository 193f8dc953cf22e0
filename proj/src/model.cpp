#include "coupled_dyson/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coupled_dyson/error.hpp"

namespace cdyson {

Eigen::MatrixXd CouplingModel::drift_matrix() const {
  Eigen::MatrixXd a = gamma;
  a.diagonal() = -gamma.diagonal();
  return a;
}

CouplingModel CouplingModel::symmetric_pair(double g, double r, int N, double beta) {
  CouplingModel m;
  m.k = 2;
  m.N = N;
  m.beta = beta;
  m.gamma.resize(2, 2);
  m.gamma << 0.5, g, g, 0.5;
  m.rho.resize(2, 2);
  m.rho << 1.0, r, r, 1.0;
  return m;
}

CouplingModel CouplingModel::single(double damping, int N, double beta) {
  CouplingModel m;
  m.k = 1;
  m.N = N;
  m.beta = beta;
  m.gamma = Eigen::MatrixXd::Constant(1, 1, damping);
  m.rho = Eigen::MatrixXd::Ones(1, 1);
  return m;
}

ValidationReport validate_model(const CouplingModel& model) {
  if (model.k < 1) fail_argument("model: k must be >= 1");
  if (model.N < 1) fail_argument("model: N must be >= 1");
  if (!(model.beta >= 1.0)) fail_argument("model: beta must be >= 1");
  if (model.gamma.rows() != model.k || model.gamma.cols() != model.k)
    fail_argument("model: gamma must be k x k");
  if (model.rho.rows() != model.k || model.rho.cols() != model.k)
    fail_argument("model: rho must be k x k");
  if (!model.gamma.allFinite() || !model.rho.allFinite())
    fail_argument("model: non-finite parameters");

  const Eigen::MatrixXd& rho = model.rho;
  if ((rho - rho.transpose()).cwiseAbs().maxCoeff() > kCorrelationTolerance)
    fail_argument("invalid noise correlation: rho not symmetric");
  if ((rho.diagonal().array() - 1.0).abs().maxCoeff() > kCorrelationTolerance)
    fail_argument("invalid noise correlation: diagonal != 1");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(rho, Eigen::EigenvaluesOnly);
  if (sym.eigenvalues().minCoeff() < -kCorrelationTolerance) {
    std::ostringstream os;
    os << "invalid noise correlation: smallest eigenvalue "
       << sym.eigenvalues().minCoeff();
    fail_argument(os.str());
  }

  ValidationReport report;
  Eigen::EigenSolver<Eigen::MatrixXd> es(model.drift_matrix(), false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  report.drift_eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(report.drift_eigenvalues.begin(), report.drift_eigenvalues.end(),
            [](auto a, auto b) {
              return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
            });
  report.max_real_part = report.drift_eigenvalues.front().real();
  report.stable = report.max_real_part < -kStabilityMargin;
  return report;
}

void require_stable(const CouplingModel& model) {
  if (!validate_model(model).stable) fail_argument("unstable model");
}

}  // namespace cdyson

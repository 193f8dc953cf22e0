#include "coupled_dyson/noise.hpp"

#include <cmath>

#include "coupled_dyson/error.hpp"

namespace cdyson {

CorrelationFactor::CorrelationFactor(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() == 0)
    fail_argument("correlation factor: matrix must be square and non-empty");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) {
    factor_ = llt.matrixL();
    return;
  }
  // Semidefinite: C = P^T L D L^T P.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
  if (ldlt.info() != Eigen::Success)
    fail_numerical("correlation factor: factorization failed");
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() < -1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff()))
    fail_numerical("correlation factor: matrix is indefinite");
  const Eigen::MatrixXd l = ldlt.matrixL();
  const Eigen::MatrixXd scaled = l * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  factor_ = ldlt.transpositionsP().transpose() * scaled;
}

Eigen::VectorXd CorrelationFactor::sample(NormalStream& stream) const {
  Eigen::VectorXd z(size());
  for (int i = 0; i < size(); ++i) z[i] = stream.normal();
  return factor_ * z;
}

void CorrelationFactor::sample_into(NormalStream& stream, double* out,
                                    double* scratch) const {
  const int k = size();
  for (int i = 0; i < k; ++i) scratch[i] = stream.normal();
  for (int i = 0; i < k; ++i) {
    double acc = 0.0;
    for (int j = 0; j < k; ++j) acc += factor_(i, j) * scratch[j];
    out[i] = acc;
  }
}

Eigen::VectorXd correlated_scalar_increments(const Eigen::MatrixXd& rho, double dt,
                                             NormalStream& stream) {
  if (!(dt > 0.0)) fail_argument("increments: dt must be > 0");
  return CorrelationFactor(rho).sample(stream) * std::sqrt(dt);
}

Eigen::MatrixXd symmetric_matrix_increment(int N, double beta, double dt,
                                           NormalStream& stream) {
  if (N < 1) fail_argument("matrix increment: N must be >= 1");
  if (!(dt > 0.0)) fail_argument("matrix increment: dt must be > 0");
  if (beta != 1.0 && beta != 2.0) fail_argument("matrix increment: beta must be 1 or 2");
  if (beta != 1.0) fail_argument("matrix increment: only real symmetric (beta = 1) supported");
  const double off = std::sqrt(dt);
  const double diag = std::sqrt(2.0 * dt);
  Eigen::MatrixXd b(N, N);
  // Column-wise over i <= j, the same draw order as the coupled increments.
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i <= j; ++i) {
      const double v = (i == j ? diag : off) * stream.normal();
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  return b;
}

void correlated_matrix_increments(const CorrelationFactor& factor, int N, double dt,
                                  NormalStream& stream, std::vector<Eigen::MatrixXd>& out) {
  const int k = factor.size();
  out.resize(k);
  for (auto& m : out) m.resize(N, N);
  const double off = std::sqrt(dt);
  const double diag = std::sqrt(2.0 * dt);
  Eigen::VectorXd v(k), scratch(k);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i <= j; ++i) {
      factor.sample_into(stream, v.data(), scratch.data());
      const double s = (i == j) ? diag : off;
      for (int p = 0; p < k; ++p) {
        out[p](i, j) = s * v[p];
        out[p](j, i) = s * v[p];
      }
    }
  }
}

std::vector<Eigen::MatrixXd> correlated_matrix_increments(const CouplingModel& model,
                                                          double dt,
                                                          NormalStream& stream) {
  if (!(dt > 0.0)) fail_argument("matrix increments: dt must be > 0");
  std::vector<Eigen::MatrixXd> out;
  correlated_matrix_increments(CorrelationFactor(model.rho), model.N, dt, stream, out);
  return out;
}

}  // namespace cdyson

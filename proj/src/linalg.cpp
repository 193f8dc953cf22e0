#include "coupled_dyson/linalg.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "coupled_dyson/error.hpp"

namespace cdyson {

Eigen::MatrixXd expm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail_argument("expm: matrix must be square");
  return m.exp();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index k = a.rows();
  if (a.cols() != k || q.rows() != k || q.cols() != k)
    fail_argument("lyapunov: dimension mismatch");
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(k, k);
  // vec(A X + X A^T) = (I (x) A + A (x) I) vec(X), column-major vec.
  const Eigen::MatrixXd op =
      Eigen::kroneckerProduct(id, a) + Eigen::kroneckerProduct(a, id);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(q.data(), k * k);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(op);
  if (!lu.isInvertible()) fail_numerical("lyapunov: singular operator (drift not stable)");
  const Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(x.data(), k, k);
  return 0.5 * (sigma + sigma.transpose());
}

LinearTransition discretize_linear_sde(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                       double h) {
  const Eigen::Index k = a.rows();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  block.topLeftCorner(k, k) = -a;
  block.topRightCorner(k, k) = q;
  block.bottomRightCorner(k, k) = a.transpose();
  const Eigen::MatrixXd e = expm(block * h);
  LinearTransition out;
  out.F = e.bottomRightCorner(k, k).transpose();
  out.S = out.F * e.topRightCorner(k, k);
  out.S = 0.5 * (out.S + out.S.transpose());
  return out;
}

}  // namespace cdyson

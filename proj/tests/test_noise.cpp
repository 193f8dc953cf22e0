#include <gtest/gtest.h>

#include <cmath>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/model.hpp"
#include "coupled_dyson/noise.hpp"

using namespace cdyson;

TEST(ValidateModel, SymmetricPairStable) {
  const auto report = validate_model(CouplingModel::symmetric_pair(0.2, 0.0));
  EXPECT_TRUE(report.stable);
  ASSERT_EQ(report.drift_eigenvalues.size(), 2u);
  EXPECT_NEAR(report.drift_eigenvalues[0].real(), -0.3, 1e-14);
  EXPECT_NEAR(report.drift_eigenvalues[1].real(), -0.7, 1e-14);
}

TEST(ValidateModel, StrongCouplingUnstable) {
  const auto report = validate_model(CouplingModel::symmetric_pair(0.6, 0.0));
  EXPECT_FALSE(report.stable);
  EXPECT_NEAR(report.max_real_part, 0.1, 1e-14);
}

TEST(ValidateModel, SingleProcess) {
  const auto report = validate_model(CouplingModel::single(0.5));
  EXPECT_TRUE(report.stable);
  EXPECT_DOUBLE_EQ(report.drift_eigenvalues[0].real(), -0.5);
}

TEST(ValidateModel, StabilityBoundaryIsHalf) {
  for (double g : {-0.49, -0.25, 0.0, 0.25, 0.49})
    EXPECT_TRUE(validate_model(CouplingModel::symmetric_pair(g, 0.0)).stable) << g;
  for (double g : {-0.5, 0.5, 0.51, -0.8})
    EXPECT_FALSE(validate_model(CouplingModel::symmetric_pair(g, 0.0)).stable) << g;
}

TEST(ValidateModel, RejectsBadCorrelation) {
  auto m = CouplingModel::symmetric_pair(0.1, 0.0);
  m.rho(0, 1) = 0.3;  // asymmetric
  EXPECT_THROW(validate_model(m), Error);
  m = CouplingModel::symmetric_pair(0.1, 0.0);
  m.rho(0, 0) = 1.1;
  EXPECT_THROW(validate_model(m), Error);
  m = CouplingModel::symmetric_pair(0.1, 1.2);  // indefinite
  try {
    validate_model(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("invalid noise correlation"), std::string::npos);
  }
}

TEST(ValidateModel, RequireStableThrows) {
  EXPECT_THROW(require_stable(CouplingModel::symmetric_pair(0.6, 0.0)), Error);
  EXPECT_NO_THROW(require_stable(CouplingModel::symmetric_pair(0.4, 0.0)));
}

TEST(CorrelationFactor, ReproducesMatrix) {
  Eigen::MatrixXd c(3, 3);
  c << 1, 0.3, -0.2, 0.3, 1, 0.5, -0.2, 0.5, 1;
  const CorrelationFactor f(c);
  EXPECT_LT((f.matrix() * f.matrix().transpose() - c).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CorrelationFactor, AcceptsPerfectCorrelation) {
  for (double r : {1.0, -1.0}) {
    Eigen::MatrixXd c(2, 2);
    c << 1, r, r, 1;
    const CorrelationFactor f(c);
    EXPECT_LT((f.matrix() * f.matrix().transpose() - c).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ScalarIncrements, IdentityIndependentUnitVariance) {
  NormalStream s = SeededRng{3, 0}.at(0);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const int n = 100000;
  const double dt = 0.5;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w = correlated_scalar_increments(id, dt, s);
    acc += w * w.transpose();
  }
  acc /= n;
  const double se = dt * std::sqrt(2.0 / n);
  EXPECT_NEAR(acc(0, 0), dt, 4 * se);
  EXPECT_NEAR(acc(1, 1), dt, 4 * se);
  EXPECT_NEAR(acc(0, 1), 0.0, 4 * dt / std::sqrt(n));
}

TEST(ScalarIncrements, PerfectCorrelationIdentical) {
  Eigen::MatrixXd rho(2, 2);
  rho << 1, 1, 1, 1;
  NormalStream s = SeededRng{3, 1}.at(0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd w = correlated_scalar_increments(rho, 0.1, s);
    EXPECT_DOUBLE_EQ(w[0], w[1]);
  }
}

TEST(ScalarIncrements, SampleCorrelation) {
  Eigen::MatrixXd rho(2, 2);
  rho << 1, 0.3, 0.3, 1;
  const CorrelationFactor f(rho);
  NormalStream s = SeededRng{11, 0}.at(0);
  const int n = 1000000;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w = f.sample(s);
    sxy += w[0] * w[1];
    sxx += w[0] * w[0];
    syy += w[1] * w[1];
  }
  EXPECT_NEAR(sxy / std::sqrt(sxx * syy), 0.3, 0.01);
}

TEST(ScalarIncrements, CovarianceWithinFourStandardErrors) {
  Eigen::MatrixXd rho(3, 3);
  rho << 1, -0.4, 0.2, -0.4, 1, 0.6, 0.2, 0.6, 1;
  const CorrelationFactor f(rho);
  NormalStream s = SeededRng{12, 0}.at(0);
  const int n = 1000000;
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd w = f.sample(s);
    acc += w * w.transpose();
  }
  acc /= n;
  for (int p = 0; p < 3; ++p)
    for (int q = 0; q < 3; ++q) {
      // Var(w_p w_q) = 1 + rho_pq^2 for jointly normal unit-variance pairs.
      const double se = std::sqrt((1.0 + rho(p, q) * rho(p, q)) / n);
      EXPECT_NEAR(acc(p, q), rho(p, q), 4 * se) << p << "," << q;
    }
}

TEST(MatrixIncrement, ScalarCaseVarianceTwoDt) {
  NormalStream s = SeededRng{4, 0}.at(0);
  const int n = 100000;
  const double dt = 0.01;
  double v = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd b = symmetric_matrix_increment(1, 1.0, dt, s);
    ASSERT_EQ(b.rows(), 1);
    v += b(0, 0) * b(0, 0);
  }
  EXPECT_NEAR(v / n, 2 * dt, 4 * 2 * dt * std::sqrt(2.0 / n));
}

TEST(MatrixIncrement, EntryVariances) {
  NormalStream s = SeededRng{4, 1}.at(0);
  const int n = 10000;
  const double dt = 1e-3;
  double v12 = 0, v11 = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd b = symmetric_matrix_increment(50, 1.0, dt, s);
    ASSERT_EQ((b - b.transpose()).cwiseAbs().maxCoeff(), 0.0);
    v12 += b(0, 1) * b(0, 1);
    v11 += b(0, 0) * b(0, 0);
  }
  EXPECT_NEAR(v12 / n, 1e-3, 0.05 * 1e-3);
  EXPECT_NEAR(v11 / n, 2e-3, 0.05 * 2e-3);
}

TEST(MatrixIncrement, HermitianCaseRejected) {
  NormalStream s = SeededRng{}.at(0);
  EXPECT_THROW(symmetric_matrix_increment(3, 2.0, 0.1, s), Error);
  EXPECT_THROW(symmetric_matrix_increment(0, 1.0, 0.1, s), Error);
}

TEST(CorrelatedMatrices, ZeroAndPerfectCorrelation) {
  NormalStream s = SeededRng{8, 0}.at(0);
  const auto same = correlated_matrix_increments(CouplingModel::symmetric_pair(0.1, 1.0, 6), 0.1, s);
  EXPECT_EQ((same[0] - same[1]).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((same[0] - same[0].transpose()).cwiseAbs().maxCoeff(), 0.0);

  const auto model = CouplingModel::symmetric_pair(0.1, 0.0, 6);
  const int n = 20000;
  double c = 0;
  for (int i = 0; i < n; ++i) {
    const auto b = correlated_matrix_increments(model, 1.0, s);
    c += b[0](1, 2) * b[1](1, 2);
  }
  EXPECT_NEAR(c / n, 0.0, 4.0 / std::sqrt(n));
}

TEST(CorrelatedMatrices, CrossCovariance) {
  const auto model = CouplingModel::symmetric_pair(0.0, 0.5, 20);
  const CorrelationFactor f(model.rho);
  NormalStream s = SeededRng{9, 0}.at(0);
  std::vector<Eigen::MatrixXd> b;
  const int n = 100000;
  const double dt = 1e-2;
  double off = 0, diag = 0;
  for (int i = 0; i < n; ++i) {
    correlated_matrix_increments(f, 20, dt, s, b);
    off += b[0](0, 1) * b[1](0, 1);
    diag += b[0](3, 3) * b[1](3, 3);
  }
  EXPECT_NEAR(off / n, 5e-3, 0.05 * 5e-3);
  EXPECT_NEAR(diag / n, 1e-2, 0.05 * 1e-2);
}

TEST(CorrelatedMatrices, Reproducible) {
  const auto model = CouplingModel::symmetric_pair(0.1, 0.4, 5);
  NormalStream a = SeededRng{1, 2}.at(3);
  NormalStream b = SeededRng{1, 2}.at(3);
  const auto x = correlated_matrix_increments(model, 0.1, a);
  const auto y = correlated_matrix_increments(model, 0.1, b);
  for (int p = 0; p < 2; ++p) EXPECT_EQ((x[p] - y[p]).cwiseAbs().maxCoeff(), 0.0);
}

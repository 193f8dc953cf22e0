#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "coupled_dyson/eigen_sde.hpp"
#include "coupled_dyson/error.hpp"
#include "coupled_dyson/trace_flow.hpp"

using namespace cdyson;

namespace {

struct Moments2 {
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  int n = 0;
};

Moments2 sample_moments(const std::vector<Eigen::VectorXd>& xs) {
  Moments2 m;
  m.n = static_cast<int>(xs.size());
  for (const auto& x : xs) m.mean += x;
  m.mean /= m.n;
  for (const auto& x : xs) m.cov += (x - m.mean) * (x - m.mean).transpose();
  m.cov /= (m.n - 1);
  return m;
}

// Nearly independent stationary draws: exact transitions 40 time units apart.
std::vector<Eigen::VectorXd> stationary_draws(const CouplingModel& model, int n,
                                              std::uint64_t seed) {
  TraceSimOptions o;
  o.scheme = TraceScheme::kExact;
  o.dt = 40.0;
  o.T = 40.0 * n;
  o.burn_in = 400.0;
  const TracePath path = simulate_coupled_traces(model, o, SeededRng{seed, 0});
  return {path.values.begin() + 1, path.values.end()};
}

}  // namespace

TEST(TraceFlow, DeterministicLimit) {
  const TracePath p = simulate_trace_flow(1.0, std::numeric_limits<double>::infinity(), 2.0,
                                          1e-4, SeededRng{}, 20000);
  EXPECT_NEAR(p.times.back(), 2.0, 1e-12);
  EXPECT_NEAR(p.values.back()[0], std::exp(-1.0), 1e-4);
}

TEST(TraceFlow, StationaryVarianceDependsOnBeta) {
  for (double beta : {1.0, 2.0}) {
    const int replicas = 10000;
    double s2 = 0.0;
    for (int r = 0; r < replicas; ++r) {
      const TracePath p = simulate_trace_flow(0.0, beta, 20.0, 1e-2, SeededRng{21, std::uint64_t(r)}, 2000);
      s2 += p.values.back()[0] * p.values.back()[0];
    }
    EXPECT_NEAR(s2 / replicas, 2.0 / beta, 0.05 * 2.0 / beta) << beta;
  }
}

TEST(TraceFlow, RejectsBadArguments) {
  EXPECT_THROW(simulate_trace_flow(0.0, 0.5, 1.0, 1e-3, SeededRng{}), Error);
  EXPECT_THROW(simulate_trace_flow(0.0, 1.0, 1.0, 0.0, SeededRng{}), Error);
}

TEST(ExactTraceMoments, ClosedForm) {
  const auto m = exact_trace_moments(1.5, 1.0);
  EXPECT_NEAR(m.mean(2.0)[0], 1.5 * std::exp(-1.0), 1e-13);
  EXPECT_NEAR(m.covariance(60.0, 60.0)(0, 0), 2.0, 1e-12);
  for (double s : {0.0, 0.3, 4.0}) EXPECT_EQ(m.covariance(0.0, s)(0, 0), 0.0);
  EXPECT_NEAR(m.covariance(1.0, 1.0)(0, 0), 2.0 * (1.0 - std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(m.covariance(1.0, 1.0)(0, 0), 1.2642411176571153, 1e-12);
  for (double beta : {1.0, 2.0})
    for (double t : {0.2, 1.0, 3.0})
      for (double s : {0.1, 1.0, 2.5}) {
        const double expected =
            (2.0 / beta) * (std::exp(-std::abs(t - s) / 2.0) - std::exp(-(t + s) / 2.0));
        EXPECT_NEAR(exact_trace_moments(0.0, beta).covariance(t, s)(0, 0), expected, 1e-12);
      }
  ASSERT_TRUE(m.stationary_covariance().has_value());
  EXPECT_NEAR((*m.stationary_covariance())(0, 0), 2.0, 1e-12);
}

TEST(ExactTraceMoments, MonteCarloAtTimeOne) {
  const auto model = CouplingModel::single(0.5);
  TraceSimOptions o;
  o.scheme = TraceScheme::kExact;
  o.dt = 1.0;
  o.T = 1.0;
  const int n = 20000;
  double s2 = 0.0;
  for (int r = 0; r < n; ++r) {
    const auto p = simulate_coupled_traces(model, o, SeededRng{5, std::uint64_t(r)});
    s2 += p.values.back()[0] * p.values.back()[0];
  }
  const double v = 2.0 * (1.0 - std::exp(-1.0));
  EXPECT_NEAR(s2 / n, v, 4.0 * v * std::sqrt(2.0 / n));
}

TEST(CoupledTraces, DecouplesAtZeroCoupling) {
  const auto draws = stationary_draws(CouplingModel::symmetric_pair(0.0, 0.0), 20000, 31);
  const auto m = sample_moments(draws);
  const double se = 2.0 * std::sqrt(2.0 / m.n);
  EXPECT_NEAR(m.cov(0, 0), 2.0, 4 * se);
  EXPECT_NEAR(m.cov(1, 1), 2.0, 4 * se);
  EXPECT_NEAR(m.cov(0, 1), 0.0, 4 * 2.0 / std::sqrt(m.n));
}

TEST(CoupledTraces, EulerAndExactShareTheLaw) {
  const auto model = CouplingModel::symmetric_pair(0.25, 0.3);
  TraceSimOptions o;
  o.dt = 1e-3;
  o.T = 2.0;
  o.tau0 = Eigen::Vector2d(1.0, -0.5);
  const auto moments = coupled_trace_moments(model, o.tau0);
  const int n = 2000;
  std::vector<Eigen::VectorXd> ends;
  for (int r = 0; r < n; ++r)
    ends.push_back(simulate_coupled_traces(model, o, SeededRng{41, std::uint64_t(r)}).values.back());
  const auto m = sample_moments(ends);
  const Eigen::MatrixXd c = moments.covariance(2.0, 2.0);
  const Eigen::VectorXd mu = moments.mean(2.0);
  for (int p = 0; p < 2; ++p) {
    EXPECT_NEAR(m.mean[p], mu[p], 4 * std::sqrt(c(p, p) / n));
    EXPECT_NEAR(m.cov(p, p), c(p, p), 4 * c(p, p) * std::sqrt(2.0 / n));
  }
}

TEST(CoupledTraces, StationaryCovarianceMatchesClosedForm) {
  const auto model = CouplingModel::symmetric_pair(0.25, 0.3);
  const Eigen::MatrixXd sigma = stationary_covariance(model).sigma;
  const auto m = sample_moments(stationary_draws(model, 20000, 32));
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) {
      const double se =
          std::sqrt((sigma(p, q) * sigma(p, q) + sigma(p, p) * sigma(q, q)) / m.n);
      EXPECT_NEAR(m.cov(p, q), sigma(p, q), 4 * se);
      EXPECT_NEAR(m.cov(p, q), sigma(p, q), 0.05 * std::abs(sigma(p, q)));
    }
  // Stationary correlation (r + 2g) / (1 + 2gr).
  const double corr = m.cov(0, 1) / std::sqrt(m.cov(0, 0) * m.cov(1, 1));
  const double expected = (0.3 + 0.5) / (1.0 + 0.15);
  EXPECT_NEAR(corr, expected, 4 * (1 - expected * expected) / std::sqrt(m.n));
}

TEST(CoupledTraces, VarianceRatioNearCriticality) {
  const auto a = sample_moments(stationary_draws(CouplingModel::symmetric_pair(0.45, 0.0), 20000, 33));
  const auto b = sample_moments(stationary_draws(CouplingModel::symmetric_pair(0.40, 0.0), 20000, 34));
  const double expected = (0.25 - 0.16) / (0.25 - 0.2025);
  EXPECT_NEAR(expected, 1.8947368421052633, 1e-12);
  EXPECT_NEAR(a.cov(0, 0) / b.cov(0, 0), expected, 0.10 * expected);
}

TEST(CoupledTraces, UnstableModelIsFlaggedNotRejected) {
  TraceSimOptions o;
  o.T = 0.5;
  o.dt = 1e-2;
  const auto p = simulate_coupled_traces(CouplingModel::symmetric_pair(0.7, 0.0), o, SeededRng{});
  EXPECT_TRUE(p.unstable_model);
  EXPECT_EQ(p.values.size(), 51u);
}

TEST(CoupledTraces, RecordingGridAndReproducibility) {
  TraceSimOptions o;
  o.T = 1.0;
  o.dt = 1e-2;
  o.record_every = 7;
  const auto model = CouplingModel::symmetric_pair(0.1, 0.2);
  const auto a = simulate_coupled_traces(model, o, SeededRng{3, 1});
  const auto b = simulate_coupled_traces(model, o, SeededRng{3, 1});
  for (std::size_t i = 1; i < a.times.size(); ++i) EXPECT_GT(a.times[i], a.times[i - 1]);
  EXPECT_NEAR(a.times.back(), 1.0, 1e-12);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(a.values[i], b.values[i]);
}

TEST(StationaryCovariance, ClosedFormExamples) {
  auto s = stationary_covariance(CouplingModel::symmetric_pair(0.0, 0.0));
  EXPECT_LT((s.sigma - 2.0 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12);

  s = stationary_covariance(CouplingModel::symmetric_pair(0.25, 0.0));
  Eigen::Matrix2d e;
  e << 8.0 / 3, 4.0 / 3, 4.0 / 3, 8.0 / 3;
  EXPECT_LT((s.sigma - e).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(s.determinant, 16.0 / 3.0, 1e-12);

  s = stationary_covariance(CouplingModel::symmetric_pair(0.2, 0.5));
  EXPECT_NEAR(s.determinant, 25.0 / 7.0, 1e-12);
}

TEST(StationaryCovariance, SweepAgreesWithClosedForm) {
  for (int i = -4; i <= 4; ++i)
    for (int j = -9; j <= 9; ++j) {
      const double g = 0.1 * i;
      const double r = 0.1 * j;
      const auto s = stationary_covariance(CouplingModel::symmetric_pair(g, r));
      EXPECT_LT(s.lyapunov_residual, 1e-10);
      ASSERT_TRUE(s.closed_form_gap.has_value());
      EXPECT_LT(*s.closed_form_gap, 1e-10) << g << " " << r;
      EXPECT_NEAR(s.determinant, (1 - r * r) / (0.25 - g * g), 1e-9 * s.determinant);
    }
}

TEST(StationaryCovariance, GeneralModelAndBeta) {
  CouplingModel m;
  m.k = 3;
  m.gamma.resize(3, 3);
  m.gamma << 0.6, 0.1, -0.2, 0.05, 0.7, 0.1, 0.2, -0.1, 0.9;
  m.rho.resize(3, 3);
  m.rho << 1, 0.2, 0.1, 0.2, 1, -0.3, 0.1, -0.3, 1;
  const auto s = stationary_covariance(m);
  EXPECT_LT(s.lyapunov_residual, 1e-10);
  EXPECT_FALSE(s.closed_form_gap.has_value());
  EXPECT_LT((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-14);

  const auto s2 = stationary_covariance(CouplingModel::symmetric_pair(0.1, 0.3, 1, 2.0));
  EXPECT_LT(*s2.closed_form_gap, 1e-12);
}

TEST(StationaryCovariance, UnstableRejected) {
  try {
    stationary_covariance(CouplingModel::symmetric_pair(0.5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unstable model"), std::string::npos);
  }
}

TEST(Divergence, Examples) {
  EXPECT_DOUBLE_EQ(divergence_of_drift(Eigen::VectorXd::Zero(1)), -0.5);
  EXPECT_DOUBLE_EQ(divergence_of_drift(Eigen::Vector2d(-1.0, 1.0)), -1.25);
  EXPECT_THROW(divergence_of_drift(Eigen::Vector2d(1.0, 1.0)), Error);
  const Eigen::VectorXd l = perturbed_zero_start(7, 0.3);
  EXPECT_LE(divergence_of_drift(l), -3.5);
}

TEST(Volume, SingleEigenvalueIsExact) {
  EigenPath path;
  for (int i = 0; i <= 10; ++i) {
    path.times.push_back(0.1 * i);
    path.spectra.push_back({Eigen::VectorXd::Constant(1, std::sin(i))});
  }
  const auto ledger = integrate_volume(path, CouplingModel::single(0.5), 3.0);
  for (std::size_t i = 0; i < ledger.times.size(); ++i) {
    EXPECT_NEAR(ledger.log_jacobian[i], std::log(3.0) - ledger.times[i] / 2.0, 1e-15);
    EXPECT_EQ(ledger.repulsion_term[i], 0.0);
  }
  EXPECT_TRUE(liouville_inequality_holds(ledger));
}

TEST(Volume, FrozenSpectrumIsLinear) {
  EigenPath path;
  const Eigen::Vector3d l(-1.0, 0.0, 2.0);
  for (int i = 0; i <= 5; ++i) {
    path.times.push_back(0.25 * i);
    path.spectra.push_back({l});
  }
  // (1/3) * 2 * (1/1 + 1/9 + 1/4)
  const double rate = -(2.0 / 3.0) * (1.0 + 1.0 / 9.0 + 0.25);
  const auto ledger = integrate_volume(path, CouplingModel::single(0.5, 3));
  for (std::size_t i = 0; i < ledger.times.size(); ++i) {
    EXPECT_NEAR(ledger.repulsion_term[i], rate * ledger.times[i], 1e-14);
    EXPECT_NEAR(ledger.base_rate_term[i], -1.5 * ledger.times[i], 1e-14);
    EXPECT_DOUBLE_EQ(ledger.log_jacobian[i],
                     ledger.log_j0 + ledger.base_rate_term[i] + ledger.repulsion_term[i]);
  }
}

TEST(Volume, StochasticPathsSatisfyInequality) {
  const auto model = CouplingModel::single(0.5, 10);
  EigenRunOptions o;
  o.T = 1.0;
  o.dt = 1e-3;
  o.record_every = 10;
  for (std::uint64_t r = 0; r < 5; ++r) {
    const auto run = run_eigen_sde(model, {perturbed_zero_start(10, 0.5)}, o, SeededRng{77, r});
    const auto ledger = integrate_volume(run.path, model);
    EXPECT_TRUE(liouville_inequality_holds(ledger));
    for (std::size_t i = 1; i < ledger.times.size(); ++i) EXPECT_LT(ledger.repulsion_term[i], 0.0);
  }
}

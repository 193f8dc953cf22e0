#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/rng.hpp"
#include "coupled_dyson/spectral.hpp"

using namespace cdyson;

namespace {
const double kPi = std::numbers::pi;
const cplx kI{0.0, 1.0};
}  // namespace

TEST(Stieltjes, PointMassAndPair) {
  const cplx g = stieltjes_of_sample(Eigen::VectorXd::Zero(1), kI);
  EXPECT_NEAR(std::abs(g - (-kI)), 0.0, 1e-15);
  const Eigen::Vector2d pair(-1.0, 1.0);
  EXPECT_THROW(stieltjes_of_sample(pair, cplx(2.0, 0.0)), Error);
  EXPECT_NEAR(stieltjes_of_sample(pair, cplx(2.0, 1e-6)).real(), 2.0 / 3.0, 1e-9);
  EXPECT_THROW(stieltjes_of_sample(Eigen::VectorXd(), kI), Error);
}

TEST(Stieltjes, HerglotzAndAsymptotics) {
  NormalStream s = SeededRng{1, 0}.at(0);
  Eigen::VectorXd x(50);
  for (auto& v : x) v = 2.0 * s.normal();
  const double maxabs = x.cwiseAbs().maxCoeff();
  for (int i = 0; i < 200; ++i) {
    const cplx z(4.0 * s.normal(), 3.0 * s.normal());
    if (z.imag() == 0.0) continue;
    EXPECT_LT(stieltjes_of_sample(x, z).imag() * z.imag(), 0.0);
  }
  for (double y : {10.0, 100.0}) {
    const cplx z(0.0, y);
    EXPECT_LT(std::abs(z * stieltjes_of_sample(x, z) - 1.0), 0.02 * maxabs / y * 50.0 / 50.0 + maxabs / y);
  }
}

TEST(Semicircle, DensityValues) {
  EXPECT_NEAR(semicircle_density(0.0), 1.0 / kPi, 1e-15);
  EXPECT_EQ(semicircle_density(2.0), 0.0);
  EXPECT_EQ(semicircle_density(-2.0), 0.0);
  EXPECT_EQ(semicircle_density(3.0), 0.0);
}

TEST(Semicircle, StieltjesAtI) {
  const cplx g = semicircle_stieltjes(kI);
  EXPECT_NEAR(g.real(), 0.0, 1e-15);
  EXPECT_NEAR(g.imag(), (1.0 - std::sqrt(5.0)) / 2.0, 1e-15);
}

TEST(Semicircle, BranchAtRandomPoints) {
  NormalStream s = SeededRng{2, 0}.at(0);
  for (int i = 0; i < 20; ++i) {
    cplx z(3.0 * s.normal(), 3.0 * s.normal());
    const cplx g = semicircle_stieltjes(z);
    EXPECT_LT(std::abs(g * g - z * g + 1.0), 1e-12);
    EXPECT_LT(g.imag() * z.imag(), 0.0);
    const cplx far = 1e4 * z / std::abs(z);
    EXPECT_NEAR(std::abs(far * semicircle_stieltjes(far) - 1.0), 0.0, 1e-7);
  }
}

TEST(Semicircle, CdfAndQuantile) {
  EXPECT_EQ(semicircle_cdf(-2.5), 0.0);
  EXPECT_EQ(semicircle_cdf(2.5), 1.0);
  EXPECT_NEAR(semicircle_cdf(0.0), 0.5, 1e-15);
  // CDF derivative is the density.
  for (double x : {-1.7, -0.4, 0.9, 1.95}) {
    const double h = 1e-6;
    EXPECT_NEAR((semicircle_cdf(x + h) - semicircle_cdf(x - h)) / (2 * h), semicircle_density(x), 1e-8);
  }
  for (double u : {0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(semicircle_cdf(semicircle_quantile(u)), u, 1e-13);
}

TEST(Inversion, SmoothedSemicircleAtCentre) {
  const std::vector<cplx> g{semicircle_stieltjes(cplx(0.0, 1e-3))};
  EXPECT_NEAR(invert_stieltjes(g)[0], 1.0 / kPi, 1e-3);
}

TEST(Inversion, PointMassCauchyPeak) {
  const double eps = 0.1;
  const std::vector<cplx> g{stieltjes_of_sample(Eigen::VectorXd::Zero(1), cplx(0.0, eps))};
  EXPECT_NEAR(invert_stieltjes(g)[0], 1.0 / (kPi * eps), 1e-12);
  EXPECT_NEAR(invert_stieltjes(g)[0], 3.1831, 1e-4);
}

TEST(Inversion, NormalisedOnWideGrid) {
  const double eps = 0.05;
  std::vector<cplx> g;
  const double h = 0.01;
  for (double x = -400.0; x <= 400.0; x += h) g.push_back(semicircle_stieltjes(cplx(x, eps)));
  double mass = 0.0;
  for (double d : invert_stieltjes(g)) mass += d * h;
  EXPECT_NEAR(mass, 1.0, 1e-2);
}

TEST(Inversion, RoundTripWassersteinBound) {
  NormalStream s = SeededRng{3, 0}.at(0);
  Eigen::VectorXd x(40);
  for (auto& v : x) v = s.normal();
  const double eps = 0.05;
  // Smoothed density from the transform, integrated into a CDF on a grid.
  const double lo = -30.0, hi = 30.0, h = 1e-3;
  const int n = static_cast<int>((hi - lo) / h) + 1;
  std::vector<cplx> g(n);
  for (int j = 0; j < n; ++j) g[j] = stieltjes_of_sample(x, cplx(lo + j * h, eps));
  const std::vector<double> rho = invert_stieltjes(g);
  std::vector<double> cdf(n, 0.0);
  for (int j = 1; j < n; ++j) cdf[j] = cdf[j - 1] + 0.5 * h * (rho[j] + rho[j - 1]);
  const Cdf numeric = [&](double t) {
    const int j = std::clamp(static_cast<int>((t - lo) / h), 0, n - 1);
    return cdf[j];
  };
  // Exact CDF of the sample convolved with the Cauchy kernel.
  const Cdf smoothed = [&](double t) {
    double acc = 0.0;
    for (double v : x) acc += 0.5 + std::atan((t - v) / eps) / kPi;
    return acc / x.size();
  };
  EXPECT_LT(wasserstein1_cdfs(numeric, smoothed, -6.0, 6.0, 4001), 2 * eps);
}

TEST(FormFactor, Endpoints) {
  NormalStream s = SeededRng{4, 0}.at(0);
  Eigen::VectorXd x(30);
  for (auto& v : x) v = s.normal();
  EXPECT_EQ(spectral_form_factor(x, 0.0), 1.0);
  for (double t : {0.0, 1.3, 50.0}) EXPECT_NEAR(spectral_form_factor(Eigen::VectorXd::Constant(1, 0.7), t), 1.0, 1e-15);
  EXPECT_LE(spectral_form_factor(x, 3.0), 1.0);
}

TEST(FormFactor, UncorrelatedPlateau) {
  // Independent uniform levels: E SFF(t) -> 1/N once |phi(t)|^2 is negligible.
  const int n = 200;
  double acc = 0.0;
  const int samples = 50;
  for (int r = 0; r < samples; ++r) {
    NormalStream s = SeededRng{5, std::uint64_t(r)}.at(0, RngDomain::kSampling);
    Eigen::VectorXd x(n);
    for (auto& v : x) v = 4.0 * s.uniform() - 2.0;
    acc += sff_time_average(x, 40.0, 60.0, 201);
  }
  EXPECT_NEAR(acc / samples * n, 1.0, 0.2);
}

TEST(Distances, QuantileSampleKs) {
  const int n = 100;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = semicircle_quantile((i + 0.5) / n);
  EXPECT_LE(ks_distance(x, semicircle_cdf), 0.5 / n + 1e-12);
}

TEST(Distances, ShiftedUniformW1) {
  const int n = 2000;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) / n + 0.1;
  const Cdf uniform = [](double t) { return std::clamp(t, 0.0, 1.0); };
  EXPECT_NEAR(wasserstein1(x, uniform), 0.1, 2e-3);
}

TEST(Distances, EmptySample) {
  try {
    ks_distance(Eigen::VectorXd(), semicircle_cdf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty sample");
  }
  EXPECT_THROW(wasserstein1(Eigen::VectorXd(), semicircle_cdf), Error);
}

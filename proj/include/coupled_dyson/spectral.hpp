#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

namespace cdyson {

using cplx = std::complex<double>;

/// Stieltjes transform of the empirical measure, (1/N) sum 1/(z - l_i).
/// Rejects real z and empty samples.
cplx stieltjes_of_sample(const Eigen::VectorXd& sample, cplx z);

/// Same transform averaged over several samples (equal weights per sample).
cplx mean_stieltjes(const std::vector<Eigen::VectorXd>& samples, cplx z);

/// rho_sc(x) = sqrt(4 - x^2) / (2 pi) on [-2, 2].
double semicircle_density(double x);

/// G(z) = (z - sqrt(z - 2) sqrt(z + 2)) / 2. The product of principal roots
/// puts the cut on [-2, 2] and gives G ~ 1/z at infinity.
cplx semicircle_stieltjes(cplx z);

/// Semicircle with variance v (support [-2 sqrt v, 2 sqrt v]).
cplx scaled_semicircle_stieltjes(cplx z, double variance);

double semicircle_cdf(double x);
/// Inverse of semicircle_cdf on (0, 1).
double semicircle_quantile(double u);

/// rho_eps(x) = -Im G(x + i eps) / pi: the measure convolved with the
/// Cauchy kernel of width eps, not the eps -> 0 limit.
std::vector<double> invert_stieltjes(const std::vector<cplx>& g_on_line);

/// SFF(t) = |sum_i e^{i t l_i}|^2 / N^2.
double spectral_form_factor(const Eigen::VectorXd& sample, double t);

/// Mean of SFF over `points` equally spaced times in [t0, t1].
double sff_time_average(const Eigen::VectorXd& sample, double t0, double t1, int points);

using Cdf = std::function<double(double)>;

inline constexpr int kDistanceGridPoints = 2048;

/// sup |F_N - F|. The empirical CDF jumps are checked exactly, together with
/// a 2048-point grid on [min - 1, max + 1].
double ks_distance(const Eigen::VectorXd& sample, const Cdf& reference);

/// integral |F_N - F| dx over the 2048-point grid on [min - 1, max + 1].
double wasserstein1(const Eigen::VectorXd& sample, const Cdf& reference);

/// integral |F - G| dx on a uniform grid over [lo, hi].
double wasserstein1_cdfs(const Cdf& f, const Cdf& g, double lo, double hi,
                         int points = kDistanceGridPoints);

/// Right-continuous empirical CDF of a sample (sorted internally).
Cdf empirical_cdf(Eigen::VectorXd sample);

}  // namespace cdyson

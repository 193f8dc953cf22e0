#include "coupled_dyson/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "coupled_dyson/error.hpp"

namespace cdyson {
namespace {

void require_nonempty(const Eigen::VectorXd& sample) {
  if (sample.size() == 0) fail_argument("empty sample");
}

Eigen::VectorXd sorted(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

}  // namespace

cplx stieltjes_of_sample(const Eigen::VectorXd& sample, cplx z) {
  require_nonempty(sample);
  if (z.imag() == 0.0) fail_argument("stieltjes: z must be off the real axis");
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) acc += 1.0 / (z - sample[i]);
  return acc / static_cast<double>(sample.size());
}

cplx mean_stieltjes(const std::vector<Eigen::VectorXd>& samples, cplx z) {
  if (samples.empty()) fail_argument("empty sample");
  cplx acc = 0.0;
  for (const auto& s : samples) acc += stieltjes_of_sample(s, z);
  return acc / static_cast<double>(samples.size());
}

double semicircle_density(double x) {
  if (std::abs(x) >= 2.0) return 0.0;
  return std::sqrt(4.0 - x * x) / (2.0 * std::numbers::pi);
}

cplx semicircle_stieltjes(cplx z) {
  return 0.5 * (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
}

cplx scaled_semicircle_stieltjes(cplx z, double variance) {
  if (variance < 0.0) fail_argument("semicircle: variance must be >= 0");
  if (variance == 0.0) return 1.0 / z;
  const double s = std::sqrt(variance);
  return semicircle_stieltjes(z / s) / s;
}

double semicircle_cdf(double x) {
  if (x <= -2.0) return 0.0;
  if (x >= 2.0) return 1.0;
  return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * std::numbers::pi) +
         std::asin(0.5 * x) / std::numbers::pi;
}

double semicircle_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) fail_argument("semicircle quantile: u must be in (0, 1)");
  double lo = -2.0;
  double hi = 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (semicircle_cdf(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> invert_stieltjes(const std::vector<cplx>& g_on_line) {
  std::vector<double> out(g_on_line.size());
  for (std::size_t i = 0; i < g_on_line.size(); ++i)
    out[i] = -g_on_line[i].imag() / std::numbers::pi;
  return out;
}

double spectral_form_factor(const Eigen::VectorXd& sample, double t) {
  require_nonempty(sample);
  double c = 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < sample.size(); ++i) {
    c += std::cos(t * sample[i]);
    s += std::sin(t * sample[i]);
  }
  const double n = static_cast<double>(sample.size());
  return (c * c + s * s) / (n * n);
}

double sff_time_average(const Eigen::VectorXd& sample, double t0, double t1, int points) {
  if (points < 1) fail_argument("sff average: need at least one point");
  if (points == 1) return spectral_form_factor(sample, t0);
  double acc = 0.0;
  for (int j = 0; j < points; ++j)
    acc += spectral_form_factor(sample, t0 + (t1 - t0) * j / (points - 1));
  return acc / points;
}

Cdf empirical_cdf(Eigen::VectorXd sample) {
  require_nonempty(sample);
  auto v = std::make_shared<std::vector<double>>(sample.data(), sample.data() + sample.size());
  std::sort(v->begin(), v->end());
  return [v](double x) {
    const auto it = std::upper_bound(v->begin(), v->end(), x);
    return static_cast<double>(it - v->begin()) / static_cast<double>(v->size());
  };
}

double ks_distance(const Eigen::VectorXd& sample, const Cdf& reference) {
  require_nonempty(sample);
  const Eigen::VectorXd s = sorted(sample);
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double f = reference(s[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  const Cdf emp = empirical_cdf(s);
  const double lo = s[0] - 1.0;
  const double hi = s[s.size() - 1] + 1.0;
  for (int j = 0; j < kDistanceGridPoints; ++j) {
    const double x = lo + (hi - lo) * j / (kDistanceGridPoints - 1);
    d = std::max(d, std::abs(emp(x) - reference(x)));
  }
  return d;
}

double wasserstein1_cdfs(const Cdf& f, const Cdf& g, double lo, double hi, int points) {
  if (points < 2 || !(hi > lo)) fail_argument("wasserstein: need points >= 2 and hi > lo");
  const double h = (hi - lo) / (points - 1);
  double acc = 0.0;
  double prev = std::abs(f(lo) - g(lo));
  for (int j = 1; j < points; ++j) {
    const double x = lo + h * j;
    const double cur = std::abs(f(x) - g(x));
    acc += 0.5 * h * (prev + cur);
    prev = cur;
  }
  return acc;
}

double wasserstein1(const Eigen::VectorXd& sample, const Cdf& reference) {
  require_nonempty(sample);
  const Eigen::VectorXd s = sorted(sample);
  return wasserstein1_cdfs(empirical_cdf(s), reference, s[0] - 1.0, s[s.size() - 1] + 1.0);
}

}  // namespace cdyson

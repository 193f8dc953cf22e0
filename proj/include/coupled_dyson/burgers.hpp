#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "coupled_dyson/model.hpp"
#include "coupled_dyson/spectral.hpp"

namespace cdyson {

/// Horizontal line z_m = x_m + i y0, x_m = -L + m h, m = 0 .. 2L/h.
struct Contour {
  double L = 8.0;
  double h = 0.01;
  double y0 = 0.5;

  int size() const;
  cplx z(int m) const { return {-L + m * h, y0}; }
  void validate() const;
};

/// k Stieltjes transforms on the contour, plus their moments
/// m_n^p = int x^n dmu_p for n = 0 .. order (m_0 = 1), which drive the
/// far-field closure.
struct StieltjesField {
  Contour contour;
  double t = 0.0;
  std::vector<Eigen::VectorXcd> G;
  Eigen::MatrixXd moments;  // k x (order + 1)

  int k() const { return static_cast<int>(G.size()); }
};

enum class MeasureKind { kPointMass, kSample, kSemicircle };

struct MeasureSpec {
  MeasureKind kind = MeasureKind::kPointMass;
  double location = 0.0;   // point mass
  Eigen::VectorXd sample;  // empirical measure
  double variance = 1.0;   // semicircle

  static MeasureSpec point_mass(double a = 0.0) { return {MeasureKind::kPointMass, a, {}, 1.0}; }
  static MeasureSpec from_sample(Eigen::VectorXd s) { return {MeasureKind::kSample, 0.0, std::move(s), 1.0}; }
  static MeasureSpec semicircle(double v = 1.0) { return {MeasureKind::kSemicircle, 0.0, {}, v}; }
};

inline constexpr int kDefaultMomentOrder = 16;

/// Transform of the measure at z (exact).
cplx measure_stieltjes(const MeasureSpec& measure, cplx z);
/// m_0 .. m_order of the measure.
Eigen::VectorXd measure_moments(const MeasureSpec& measure, int order);

StieltjesField init_field_from_measure(const std::vector<MeasureSpec>& measures,
                                       const Contour& contour = {},
                                       int moment_order = kDefaultMomentOrder);

struct BurgersOptions {
  double dt = 0.0;               // <= 0: min(1e-3, h y0 / 8)
  bool analytic_projection = true;
};

/// Integrates, for every p,
///   d_t G^p = -G^p d_z G^p + g_pp (G^p + z d_z G^p) - sum_{q != p} g_pq (G^q + z d_z G^q)
/// together with the moment hierarchy
///   m_n^p' = (n/2) sum_{a+b=n-2} m_a^p m_b^p - n g_pp m_n^p + n sum_{q != p} g_pq m_n^q.
/// d_z is a 4th-order centred difference along the line; the two ghost
/// points per side come from the moment series. After every RK4 step the
/// field is projected onto functions analytic above the line, which removes
/// the modes the line restriction would otherwise amplify.
StieltjesField evolve_field(const StieltjesField& field, const CouplingModel& model, double T,
                            const BurgersOptions& options = {});

/// Moment series sum_n m_n / z^{n+1}, re-expanded about -i/2 for faster
/// convergence near the contour ends.
cplx moment_series(const Eigen::VectorXd& moments, cplx z);

/// Solves G = 1 / (z - t G) by damped fixed-point iteration from 1/z and a
/// Newton polish. Throws after 1000 iterations without convergence.
cplx decoupled_fixed_point(cplx z, double t);

/// Semicircle variance reached from a point mass under damping c:
/// (1 - e^{-2ct}) / (2c), or t when c = 0.
double decoupled_variance(double damping, double t);

/// m_1 of process p from the field alone: contour integral of z G over the
/// rectangle spanned by the line and its mirror image, with the short
/// vertical sides taken from the higher moments.
double extract_first_moment(const StieltjesField& field, int p);

/// m_1(t) = e^{A t} m_1(0).
Eigen::VectorXd first_moment_ode(const CouplingModel& model, const Eigen::VectorXd& m1_0,
                                 double t);

/// Herglotz sign check: Im G < 0 at every contour point.
bool herglotz_holds(const StieltjesField& field);

}  // namespace cdyson

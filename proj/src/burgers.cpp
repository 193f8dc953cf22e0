#include "coupled_dyson/burgers.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "coupled_dyson/error.hpp"
#include "coupled_dyson/linalg.hpp"

namespace cdyson {
namespace {

constexpr double kSeriesShift = 0.5;
const cplx kI{0.0, 1.0};

double binomial(int n, int j) {
  double b = 1.0;
  for (int i = 1; i <= j; ++i) b = b * (n - j + i) / i;
  return b;
}

/// Coefficients c_n of sum c_n / (z + i s)^{n+1}: c_n = int (x + i s)^n dmu.
Eigen::VectorXcd shifted_coefficients(const Eigen::VectorXd& m) {
  const int order = static_cast<int>(m.size()) - 1;
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(order + 1);
  const cplx is = kI * kSeriesShift;
  for (int n = 0; n <= order; ++n)
    for (int j = 0; j <= n; ++j) c[n] += binomial(n, j) * m[j] * std::pow(is, n - j);
  return c;
}

cplx eval_shifted(const Eigen::VectorXcd& c, cplx z) {
  const cplx u = 1.0 / (z + kI * kSeriesShift);
  cplx acc = 0.0;
  for (Eigen::Index n = c.size() - 1; n >= 0; --n) acc = acc * u + c[n];
  return acc * u;
}

struct State {
  std::vector<Eigen::VectorXcd> G;
  Eigen::MatrixXd m;
};

class Solver {
 public:
  Solver(const Contour& contour, const CouplingModel& model, int k, int order)
      : c_(contour), gamma_(model.gamma), k_(k), order_(order), size_(contour.size()) {
    z_.resize(size_);
    for (int j = 0; j < size_; ++j) z_[j] = c_.z(j);
    for (int j = 0; j < 2; ++j) {
      left_[j] = c_.z(j - 2);
      right_[j] = c_.z(size_ + j);
    }
    fft_size_ = 1;
    while (fft_size_ < size_ + size_ / 4) fft_size_ *= 2;
  }

  void rhs(const State& s, State& d) const {
    d.G.resize(k_);
    d.m = Eigen::MatrixXd::Zero(k_, order_ + 1);
    // dzG_p and the linear combination (G + z dz G) of every process.
    std::vector<Eigen::VectorXcd> dz(k_), lin(k_);
    for (int p = 0; p < k_; ++p) {
      dz[p] = derivative(s.G[p], s.m.row(p).transpose());
      lin[p] = s.G[p] + z_.cwiseProduct(dz[p]);
    }
    for (int p = 0; p < k_; ++p) {
      d.G[p] = -s.G[p].cwiseProduct(dz[p]) + gamma_(p, p) * lin[p];
      for (int q = 0; q < k_; ++q)
        if (q != p && gamma_(p, q) != 0.0) d.G[p] -= gamma_(p, q) * lin[q];
      for (int n = 1; n <= order_; ++n) {
        double quad = 0.0;
        for (int a = 0; a <= n - 2; ++a) quad += s.m(p, a) * s.m(p, n - 2 - a);
        double v = 0.5 * n * quad - n * gamma_(p, p) * s.m(p, n);
        for (int q = 0; q < k_; ++q)
          if (q != p) v += n * gamma_(p, q) * s.m(q, n);
        d.m(p, n) = v;
      }
    }
  }

  void project(State& s) {
    std::vector<cplx> buf(fft_size_), spec;
    for (int p = 0; p < k_; ++p) {
      const Eigen::VectorXcd c = shifted_coefficients(s.m.row(p).transpose());
      Eigen::VectorXcd far(size_);
      for (int j = 0; j < size_; ++j) far[j] = eval_shifted(c, z_[j]);
      std::fill(buf.begin(), buf.end(), cplx(0.0));
      for (int j = 0; j < size_; ++j) buf[j] = s.G[p][j] - far[j];
      fft_.fwd(spec, buf);
      // Keep frequencies 0 .. n/2 - 1; drop the Nyquist bin and the negative half.
      for (int j = fft_size_ / 2; j < fft_size_; ++j) spec[j] = 0.0;
      fft_.inv(buf, spec);
      for (int j = 0; j < size_; ++j) s.G[p][j] = far[j] + buf[j];
    }
  }

 private:
  Eigen::VectorXcd derivative(const Eigen::VectorXcd& g, const Eigen::VectorXd& m) const {
    const Eigen::VectorXcd c = shifted_coefficients(m);
    const cplx gl[2] = {eval_shifted(c, left_[0]), eval_shifted(c, left_[1])};
    const cplx gr[2] = {eval_shifted(c, right_[0]), eval_shifted(c, right_[1])};
    auto at = [&](int j) -> cplx {
      if (j < 0) return gl[j + 2];
      if (j >= size_) return gr[j - size_];
      return g[j];
    };
    Eigen::VectorXcd d(size_);
    const double inv = 1.0 / (12.0 * c_.h);
    for (int j = 0; j < size_; ++j)
      d[j] = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) * inv;
    return d;
  }

  Contour c_;
  Eigen::MatrixXd gamma_;
  int k_;
  int order_;
  int size_;
  Eigen::VectorXcd z_;
  cplx left_[2];
  cplx right_[2];
  int fft_size_;
  Eigen::FFT<double> fft_;
};

void axpy(const State& x, double a, const State& dx, State& out) {
  out.G.resize(x.G.size());
  for (std::size_t p = 0; p < x.G.size(); ++p) out.G[p] = x.G[p] + a * dx.G[p];
  out.m = x.m + a * dx.m;
}

}  // namespace

int Contour::size() const { return static_cast<int>(std::llround(2.0 * L / h)) + 1; }

void Contour::validate() const {
  if (!(L > 0.0 && h > 0.0 && y0 > 0.0)) fail_argument("contour: L, h, y0 must be > 0");
  const double cells = 2.0 * L / h;
  if (std::abs(cells - std::round(cells)) > 1e-9 * cells)
    fail_argument("contour: 2L/h must be an integer");
  if (size() < 5) fail_argument("contour: need at least 5 points");
}

cplx measure_stieltjes(const MeasureSpec& measure, cplx z) {
  switch (measure.kind) {
    case MeasureKind::kPointMass:
      return 1.0 / (z - measure.location);
    case MeasureKind::kSample:
      return stieltjes_of_sample(measure.sample, z);
    case MeasureKind::kSemicircle:
      return scaled_semicircle_stieltjes(z, measure.variance);
  }
  fail_argument("unknown measure kind");
}

Eigen::VectorXd measure_moments(const MeasureSpec& measure, int order) {
  if (order < 1) fail_argument("moments: order must be >= 1");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(order + 1);
  switch (measure.kind) {
    case MeasureKind::kPointMass:
      for (int n = 0; n <= order; ++n) m[n] = std::pow(measure.location, n);
      break;
    case MeasureKind::kSample: {
      if (measure.sample.size() == 0) fail_argument("empty sample");
      Eigen::ArrayXd pw = Eigen::ArrayXd::Ones(measure.sample.size());
      for (int n = 0; n <= order; ++n) {
        m[n] = pw.mean();
        pw *= measure.sample.array();
      }
      break;
    }
    case MeasureKind::kSemicircle: {
      // Even moments are Catalan numbers times v^j.
      double catalan = 1.0;
      for (int j = 0; 2 * j <= order; ++j) {
        m[2 * j] = catalan * std::pow(measure.variance, j);
        catalan = catalan * 2.0 * (2.0 * j + 1.0) / (j + 2.0);
      }
      break;
    }
  }
  return m;
}

StieltjesField init_field_from_measure(const std::vector<MeasureSpec>& measures,
                                       const Contour& contour, int moment_order) {
  contour.validate();
  if (measures.empty()) fail_argument("burgers: need at least one measure");
  StieltjesField f;
  f.contour = contour;
  const int n = contour.size();
  const int k = static_cast<int>(measures.size());
  f.moments.resize(k, moment_order + 1);
  for (int p = 0; p < k; ++p) {
    Eigen::VectorXcd g(n);
    for (int j = 0; j < n; ++j) g[j] = measure_stieltjes(measures[p], contour.z(j));
    f.G.push_back(std::move(g));
    f.moments.row(p) = measure_moments(measures[p], moment_order).transpose();
  }
  return f;
}

cplx moment_series(const Eigen::VectorXd& moments, cplx z) {
  return eval_shifted(shifted_coefficients(moments), z);
}

bool herglotz_holds(const StieltjesField& field) {
  for (const auto& g : field.G)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      if (!(g[j].imag() < 0.0)) return false;
  return true;
}

StieltjesField evolve_field(const StieltjesField& field, const CouplingModel& model, double T,
                            const BurgersOptions& options) {
  field.contour.validate();
  const Contour& c = field.contour;
  const int k = field.k();
  if (model.gamma.rows() != k || model.gamma.cols() != k)
    fail_argument("burgers: gamma must be k x k for the field's k processes");
  if (!model.gamma.allFinite()) fail_argument("burgers: non-finite gamma");
  if (!(T >= 0.0)) fail_argument("burgers: T must be >= 0");
  const double cfl = c.h * c.y0 / 4.0;
  double dt = options.dt > 0.0 ? options.dt : std::min(1e-3, c.h * c.y0 / 8.0);
  if (dt > cfl) fail_numerical("CFL: dt exceeds h y0 / 4");
  const auto steps = static_cast<std::int64_t>(std::ceil(T / dt - 1e-9));
  if (steps > 0) dt = T / static_cast<double>(steps);

  const int order = static_cast<int>(field.moments.cols()) - 1;
  Solver solver(c, model, k, order);
  State s{field.G, field.moments};
  State k1, k2, k3, k4, tmp;
  const double limit = 10.0 / c.y0;
  for (std::int64_t n = 0; n < steps; ++n) {
    solver.rhs(s, k1);
    axpy(s, 0.5 * dt, k1, tmp);
    solver.rhs(tmp, k2);
    axpy(s, 0.5 * dt, k2, tmp);
    solver.rhs(tmp, k3);
    axpy(s, dt, k3, tmp);
    solver.rhs(tmp, k4);
    for (int p = 0; p < k; ++p)
      s.G[p] += (dt / 6.0) * (k1.G[p] + 2.0 * k2.G[p] + 2.0 * k3.G[p] + k4.G[p]);
    s.m += (dt / 6.0) * (k1.m + 2.0 * k2.m + 2.0 * k3.m + k4.m);
    if (options.analytic_projection) solver.project(s);
    for (int p = 0; p < k; ++p) {
      if (!s.G[p].allFinite() || s.G[p].cwiseAbs().maxCoeff() > limit)
        fail_numerical("blow-up: |G| exceeds 10 / y0");
      if ((s.G[p].imag().array() >= 0.0).any())
        fail_numerical("blow-up: Herglotz sign lost");
    }
  }
  StieltjesField out;
  out.contour = c;
  out.t = field.t + T;
  out.G = std::move(s.G);
  out.moments = std::move(s.m);
  return out;
}

cplx decoupled_fixed_point(cplx z, double t) {
  if (!(t >= 0.0)) fail_argument("fixed point: t must be >= 0");
  if (!(z.imag() > 0.0)) fail_argument("fixed point: need Im z > 0");
  if (t == 0.0) return 1.0 / z;
  cplx g = 1.0 / z;
  bool converged = false;
  for (int it = 0; it < 1000; ++it) {
    const cplx next = 0.5 * g + 0.5 / (z - t * g);
    const double step = std::abs(next - g);
    g = next;
    if (step < 1e-15 * std::max(1.0, std::abs(g))) {
      converged = true;
      break;
    }
  }
  if (!converged) fail_numerical("fixed point: no convergence after 1000 iterations");
  for (int it = 0; it < 3; ++it) {
    const cplx f = t * g * g - z * g + 1.0;
    const cplx df = 2.0 * t * g - z;
    if (std::abs(df) == 0.0) break;
    g -= f / df;
  }
  return g;
}

double decoupled_variance(double damping, double t) {
  if (damping == 0.0) return t;
  return -std::expm1(-2.0 * damping * t) / (2.0 * damping);
}

double extract_first_moment(const StieltjesField& field, int p) {
  if (p < 0 || p >= field.k()) fail_argument("first moment: process index out of range");
  const Contour& c = field.contour;
  const int n = c.size();
  const Eigen::VectorXcd& g = field.G[p];
  // Composite Simpson (trapezoid if the interval count is odd) of Im(z G).
  auto f = [&](int j) { return (c.z(j) * g[j]).imag(); };
  double integral = 0.0;
  if ((n - 1) % 2 == 0) {
    integral = f(0) + f(n - 1);
    for (int j = 1; j < n - 1; ++j) integral += (j % 2 ? 4.0 : 2.0) * f(j);
    integral *= c.h / 3.0;
  } else {
    for (int j = 0; j < n; ++j) integral += (j == 0 || j == n - 1 ? 0.5 : 1.0) * f(j);
    integral *= c.h;
  }
  // Vertical sides of the rectangle from the moment series (n != 1 terms).
  const cplx a{c.L, c.y0}, b{c.L, -c.y0}, d{-c.L, -c.y0}, e{-c.L, c.y0};
  cplx sides = 0.0;
  for (Eigen::Index j = 0; j < field.moments.cols(); ++j) {
    if (j == 1) continue;
    const double pw = 1.0 - static_cast<double>(j);
    const cplx v = (std::pow(a, pw) - std::pow(b, pw) + std::pow(d, pw) - std::pow(e, pw)) / pw;
    sides += field.moments(p, j) * v;
  }
  const double alpha = std::atan(c.y0 / c.L);
  return (-2.0 * integral + (sides / kI).real()) / (2.0 * std::numbers::pi - 4.0 * alpha);
}

Eigen::VectorXd first_moment_ode(const CouplingModel& model, const Eigen::VectorXd& m1_0,
                                 double t) {
  return expm(model.drift_matrix() * t) * m1_0;
}

}  // namespace cdyson

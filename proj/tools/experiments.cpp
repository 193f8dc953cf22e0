#include "experiments.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "CLI11.hpp"
#include "coupled_dyson/burgers.hpp"
#include "coupled_dyson/eigen_sde.hpp"
#include "coupled_dyson/ensemble.hpp"
#include "coupled_dyson/error.hpp"
#include "coupled_dyson/ldp.hpp"
#include "coupled_dyson/linalg.hpp"
#include "coupled_dyson/matrix_sde.hpp"
#include "coupled_dyson/spectral.hpp"
#include "coupled_dyson/trace_flow.hpp"
#include "coupled_dyson/version.hpp"

namespace cdyson::cli {
namespace {

namespace fs = std::filesystem;

// Pass thresholds for --check.
constexpr double kTraceCovarianceTolerance = 0.05;
constexpr double kSemicircleKsTolerance = 0.05;
constexpr double kBurgersOracleTolerance = 1e-3;
constexpr double kBurgersMonteCarloTolerance = 0.05;
constexpr double kInstantonActionTolerance = 1e-4;
constexpr double kInstantonTerminalTolerance = 1e-8;
constexpr double kDeterminantTolerance = 1e-10;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string preamble(const RunContext& ctx) {
  return "# config_hash=" + ctx.hash + " seed=" + std::to_string(ctx.seed) + " version=" + kVersion + "\n";
}

class Csv {
 public:
  Csv(const fs::path& path, const RunContext& ctx, const std::vector<std::string>& columns)
      : stream_(path, std::ios::binary) {
    if (!stream_) fail_argument("cannot write " + path.string());
    stream_ << preamble(ctx);
    for (std::size_t i = 0; i < columns.size(); ++i) stream_ << (i ? "," : "") << columns[i];
    stream_ << '\n';
  }

  Csv& operator<<(double v) {
    separate();
    stream_ << number(v);
    return *this;
  }
  Csv& integer(long long v) {
    separate();
    stream_ << v;
    return *this;
  }
  void end() {
    stream_ << '\n';
    first_ = true;
  }

 private:
  void separate() {
    if (!first_) stream_ << ',';
    first_ = false;
  }
  std::ofstream stream_;
  bool first_ = true;
};

void write_json(const fs::path& path, const RunContext& ctx, const std::string& subcommand,
                const json& report) {
  json doc;
  doc["config_hash"] = ctx.hash;
  doc["seed"] = ctx.seed;
  doc["version"] = kVersion;
  doc["subcommand"] = subcommand;
  doc["report"] = report;
  std::ofstream f(path, std::ios::binary);
  if (!f) fail_argument("cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

std::vector<std::string> indexed(const std::string& stem, int k) {
  std::vector<std::string> out;
  for (int p = 1; p <= k; ++p) out.push_back(stem + std::to_string(p));
  return out;
}

Eigen::MatrixXd matrix_from(const json& j, int k, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != k) fail_argument(name + " must be a k x k array");
  Eigen::MatrixXd m(k, k);
  for (int i = 0; i < k; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != k) fail_argument(name + " must be a k x k array");
    for (int c = 0; c < k; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

CouplingModel model_from(const json& j) {
  CouplingModel m;
  m.k = j.at("k").get<int>();
  m.N = j.at("N").get<int>();
  m.beta = j.at("beta").get<double>();
  if (m.k < 1 || m.N < 1) fail_argument("model: k and N must be >= 1");
  m.gamma = matrix_from(j.at("gamma"), m.k, "model.gamma");
  m.rho = matrix_from(j.at("rho"), m.k, "model.rho");
  validate_model(m);
  return m;
}

int replicas_of(const json& cfg) {
  const int r = cfg.at("ensemble").at("replicas").get<int>();
  if (r < 1) fail_argument("ensemble.replicas must be >= 1");
  return r;
}

SeededRng replica_rng(const RunContext& ctx, int r) { return {ctx.seed, static_cast<std::uint64_t>(r)}; }

MatrixScheme matrix_scheme(const std::string& s) {
  if (s == "exponential") return MatrixScheme::kExponential;
  if (s == "euler") return MatrixScheme::kEulerMaruyama;
  fail_argument("scheme must be \"exponential\" or \"euler\"");
}

// Terminal spectra from either simulator.
struct EngineSettings {
  std::string engine = "eigen";
  double T = 1.0;
  double dt = 1e-3;
  double R = 0.0;
  int max_halvings = 10;
  double initial_eps = 1e-4;
  double initial_variance = 0.0;  // > 0: start from semicircle quantiles instead of a point mass
  MatrixScheme scheme = MatrixScheme::kExponential;
};

EngineSettings engine_from(const json& j) {
  EngineSettings s;
  s.engine = j.at("engine").get<std::string>();
  s.T = j.at("T").get<double>();
  s.dt = j.at("dt").get<double>();
  s.R = j.at("R").get<double>();
  s.max_halvings = j.at("max_halvings").get<int>();
  s.initial_eps = j.at("initial_eps").get<double>();
  s.initial_variance = j.at("initial_variance").get<double>();
  if (s.initial_variance < 0.0) fail_argument("initial_variance must be >= 0");
  s.scheme = matrix_scheme(j.at("scheme").get<std::string>());
  if (s.engine != "eigen" && s.engine != "matrix") fail_argument("engine must be \"eigen\" or \"matrix\"");
  return s;
}

// Point mass at a (spread by eps for distinct eigenvalues), or the semicircle
// quantiles of the given variance centred at a.
Eigen::VectorXd initial_spectrum(int N, double a, double eps, double variance) {
  if (variance == 0.0) return Eigen::VectorXd::Constant(N, a) + perturbed_zero_start(N, eps);
  Eigen::VectorXd v(N);
  for (int i = 0; i < N; ++i) v[i] = a + std::sqrt(variance) * semicircle_quantile((i + 0.5) / N);
  return v;
}

std::vector<Eigen::VectorXd> engine_start(const CouplingModel& model, const EngineSettings& s) {
  return std::vector<Eigen::VectorXd>(model.k, initial_spectrum(model.N, 0.0, s.initial_eps, s.initial_variance));
}

std::vector<std::vector<Eigen::VectorXd>> terminal_spectra(const CouplingModel& model,
                                                           const EngineSettings& s,
                                                           const std::vector<Eigen::VectorXd>& initial,
                                                           int reps, const RunContext& ctx) {
  if (s.engine == "eigen") {
    EigenRunOptions o;
    o.T = s.T;
    o.dt = s.dt;
    o.record_every = std::numeric_limits<int>::max();
    o.record_path = false;
    o.sde.R = s.R;
    o.sde.max_halvings = s.max_halvings;
    return run_replicas(reps, ctx.threads, [&](int r) {
      return run_eigen_sde(model, initial, o, replica_rng(ctx, r)).final_state.lambda;
    });
  }
  MatrixRunOptions o;
  o.T = s.T;
  o.dt = s.dt;
  o.record_every = std::numeric_limits<int>::max();
  o.scheme = s.scheme;
  MatrixEnsembleState h0 = zero_matrix_state(model);
  for (int p = 0; p < model.k; ++p) h0.H[p].diagonal() = initial[p];
  return run_replicas(reps, ctx.threads, [&](int r) {
    return eigenvalues_of(run_matrix_sde(model, h0, o, replica_rng(ctx, r)).final_state);
  });
}

// Semicircle variance of H_p at time T from a deterministic start: the diagonal
// of the Gaussian covariance with per-entry noise rho.
Eigen::VectorXd matrix_semicircle_variance(const CouplingModel& model, double T) {
  if (T == 0.0) return Eigen::VectorXd::Zero(model.k);
  return discretize_linear_sde(model.drift_matrix(), model.rho, T).S.diagonal() / model.beta;
}

Cdf scaled_semicircle_cdf(double variance) {
  const double s = std::sqrt(variance);
  return [s](double x) { return semicircle_cdf(x / s); };
}

// ---------------------------------------------------------------------------

Outcome run_traces(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const json& in = cfg.at("integrator");
  TraceSimOptions o;
  o.T = in.at("T").get<double>();
  o.dt = in.at("dt").get<double>();
  o.record_every = in.at("record_every").get<int>();
  o.burn_in = in.at("burn_in").get<double>();
  const std::string scheme = in.at("scheme").get<std::string>();
  if (scheme == "exact") {
    o.scheme = TraceScheme::kExact;
  } else if (scheme == "euler") {
    o.scheme = TraceScheme::kEulerMaruyama;
  } else {
    fail_argument("integrator.scheme must be \"exact\" or \"euler\"");
  }
  const int reps = replicas_of(cfg);
  const auto paths = run_replicas(reps, ctx.threads, [&](int r) {
    return simulate_coupled_traces(model, o, replica_rng(ctx, r));
  });

  const int k = model.k;
  std::vector<std::string> cols{"t"};
  for (const auto& c : indexed("tau_", k)) cols.push_back(c);
  cols.push_back("replica");
  Outcome out;
  out.artifacts = {"traces.csv", "traces_covariance.json"};
  Csv csv(ctx.out / "traces.csv", ctx, cols);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd outer = Eigen::MatrixXd::Zero(k, k);
  long long n = 0;
  for (int r = 0; r < reps; ++r) {
    const TracePath& path = paths[r];
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      csv << path.times[i];
      for (int p = 0; p < k; ++p) csv << path.values[i][p];
      csv.integer(r);
      csv.end();
      sum += path.values[i];
      outer += path.values[i] * path.values[i].transpose();
      ++n;
    }
  }
  const Eigen::VectorXd mean = sum / static_cast<double>(n);
  const Eigen::MatrixXd cov =
      (outer - static_cast<double>(n) * mean * mean.transpose()) / static_cast<double>(std::max<long long>(n - 1, 1));

  json& rep = out.report;
  rep["samples"] = n;
  rep["empirical_mean"] = to_json(mean);
  rep["empirical_covariance"] = to_json(cov);
  rep["unstable_model"] = paths.front().unstable_model;
  if (paths.front().unstable_model) {
    rep["stationary_covariance"] = nullptr;
    out.check_passed = false;
  } else {
    const StationaryCovariance sc = stationary_covariance(model);
    rep["stationary_covariance"] = to_json(sc.sigma);
    rep["lyapunov_residual"] = sc.lyapunov_residual;
    if (sc.closed_form_gap) {
      rep["closed_form"] = to_json(Eigen::MatrixXd(
          closed_form_stationary_covariance(model.gamma(0, 1), model.rho(0, 1)) / model.beta));
      rep["closed_form_gap"] = *sc.closed_form_gap;
    }
    double worst = 0.0;
    Eigen::MatrixXd rel(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double scale = std::abs(sc.sigma(i, j)) > 1e-12 ? std::abs(sc.sigma(i, j))
                                                               : std::sqrt(sc.sigma(i, i) * sc.sigma(j, j));
        rel(i, j) = std::abs(cov(i, j) - sc.sigma(i, j)) / scale;
        worst = std::max(worst, rel(i, j));
      }
    rep["relative_error"] = to_json(rel);
    rep["max_relative_error"] = worst;
    out.check_passed = worst < kTraceCovarianceTolerance;
  }
  write_json(ctx.out / "traces_covariance.json", ctx, "traces", rep);
  return out;
}

Outcome run_matrix(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const json& in = cfg.at("integrator");
  MatrixRunOptions o;
  o.T = in.at("T").get<double>();
  o.dt = in.at("dt").get<double>();
  o.record_every = in.at("record_every").get<int>();
  o.scheme = matrix_scheme(in.at("scheme").get<std::string>());
  o.bound_slope = in.at("bound_slope").get<double>();
  o.record_spectra = cfg.at("record_spectra").get<bool>();
  const int reps = replicas_of(cfg);
  const auto runs = run_replicas(reps, ctx.threads, [&](int r) {
    return run_matrix_sde(model, MatrixEnsembleState{}, o, replica_rng(ctx, r));
  });

  const int k = model.k;
  Outcome out;
  out.artifacts = {"matrix_traces.csv"};
  std::vector<std::string> cols{"t"};
  for (const auto& c : indexed("tau_", k)) cols.push_back(c);
  cols.push_back("replica");
  Csv traces(ctx.out / "matrix_traces.csv", ctx, cols);
  for (int r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < runs[r].times.size(); ++i) {
      traces << runs[r].times[i];
      for (int p = 0; p < k; ++p) traces << runs[r].traces[i][p];
      traces.integer(r);
      traces.end();
    }
  if (o.record_spectra) {
    out.artifacts.push_back("matrix_spectra.csv");
    Csv spectra(ctx.out / "matrix_spectra.csv", ctx, {"t", "replica", "process", "index", "lambda"});
    for (int r = 0; r < reps; ++r)
      for (std::size_t i = 0; i < runs[r].times.size(); ++i)
        for (int p = 0; p < k; ++p)
          for (Eigen::Index j = 0; j < runs[r].spectra[i][p].size(); ++j) {
            spectra << runs[r].times[i];
            spectra.integer(r).integer(p + 1).integer(j);
            spectra << runs[r].spectra[i][p][j];
            spectra.end();
          }
  }
  json rows = json::array();
  bool violated = false;
  for (const auto& run : runs) {
    rows.push_back({{"bound_violated", run.bound_violated},
                    {"max_abs_eigenvalue", run.max_abs_eigenvalue},
                    {"final_traces", to_json(run.traces.back())}});
    violated = violated || run.bound_violated;
  }
  out.report["replicas"] = rows;
  out.report["any_bound_violated"] = violated;
  out.check_passed = !violated;
  out.artifacts.push_back("matrix_summary.json");
  write_json(ctx.out / "matrix_summary.json", ctx, "matrix", out.report);
  return out;
}

Outcome run_eigen(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const json& in = cfg.at("integrator");
  EigenRunOptions o;
  o.T = in.at("T").get<double>();
  o.dt = in.at("dt").get<double>();
  o.record_every = in.at("record_every").get<int>();
  o.sde.R = in.at("R").get<double>();
  o.sde.max_halvings = in.at("max_halvings").get<int>();
  o.bound_slope = in.at("bound_slope").get<double>();
  const std::vector<Eigen::VectorXd> initial(
      model.k, initial_spectrum(model.N, 0.0, in.at("initial_eps").get<double>(), in.at("initial_variance").get<double>()));
  const int reps = replicas_of(cfg);
  const auto runs = run_replicas(reps, ctx.threads, [&](int r) {
    return run_eigen_sde(model, initial, o, replica_rng(ctx, r));
  });

  Outcome out;
  out.artifacts = {"eigen_paths.csv", "eigen_lyapunov.csv", "eigen_diagnostics.json"};
  Csv paths(ctx.out / "eigen_paths.csv", ctx, {"t", "replica", "process", "index", "lambda"});
  Csv lyap(ctx.out / "eigen_lyapunov.csv", ctx, {"t", "replica", "f"});
  json rows = json::array();
  bool violated = false;
  for (int r = 0; r < reps; ++r) {
    const EigenRunResult& run = runs[r];
    for (std::size_t i = 0; i < run.path.times.size(); ++i) {
      for (int p = 0; p < model.k; ++p)
        for (int j = 0; j < model.N; ++j) {
          paths << run.path.times[i];
          paths.integer(r).integer(p + 1).integer(j);
          paths << run.path.spectra[i][p][j];
          paths.end();
        }
      lyap << run.path.times[i];
      lyap.integer(r);
      lyap << run.lyapunov[i];
      lyap.end();
    }
    rows.push_back({{"rejections", run.final_state.rejections},
                    {"resorts", run.final_state.resorts},
                    {"bound_violated", run.bound_violated},
                    {"max_abs_eigenvalue", run.max_abs_eigenvalue},
                    {"final_min_gap", run.final_state.min_gap}});
    violated = violated || run.bound_violated;
  }
  out.report["R"] = EigenIntegrator(model, o.sde).R();
  out.report["replicas"] = rows;
  out.report["any_bound_violated"] = violated;
  out.check_passed = !violated;
  write_json(ctx.out / "eigen_diagnostics.json", ctx, "eigen", out.report);
  return out;
}

Outcome run_semicircle_check(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const EngineSettings s = engine_from(cfg.at("integrator"));
  const int reps = replicas_of(cfg);
  const auto spectra = terminal_spectra(model, s, engine_start(model, s), reps, ctx);
  const Eigen::VectorXd variance = matrix_semicircle_variance(model, s.T);

  Outcome out;
  out.artifacts = {"semicircle_spectra.csv", "semicircle_check.json"};
  Csv csv(ctx.out / "semicircle_spectra.csv", ctx, {"replica", "process", "index", "lambda"});
  json ks = json::array(), w1 = json::array();
  double ks_sum = 0.0, w1_sum = 0.0, ks_max = 0.0;
  for (int r = 0; r < reps; ++r) {
    json ks_row = json::array(), w1_row = json::array();
    for (int p = 0; p < model.k; ++p) {
      const Eigen::VectorXd& lam = spectra[r][p];
      for (Eigen::Index j = 0; j < lam.size(); ++j) {
        csv.integer(r).integer(p + 1).integer(j);
        csv << lam[j];
        csv.end();
      }
      const Cdf ref = scaled_semicircle_cdf(variance[p]);
      const double d = ks_distance(lam, ref);
      const double w = wasserstein1(lam, ref);
      ks_row.push_back(d);
      w1_row.push_back(w);
      ks_sum += d;
      w1_sum += w;
      ks_max = std::max(ks_max, d);
    }
    ks.push_back(ks_row);
    w1.push_back(w1_row);
  }
  const double count = static_cast<double>(reps) * model.k;
  json& rep = out.report;
  rep["engine"] = s.engine;
  rep["N"] = model.N;
  rep["T"] = s.T;
  rep["reference_variance"] = to_json(variance);
  rep["ks"] = ks;
  rep["w1"] = w1;
  rep["mean_ks"] = ks_sum / count;
  rep["max_ks"] = ks_max;
  rep["mean_w1"] = w1_sum / count;
  out.check_passed = ks_sum / count < kSemicircleKsTolerance;
  write_json(ctx.out / "semicircle_check.json", ctx, "semicircle-check", rep);
  return out;
}

MeasureSpec measure_from(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "point_mass") return MeasureSpec::point_mass(j.value("location", 0.0));
  if (kind == "semicircle") return MeasureSpec::semicircle(j.value("variance", 1.0));
  if (kind == "sample") {
    const auto v = j.at("sample").get<std::vector<double>>();
    return MeasureSpec::from_sample(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  fail_argument("initial.kind must be point_mass, semicircle or sample");
}

Outcome run_burgers(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const int k = model.k;
  const json& cj = cfg.at("contour");
  const Contour contour{cj.at("L").get<double>(), cj.at("h").get<double>(), cj.at("y0").get<double>()};
  contour.validate();
  const json& init = cfg.at("initial");
  if (!init.is_array() || static_cast<int>(init.size()) != k) fail_argument("initial must list k measures");
  std::vector<MeasureSpec> measures;
  for (const auto& m : init) measures.push_back(measure_from(m));
  auto times = cfg.at("times").get<std::vector<double>>();
  if (times.empty() || !std::is_sorted(times.begin(), times.end()) || times.front() <= 0.0)
    fail_argument("times must be positive and increasing");
  BurgersOptions bo;
  bo.dt = cfg.at("dt").get<double>();
  bo.analytic_projection = cfg.at("analytic_projection").get<bool>();
  const int stride = cfg.at("record_stride").get<int>();
  if (stride < 1) fail_argument("record_stride must be >= 1");
  const double window = cfg.at("oracle_window").get<double>();

  bool oracle = true;
  for (int p = 0; p < k; ++p) {
    for (int q = 0; q < k; ++q)
      if (p != q && model.gamma(p, q) != 0.0) oracle = false;
    if (measures[p].kind == MeasureKind::kSample) oracle = false;
  }
  auto oracle_value = [&](int p, cplx z, double t) {
    const double c = model.gamma(p, p);
    const MeasureSpec& m = measures[p];
    const double v0 = m.kind == MeasureKind::kSemicircle ? m.variance : 0.0;
    const double shift = m.kind == MeasureKind::kPointMass ? m.location * std::exp(-c * t) : 0.0;
    return scaled_semicircle_stieltjes(z - shift, v0 * std::exp(-2.0 * c * t) + decoupled_variance(c, t));
  };

  StieltjesField field = init_field_from_measure(measures, contour, cfg.at("moment_order").get<int>());
  Eigen::VectorXd m1_0(k);
  for (int p = 0; p < k; ++p) m1_0[p] = field.moments(p, 1);

  Outcome out;
  out.artifacts = {"burgers_field.csv", "burgers_report.json"};
  std::vector<std::string> cols{"t", "re_z", "im_z"};
  for (int p = 1; p <= k; ++p) {
    cols.push_back("re_G_" + std::to_string(p));
    cols.push_back("im_G_" + std::to_string(p));
  }
  Csv csv(ctx.out / "burgers_field.csv", ctx, cols);
  auto dump = [&](const StieltjesField& f) {
    for (int m = 0; m < contour.size(); m += stride) {
      const cplx z = contour.z(m);
      csv << f.t << z.real() << z.imag();
      for (int p = 0; p < k; ++p) csv << f.G[p][m].real() << f.G[p][m].imag();
      csv.end();
    }
  };
  dump(field);

  json snapshots = json::array();
  bool herglotz_all = true;
  double last_window_error = 0.0;
  for (double t : times) {
    field = evolve_field(field, model, t - field.t, bo);
    field.t = t;
    dump(field);
    json snap;
    snap["t"] = t;
    const bool h = herglotz_holds(field);
    herglotz_all = herglotz_all && h;
    snap["herglotz"] = h;
    const Eigen::VectorXd ode = first_moment_ode(model, m1_0, t);
    json extracted = json::array();
    for (int p = 0; p < k; ++p) extracted.push_back(extract_first_moment(field, p));
    snap["first_moment_extracted"] = extracted;
    snap["first_moment_ode"] = to_json(ode);
    snap["first_moment_hierarchy"] = to_json(Eigen::VectorXd(field.moments.col(1)));
    if (oracle) {
      json in_window = json::array(), all = json::array();
      double worst = 0.0;
      for (int p = 0; p < k; ++p) {
        double ew = 0.0, ea = 0.0;
        for (int m = 0; m < contour.size(); ++m) {
          const cplx z = contour.z(m);
          const double e = std::abs(field.G[p][m] - oracle_value(p, z, t));
          ea = std::max(ea, e);
          if (std::abs(z.real()) <= window) ew = std::max(ew, e);
        }
        in_window.push_back(ew);
        all.push_back(ea);
        worst = std::max(worst, ew);
      }
      snap["oracle_error_window"] = in_window;
      snap["oracle_error_all"] = all;
      last_window_error = worst;
    }
    snapshots.push_back(snap);
  }

  json& rep = out.report;
  rep["oracle_available"] = oracle;
  rep["oracle_window"] = window;
  rep["snapshots"] = snapshots;
  rep["herglotz"] = herglotz_all;
  out.check_passed = herglotz_all;
  if (oracle) {
    rep["final_oracle_error"] = last_window_error;
    out.check_passed = out.check_passed && last_window_error < kBurgersOracleTolerance;
  }

  const json& mc = cfg.at("monte_carlo");
  if (mc.at("enabled").get<bool>()) {
    CouplingModel mm = model;
    mm.N = mc.at("N").get<int>();
    mm.beta = 1.0;
    validate_model(mm);
    json mc_engine = mc;
    mc_engine["T"] = times.back();
    const EngineSettings s = engine_from(mc_engine);
    // Same law as the field's initial data: a spread point mass or semicircle quantiles.
    std::vector<Eigen::VectorXd> start;
    for (const auto& m : measures) {
      if (m.kind == MeasureKind::kPointMass)
        start.push_back(initial_spectrum(mm.N, m.location, s.initial_eps, 0.0));
      else if (m.kind == MeasureKind::kSemicircle)
        start.push_back(initial_spectrum(mm.N, 0.0, s.initial_eps, m.variance));
      else
        fail_argument("monte_carlo needs point-mass or semicircle initial data");
    }
    const int reps = mc.at("replicas").get<int>();
    if (reps < 1) fail_argument("monte_carlo.replicas must be >= 1");
    const auto spectra = terminal_spectra(mm, s, start, reps, ctx);

    out.artifacts.push_back("burgers_mc.csv");
    std::vector<std::string> mc_cols{"re_z", "im_z"};
    for (int p = 1; p <= k; ++p) {
      mc_cols.push_back("re_G_mc_" + std::to_string(p));
      mc_cols.push_back("im_G_mc_" + std::to_string(p));
    }
    Csv mcsv(ctx.out / "burgers_mc.csv", ctx, mc_cols);
    double worst = 0.0;
    std::vector<Eigen::VectorXd> per_process(reps);
    for (int m = 0; m < contour.size(); m += 1) {
      const cplx z = contour.z(m);
      if (std::abs(z.real()) > window) continue;
      const bool write = m % stride == 0;
      if (write) mcsv << z.real() << z.imag();
      for (int p = 0; p < k; ++p) {
        for (int r = 0; r < reps; ++r) per_process[r] = spectra[r][p];
        const cplx g = mean_stieltjes(per_process, z);
        worst = std::max(worst, std::abs(g - field.G[p][m]));
        if (write) mcsv << g.real() << g.imag();
      }
      if (write) mcsv.end();
    }
    rep["monte_carlo"] = {{"engine", s.engine}, {"N", mm.N}, {"replicas", reps}, {"t", s.T}, {"discrepancy", worst}};
    out.check_passed = out.check_passed && worst < kBurgersMonteCarloTolerance;
  }
  write_json(ctx.out / "burgers_report.json", ctx, "burgers", rep);
  return out;
}

LdpModel ldp_from(const json& j) { return {j.at("gamma").get<double>(), j.at("rho").get<double>()}; }

Outcome run_instanton(const json& cfg, const RunContext& ctx) {
  const LdpModel m = ldp_from(cfg.at("ldp"));
  const auto target = cfg.at("target").get<std::vector<double>>();
  if (target.size() != 2) fail_argument("target must have two entries");
  const Eigen::Vector2d v(target[0], target[1]);
  const InstantonSolution sol = solve_instanton(v, m, cfg.at("T").get<double>(), cfg.at("steps").get<int>());

  Outcome out;
  out.artifacts = {"instanton_path.csv", "instanton.json"};
  Csv csv(ctx.out / "instanton_path.csv", ctx, {"t", "x", "y", "p_x", "p_y"});
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    csv << sol.times[i] << sol.x_path[i][0] << sol.x_path[i][1] << sol.p_path[i][0] << sol.p_path[i][1];
    csv.end();
  }
  const double rate = rate_function(v[0], v[1], m);
  json& rep = out.report;
  rep["action"] = sol.action;
  rep["rate"] = rate;
  rep["abs_error"] = std::abs(sol.action - rate);
  rep["terminal_error"] = sol.terminal_error;
  rep["hamiltonian_drift"] = sol.hamiltonian_drift;
  rep["action_quadrature"] = sol.estimates.quadrature;
  rep["action_endpoint"] = sol.estimates.endpoint;
  rep["estimate_mismatch"] = sol.estimates.mismatch;
  rep["p0"] = to_json(Eigen::VectorXd(sol.p0));
  out.check_passed = std::abs(sol.action - rate) < kInstantonActionTolerance &&
                     sol.terminal_error < kInstantonTerminalTolerance && !sol.estimates.mismatch;
  write_json(ctx.out / "instanton.json", ctx, "instanton", rep);
  return out;
}

Outcome run_rate_sweep(const json& cfg, const RunContext& ctx) {
  const LdpModel m = ldp_from(cfg.at("ldp"));
  const json& g = cfg.at("grid");
  const double lo = g.at("min").get<double>(), hi = g.at("max").get<double>();
  const int n = g.at("points").get<int>();
  if (n < 2 || !(hi > lo)) fail_argument("grid needs points >= 2 and max > min");

  Outcome out;
  out.artifacts = {"rate_grid.csv", "rate_sweep.json"};
  Csv csv(ctx.out / "rate_grid.csv", ctx, {"x", "y", "rate"});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x = lo + (hi - lo) * i / (n - 1), y = lo + (hi - lo) * j / (n - 1);
      csv << x << y << rate_function(x, y, m);
      csv.end();
    }

  const json& ph = cfg.at("phase");
  const double gmin = ph.at("gamma_min").get<double>(), gmax = ph.at("gamma_max").get<double>();
  const int count = ph.at("count").get<int>();
  if (count < 2) fail_argument("phase.count must be >= 2");
  std::vector<double> gammas;
  for (int i = 0; i < count; ++i) gammas.push_back(gmin + (gmax - gmin) * i / (count - 1));
  for (double e : ph.at("extra").get<std::vector<double>>()) gammas.push_back(e);
  const auto rows = phase_diagnostics(gammas, ph.at("rho").get<double>());
  json table = json::array();
  double worst = 0.0;
  for (const auto& r : rows) {
    const double gap = std::abs(r.det_sigma_inverse - r.det_formula);
    worst = std::max(worst, gap);
    table.push_back({{"gamma", r.gamma},
                     {"det_sigma_inverse", r.det_sigma_inverse},
                     {"det_formula", r.det_formula},
                     {"abs_gap", gap},
                     {"null_direction", to_json(Eigen::VectorXd(r.null_direction))},
                     {"alignment_plus", r.alignment_plus},
                     {"alignment_minus", r.alignment_minus}});
  }
  out.report["ldp"] = {{"gamma", m.gamma}, {"rho", m.rho}};
  out.report["phase"] = table;
  out.report["max_det_gap"] = worst;
  out.check_passed = worst < kDeterminantTolerance;
  write_json(ctx.out / "rate_sweep.json", ctx, "rate-sweep", out.report);
  return out;
}

Outcome run_volume(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const json& in = cfg.at("integrator");
  EigenRunOptions o;
  o.T = in.at("T").get<double>();
  o.dt = in.at("dt").get<double>();
  o.record_every = in.at("record_every").get<int>();
  o.sde.R = in.at("R").get<double>();
  o.sde.max_halvings = in.at("max_halvings").get<int>();
  const double eps = in.at("initial_eps").get<double>();
  const double j0 = cfg.at("j0").get<double>();
  const std::vector<Eigen::VectorXd> initial(model.k, perturbed_zero_start(model.N, eps));
  const int reps = replicas_of(cfg);
  const auto ledgers = run_replicas(reps, ctx.threads, [&](int r) {
    return integrate_volume(run_eigen_sde(model, initial, o, replica_rng(ctx, r)).path, model, j0);
  });

  Outcome out;
  out.artifacts = {"volume.csv", "volume.json"};
  Csv csv(ctx.out / "volume.csv", ctx, {"t", "replica", "log_jacobian", "base_rate_term", "repulsion_term"});
  json rows = json::array();
  bool all_hold = true;
  double worst_excess = -std::numeric_limits<double>::infinity();
  double equality_gap = 0.0;
  for (int r = 0; r < reps; ++r) {
    const VolumeLedger& l = ledgers[r];
    double excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < l.times.size(); ++i) {
      csv << l.times[i];
      csv.integer(r);
      csv << l.log_jacobian[i] << l.base_rate_term[i] << l.repulsion_term[i];
      csv.end();
      const double e = l.log_jacobian[i] - (l.log_j0 + l.base_rate_term[i]);
      excess = std::max(excess, e);
      equality_gap = std::max(equality_gap, std::abs(e));
    }
    const bool holds = liouville_inequality_holds(l);
    all_hold = all_hold && holds;
    worst_excess = std::max(worst_excess, excess);
    rows.push_back({{"holds", holds}, {"max_excess", excess}, {"final_log_jacobian", l.log_jacobian.back()}});
  }
  out.report["N"] = model.N;
  out.report["replicas"] = rows;
  out.report["all_hold"] = all_hold;
  out.report["max_excess"] = worst_excess;
  out.report["max_equality_gap"] = equality_gap;
  out.check_passed = all_hold;
  write_json(ctx.out / "volume.json", ctx, "volume", out.report);
  return out;
}

Outcome run_sff(const json& cfg, const RunContext& ctx) {
  const CouplingModel model = model_from(cfg.at("model"));
  const EngineSettings s = engine_from(cfg.at("integrator"));
  const int reps = replicas_of(cfg);
  const auto spectra = terminal_spectra(model, s, engine_start(model, s), reps, ctx);

  const json& g = cfg.at("grid");
  const double t_min = g.at("t_min").get<double>(), t_max = g.at("t_max").get<double>();
  const int points = g.at("points").get<int>();
  if (!(t_min > 0.0 && t_max > t_min) || points < 2) fail_argument("grid needs 0 < t_min < t_max, points >= 2");
  const json& late = cfg.at("late");
  const double l0 = late.at("t0").get<double>(), l1 = late.at("t1").get<double>();
  const int lp = late.at("points").get<int>();

  Outcome out;
  out.artifacts = {"sff.csv", "sff.json"};
  Csv csv(ctx.out / "sff.csv", ctx, {"t", "sff"});
  auto mean_sff = [&](double t) {
    double acc = 0.0;
    for (const auto& rs : spectra) acc += spectral_form_factor(rs[0], t);
    return acc / reps;
  };
  const double sff0 = mean_sff(0.0);
  csv << 0.0 << sff0;
  csv.end();
  for (int i = 0; i < points; ++i) {
    const double t = t_min * std::pow(t_max / t_min, static_cast<double>(i) / (points - 1));
    csv << t << mean_sff(t);
    csv.end();
  }
  double late_avg = 0.0;
  json per = json::array();
  for (const auto& rs : spectra) {
    const double a = sff_time_average(rs[0], l0, l1, lp);
    per.push_back(a);
    late_avg += a / reps;
  }
  const double inv_n = 1.0 / model.N;
  json& rep = out.report;
  rep["N"] = model.N;
  rep["engine"] = s.engine;
  rep["sff0"] = sff0;
  rep["late_window"] = {l0, l1};
  rep["late_average_per_replica"] = per;
  rep["late_average"] = late_avg;
  rep["inverse_N"] = inv_n;
  rep["late_average_over_inverse_N"] = late_avg / inv_n;
  const bool within = late_avg >= 0.5 * inv_n && late_avg <= 2.0 * inv_n;
  rep["within_factor_2"] = within;
  out.check_passed = sff0 == 1.0 && within;
  write_json(ctx.out / "sff.json", ctx, "sff", rep);
  return out;
}

// ---------------------------------------------------------------------------

json model_json(int k, int N, const Eigen::MatrixXd& gamma, const Eigen::MatrixXd& rho) {
  return {{"k", k}, {"N", N}, {"beta", 1.0}, {"gamma", to_json(gamma)}, {"rho", to_json(rho)}};
}

Eigen::MatrixXd pair(double diag, double off) {
  Eigen::MatrixXd m(2, 2);
  m << diag, off, off, diag;
  return m;
}

json engine_json(const std::string& engine, double T, double dt) {
  return {{"engine", engine}, {"T", T}, {"dt", dt}, {"R", 0.0},
          {"max_halvings", 10}, {"initial_eps", 1e-4}, {"initial_variance", 0.0}, {"scheme", "exponential"}};
}

void check_keys(const json& defaults, const json& given, const std::string& path) {
  if (!given.is_object()) fail_argument("config " + (path.empty() ? std::string("root") : path) + " must be an object");
  for (auto it = given.begin(); it != given.end(); ++it) {
    const std::string here = path + "/" + it.key();
    if (!defaults.contains(it.key())) fail_argument("unknown config key: " + here);
    if (defaults[it.key()].is_object()) check_keys(defaults[it.key()], it.value(), here);
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"traces", "matrix", "eigen", "semicircle-check", "burgers",
                                              "instanton", "rate-sweep", "volume", "sff"};
  return names;
}

json default_config(const std::string& sub) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Identity(1, 1);
  const Eigen::MatrixXd half = Eigen::MatrixXd::Constant(1, 1, 0.5);
  json c;
  c["scenario"] = sub;
  if (sub == "traces") {
    c["model"] = model_json(2, 1, pair(0.5, 0.25), pair(1.0, 0.3));
    c["integrator"] = {{"T", 40000.0}, {"dt", 4.0}, {"record_every", 1}, {"scheme", "exact"}, {"burn_in", 100.0}};
    c["ensemble"] = {{"replicas", 10}, {"master_seed", 1}};
  } else if (sub == "matrix") {
    c["model"] = model_json(2, 50, pair(0.5, 0.2), pair(1.0, 0.0));
    c["integrator"] = {{"T", 2.0}, {"dt", 0.01}, {"record_every", 10}, {"scheme", "exponential"}, {"bound_slope", 2.0}};
    c["record_spectra"] = true;
    c["ensemble"] = {{"replicas", 4}, {"master_seed", 1}};
  } else if (sub == "eigen") {
    c["model"] = model_json(2, 20, pair(0.5, 0.2), pair(1.0, 0.0));
    c["integrator"] = {{"T", 1.0}, {"dt", 1e-3}, {"record_every", 50}, {"R", 0.0},
                       {"max_halvings", 10}, {"bound_slope", 2.0}, {"initial_eps", 1e-4}, {"initial_variance", 0.0}};
    c["ensemble"] = {{"replicas", 4}, {"master_seed", 1}};
  } else if (sub == "semicircle-check") {
    c["model"] = model_json(1, 200, half, one);
    c["integrator"] = engine_json("matrix", 10.0, 1e-3);
    c["integrator"]["scheme"] = "euler";
    c["ensemble"] = {{"replicas", 20}, {"master_seed", 1}};
  } else if (sub == "burgers") {
    c["model"] = model_json(1, 1, Eigen::MatrixXd::Zero(1, 1), one);
    c["contour"] = {{"L", 8.0}, {"h", 0.01}, {"y0", 0.5}};
    c["initial"] = json::array({{{"kind", "point_mass"}, {"location", 0.0}}});
    c["times"] = {0.25, 0.5, 1.0};
    c["dt"] = 0.0;
    c["moment_order"] = kDefaultMomentOrder;
    c["analytic_projection"] = true;
    c["oracle_window"] = 4.0;
    c["record_stride"] = 1;
    json mc = engine_json("eigen", 1.0, 1e-3);
    mc.erase("T");
    mc["enabled"] = false;
    mc["N"] = 300;
    mc["replicas"] = 50;
    c["monte_carlo"] = mc;
    c["ensemble"] = {{"master_seed", 1}};
  } else if (sub == "instanton") {
    c["ldp"] = {{"gamma", 0.2}, {"rho", 0.1}};
    c["target"] = {1.0, 0.5};
    c["T"] = 20.0;
    c["steps"] = 2000;
  } else if (sub == "rate-sweep") {
    c["ldp"] = {{"gamma", 0.2}, {"rho", 0.1}};
    c["grid"] = {{"min", -2.0}, {"max", 2.0}, {"points", 81}};
    c["phase"] = {{"rho", 0.0}, {"gamma_min", -0.49}, {"gamma_max", 0.49}, {"count", 99}, {"extra", {-0.499, 0.499}}};
  } else if (sub == "volume") {
    c["model"] = model_json(1, 50, half, one);
    c["integrator"] = {{"T", 2.0}, {"dt", 1e-3}, {"record_every", 1}, {"R", 0.0},
                       {"max_halvings", 10}, {"initial_eps", 1e-4}};
    c["j0"] = 1.0;
    c["ensemble"] = {{"replicas", 20}, {"master_seed", 1}};
  } else if (sub == "sff") {
    c["model"] = model_json(1, 200, half, one);
    c["integrator"] = engine_json("matrix", 20.0, 20.0);
    c["grid"] = {{"t_min", 0.01}, {"t_max", 1000.0}, {"points", 200}};
    c["late"] = {{"t0", 40.0}, {"t1", 60.0}, {"points", 2001}};
    c["ensemble"] = {{"replicas", 1}, {"master_seed", 1}};
  } else {
    fail_argument("unknown subcommand: " + sub);
  }
  c["output"] = {{"directory", "out/" + sub}};
  return c;
}

json effective_config(const std::string& sub, const json& file_config) {
  json c = default_config(sub);
  if (file_config.is_null()) return c;
  check_keys(c, file_config, "");
  c.merge_patch(file_config);
  return c;
}

std::string config_hash(const json& config) {
  json c = config;
  if (c.contains("ensemble") && c["ensemble"].is_object()) c["ensemble"].erase("master_seed");
  c.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(c.dump()));
  return buf;
}

Outcome run_subcommand(const std::string& sub, const json& config, const RunContext& ctx) {
  if (sub == "traces") return run_traces(config, ctx);
  if (sub == "matrix") return run_matrix(config, ctx);
  if (sub == "eigen") return run_eigen(config, ctx);
  if (sub == "semicircle-check") return run_semicircle_check(config, ctx);
  if (sub == "burgers") return run_burgers(config, ctx);
  if (sub == "instanton") return run_instanton(config, ctx);
  if (sub == "rate-sweep") return run_rate_sweep(config, ctx);
  if (sub == "volume") return run_volume(config, ctx);
  if (sub == "sff") return run_sff(config, ctx);
  fail_argument("unknown subcommand: " + sub);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto error = [&](const char* kind, const std::string& message, int code) {
    err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
    return code;
  };

  CLI::App app{"Coupled matrix Ornstein-Uhlenbeck experiments", "coupled-dyson"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 0;
  bool check = false;
  bool print_config = false;
  for (const auto& name : subcommands()) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", config_path, "JSON config; missing keys take defaults");
    s->add_option("--seed", seed, "master seed (overrides ensemble.master_seed)");
    s->add_option("--out", out_dir, "output directory (overrides output.directory)");
    s->add_option("--threads", threads, "worker threads, 0 = hardware")->check(CLI::NonNegativeNumber);
    s->add_flag("--check", check, "exit 4 when the scenario's acceptance check fails");
    s->add_flag("--print-config", print_config, "print the effective config and exit");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    return error("config", e.what(), 2);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  RunContext ctx;
  json config;
  try {
    json file_config;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) return error("config", "cannot open config " + config_path, 2);
      file_config = json::parse(f);
    }
    config = effective_config(sub, file_config);
    if (print_config) {
      out << config.dump(2) << '\n';
      return 0;
    }
    const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;
    ctx.seed = seed_given ? seed : config.value(json::json_pointer("/ensemble/master_seed"), std::uint64_t{0});
    ctx.out = out_dir.empty() ? fs::path(config.at("output").at("directory").get<std::string>()) : fs::path(out_dir);
    ctx.threads = threads;
    ctx.hash = config_hash(config);
    fs::create_directories(ctx.out);
  } catch (const json::exception& e) {
    return error("config", e.what(), 2);
  } catch (const Error& e) {
    return error("config", e.what(), 2);
  } catch (const fs::filesystem_error& e) {
    return error("config", e.what(), 2);
  }

  Outcome outcome;
  try {
    outcome = run_subcommand(sub, config, ctx);
  } catch (const json::exception& e) {
    return error("config", e.what(), 2);
  } catch (const Error& e) {
    return e.kind() == ErrorKind::kInvalidArgument ? error("config", e.what(), 2) : error("numerical", e.what(), 3);
  } catch (const std::exception& e) {
    return error("numerical", e.what(), 3);
  }

  json summary{{"subcommand", sub}, {"out", ctx.out.string()}, {"check_passed", outcome.check_passed}};
  json files = json::array();
  for (const auto& a : outcome.artifacts) files.push_back(a.string());
  summary["artifacts"] = files;
  out << summary.dump() << '\n';
  if (check && !outcome.check_passed) return error("check", "acceptance check failed for " + sub, 4);
  return 0;
}

}  // namespace cdyson::cli

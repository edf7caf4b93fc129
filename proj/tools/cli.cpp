// Copyright 2026 The ecloo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "ecloo/data_io.hpp"
#include "ecloo/ec.hpp"
#include "ecloo/error.hpp"
#include "ecloo/hyper.hpp"
#include "ecloo/loocv.hpp"
#include "ecloo/prior.hpp"
#include "ecloo/report_io.hpp"

namespace ecloo::cli {

int default_workers() {
  const char* env = std::getenv("ECLOO_WORKERS");
  if (env == nullptr) return 1;
  int value = 0;
  const std::string_view text(env);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() ||
      value < 1) {
    return 1;
  }
  return value;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand that reads a table.
struct DataFlags {
  std::string input;
  std::string target = "y";
  bool center = false;
};

struct PriorFlags {
  std::string family;  // per-subcommand default filled in after parsing
  double rho = 0.1;
  std::optional<double> sigma_w2;
};

struct RunConfig {
  DataFlags data;
  PriorFlags prior;
  double beta = 1.0;
  std::vector<double> beta_grid;
  std::vector<double> rho_grid;
  std::vector<double> sigma_w2_grid;
  std::vector<double> k_targets;
  bool literal = false;
  std::optional<int> kfold;
  std::uint64_t seed = 0;
  int workers = 1;
  FitSettings settings;
  std::string out;
  SynthConfig synth;
  SynthConfig check;  // instance used by `validate`
  std::string out_test;
  std::string out_truth;
};

void add_data_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--input,-i", cfg.data.input,
                  "CSV file, one sample per row")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--target", cfg.data.target, "name of the response column")
      ->capture_default_str();
  app->add_flag("--center", cfg.data.center,
                "subtract column means from features and response");
}

void add_prior_flags(CLI::App* app, RunConfig& cfg, bool with_rho) {
  app->add_option("--prior", cfg.prior.family,
                  "bernoulli-gauss (bg) or bernoulli-uniform (bu)")
      ->capture_default_str();
  if (with_rho) {
    app->add_option("--rho", cfg.prior.rho, "slab weight in (0, 1]")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
  }
  app->add_option("--sigma-w2", cfg.prior.sigma_w2,
                  "slab variance (bernoulli-gauss only)")
      ->check(CLI::PositiveNumber);
}

void add_solver_flags(CLI::App* app, RunConfig& cfg) {
  app->add_option("--grad-tol", cfg.settings.grad_tol,
                  "relative gradient tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-outer", cfg.settings.max_outer,
                  "maximum Newton iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--workers,-j", cfg.workers,
                  "worker threads (default: $ECLOO_WORKERS or 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

PriorSpec make_prior(const PriorFlags& flags) {
  const PriorFamily family = parse_prior_family(flags.family);
  if (family == PriorFamily::BernoulliGauss) {
    if (!flags.sigma_w2) throw UsageError("--sigma-w2 is required for this prior");
    return PriorSpec::bernoulli_gauss(flags.rho, *flags.sigma_w2);
  }
  if (flags.sigma_w2) {
    throw UsageError("--sigma-w2 only applies to bernoulli-gauss");
  }
  return PriorSpec::bernoulli_uniform(flags.rho);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

std::vector<std::string> settings_lines(const FitSettings& s) {
  std::ostringstream os;
  os << "solver: grad_tol=" << format_double(s.grad_tol)
     << " step_tol=" << format_double(s.step_tol)
     << " max_outer=" << s.max_outer
     << " min_step=" << format_double(s.min_step)
     << " armijo=" << format_double(s.armijo)
     << " variance_floor=" << format_double(s.variance_floor)
     << " e_tol=" << format_double(s.e_tol) << " max_inner=" << s.max_inner;
  return {os.str()};
}

std::vector<std::string> header(const std::string& command,
                                const RunConfig& cfg) {
  std::vector<std::string> lines{"ecloo " + command};
  if (!cfg.data.input.empty()) {
    lines.push_back("input: " + cfg.data.input + " target=" + cfg.data.target +
                    " center=" + (cfg.data.center ? "1" : "0"));
  }
  for (auto& l : settings_lines(cfg.settings)) lines.push_back(std::move(l));
  return lines;
}

LoadedData load(const RunConfig& cfg) {
  return load_csv(cfg.data.input, cfg.data.target, cfg.data.center);
}

template <typename Writer>
void emit(const std::string& path, Writer&& writer) {
  write_file(path, std::forward<Writer>(writer));
}

// --- subcommands ------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const SyntheticData data = gen_synthetic(cfg.synth);
  std::ostringstream os;
  os << "synthetic: N=" << cfg.synth.N << " alpha=" << format_double(cfg.synth.alpha)
     << " rho0=" << format_double(cfg.synth.rho0)
     << " sigma_w0_sq=" << format_double(cfg.synth.sigma_w0_sq)
     << " sigma_n0_sq=" << format_double(cfg.synth.sigma_n0_sq)
     << " seed=" << cfg.synth.seed;
  emit(cfg.out, [&](std::ostream& f) {
    write_csv(f, data.train, {"ecloo synth (train)", os.str()});
  });
  out << "wrote " << cfg.out << " (" << data.train.samples() << " samples, "
      << data.train.features() << " features)\n";
  if (data.test) {
    emit(cfg.out_test, [&](std::ostream& f) {
      write_csv(f, *data.test, {"ecloo synth (held-out)", os.str()});
    });
    out << "wrote " << cfg.out_test << " (" << data.test->samples()
        << " samples)\n";
  }
  if (!cfg.out_truth.empty()) {
    emit(cfg.out_truth, [&](std::ostream& f) {
      f << "# ecloo synth (ground truth)\n# " << os.str() << "\ni,w0\n";
      for (Index i = 0; i < data.truth.w0.size(); ++i) {
        f << i << ',' << format_double(data.truth.w0[i]) << '\n';
      }
    });
    out << "wrote " << cfg.out_truth << " (" << data.truth.support.size()
        << " non-zero coefficients)\n";
  }
  return kExitOk;
}

std::vector<std::string> fit_header(const std::string& command,
                                    const RunConfig& cfg,
                                    const PriorSpec& prior) {
  auto lines = header(command, cfg);
  lines.push_back("model: prior=" + prior.describe() +
                  " beta=" + format_double(cfg.beta));
  return lines;
}

void print_fit_summary(std::ostream& out, const FitResult& r,
                       const Dataset& ds) {
  out << "converged: " << (r.state.converged ? "yes" : "no") << " after "
      << r.state.iterations << " iterations\n"
      << "E: " << format_double(r.state.E) << '\n'
      << "free energy: " << format_double(r.state.free_energy) << '\n'
      << "eps: " << format_double(error_summary(r.state.m, ds).eps) << '\n'
      << "sum of inclusion probabilities: "
      << format_double(r.inclusion_probs.sum()) << '\n';
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const PriorSpec prior = make_prior(cfg.prior);
  const LoadedData data = load(cfg);
  const FitResult r = fit(data.dataset, prior, cfg.beta, std::nullopt,
                          cfg.settings);
  emit(cfg.out, [&](std::ostream& f) {
    write_fit_json(f, r, fit_header("fit", cfg, prior));
  });
  print_fit_summary(out, r, data.dataset);
  out << "wrote " << cfg.out << '\n';
  return r.state.converged ? kExitOk : kExitNumerical;
}

int cmd_loocv(const RunConfig& cfg, std::ostream& out) {
  const PriorSpec prior = make_prior(cfg.prior);
  const LoadedData data = load(cfg);
  const FitResult r = fit(data.dataset, prior, cfg.beta, std::nullopt,
                          cfg.settings);
  if (!r.state.converged) {
    throw Error(Errc::NotConverged, "full fit did not converge");
  }
  LooOptions opts;
  opts.workers = cfg.workers;
  opts.fit_settings = cfg.settings;
  opts.seed = cfg.seed;
  const LooReport approx = approx_looe(r, data.dataset, cfg.beta, opts);
  std::optional<LooReport> literal;
  std::optional<LooReport> kfold;
  if (cfg.literal) literal = literal_loocv(data.dataset, prior, cfg.beta, opts, &r);
  if (cfg.kfold) {
    kfold = kfold_cv(data.dataset, prior, cfg.beta, *cfg.kfold, opts, &r);
  }
  auto lines = fit_header("loocv", cfg, prior);
  if (cfg.kfold) {
    lines.push_back("kfold: k=" + std::to_string(*cfg.kfold) +
                    " seed=" + std::to_string(cfg.seed));
  }
  emit(cfg.out, [&](std::ostream& f) {
    write_loo_csv(f, approx, literal ? &*literal : nullptr,
                  kfold ? &*kfold : nullptr, lines);
  });
  out << "eps_loo approx: " << format_double(approx.eps_loo) << '\n';
  if (literal) {
    out << "eps_loo literal: " << format_double(literal->eps_loo) << '\n'
        << "relative difference: "
        << format_double(std::abs(approx.eps_loo - literal->eps_loo) /
                         literal->eps_loo)
        << '\n';
  }
  if (kfold) {
    out << "eps_cv " << describe(*kfold) << ": " << format_double(kfold->eps_loo)
        << '\n';
  }
  if (!approx.flagged.empty()) {
    out << approx.flagged.size() << " samples had a clipped denominator\n";
  }
  out << "wrote " << cfg.out << '\n';
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const PriorFamily family = parse_prior_family(cfg.prior.family);
  if (cfg.beta_grid.empty() || cfg.rho_grid.empty()) {
    throw UsageError("--beta-grid and --rho-grid must not be empty");
  }
  SweepGrid grid;
  grid.beta_values = cfg.beta_grid;
  grid.rho_values = cfg.rho_grid;
  if (family == PriorFamily::BernoulliGauss) {
    if (cfg.sigma_w2_grid.empty()) {
      throw UsageError("--sigma-w2-grid is required for this prior");
    }
    grid.sigma_w2_values = cfg.sigma_w2_grid;
  } else if (!cfg.sigma_w2_grid.empty()) {
    throw UsageError("--sigma-w2-grid only applies to bernoulli-gauss");
  }
  const LoadedData data = load(cfg);
  SweepOptions opts;
  opts.workers = cfg.workers;
  opts.fit_settings = cfg.settings;
  const SweepResult result = sweep(data.dataset, family, grid, opts);
  auto lines = header("sweep", cfg);
  lines.push_back("grid: beta=" + join(grid.beta_values) +
                  "; rho=" + join(grid.rho_values) +
                  (family == PriorFamily::BernoulliGauss
                       ? "; sigma_w2=" + join(grid.sigma_w2_values)
                       : std::string()));
  emit(cfg.out, [&](std::ostream& f) { write_sweep_csv(f, result, lines); });
  const SweepPoint& b = result.points[*result.best];
  out << "argmin eps_loo: beta=" << format_double(b.beta)
      << " rho=" << format_double(b.rho);
  if (family == PriorFamily::BernoulliGauss) {
    out << " sigma_w2=" << format_double(b.sigma_w2);
  }
  out << " eps_loo=" << format_double(b.eps_loo) << '\n';
  const auto failed = std::count_if(result.points.begin(), result.points.end(),
                                    [](const auto& p) { return !p.converged; });
  if (failed > 0) out << failed << " grid points failed\n";
  out << "wrote " << cfg.out << '\n';
  return kExitOk;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out) {
  const PriorFamily family = parse_prior_family(cfg.prior.family);
  if (family == PriorFamily::BernoulliGauss && !cfg.prior.sigma_w2) {
    throw UsageError("--sigma-w2 is required for this prior");
  }
  if (family != PriorFamily::BernoulliGauss && cfg.prior.sigma_w2) {
    throw UsageError("--sigma-w2 only applies to bernoulli-gauss");
  }
  const LoadedData data = load(cfg);
  const auto n = static_cast<double>(data.dataset.features());
  for (double k : cfg.k_targets) {
    if (!(k > 0.0 && k < n)) {
      throw UsageError("--k-target values must lie strictly between 0 and " +
                       std::to_string(data.dataset.features()));
    }
  }
  CalibrationOptions cal;
  cal.fit_settings = cfg.settings;
  SweepOptions opts;
  opts.workers = cfg.workers;
  opts.fit_settings = cfg.settings;
  LooOptions loo;
  loo.workers = cfg.workers;
  loo.fit_settings = cfg.settings;

  auto lines = header("calibrate", cfg);
  lines.push_back("model: prior=" + std::string(to_string(family)) +
                  (cfg.prior.sigma_w2
                       ? " sigma_w2=" + format_double(*cfg.prior.sigma_w2)
                       : std::string()) +
                  " beta grid=" + join(cfg.beta_grid));
  lines.push_back("calibration: rel_tol=" + format_double(cal.rel_tol) +
                  " max_probes=" + std::to_string(cal.max_probes));

  std::vector<CalibrationRow> rows;
  for (double k : cfg.k_targets) {
    const KSelection sel = calibrate_and_select(
        data.dataset, k, family, cfg.prior.sigma_w2, cfg.beta_grid, cal, opts);
    CalibrationRow row;
    row.K = k;
    row.rho = sel.rho;
    row.achieved_K = sel.achieved_K;
    row.beta = sel.beta;
    row.eps_loo_approx = sel.report.eps_loo;
    row.eps = sel.eps;
    if (cfg.literal) {
      const LooReport lit = literal_loocv(data.dataset, sel.fit.prior, sel.beta,
                                          loo, &sel.fit);
      row.eps_loo_literal = lit.eps_loo;
    }
    for (const KSelectionRow& r : sel.table) {
      std::ostringstream os;
      os << "K=" << format_double(k) << " beta=" << format_double(r.beta)
         << " rho=" << format_double(r.rho)
         << " eps_loo=" << format_double(r.eps_loo)
         << " eps=" << format_double(r.eps);
      if (!r.failure.empty()) os << " failed: " << r.failure;
      lines.push_back(os.str());
    }
    rows.push_back(row);
  }
  emit(cfg.out, [&](std::ostream& f) { write_calibration_csv(f, rows, lines); });

  // Same layout as a K-by-row LOOE table: one column per K.
  auto line = [&](const std::string& label, auto value) {
    out << std::left << std::setw(18) << label;
    for (const CalibrationRow& r : rows) out << std::right << std::setw(12) << value(r);
    out << '\n';
  };
  auto fixed4 = [](double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
  };
  line("K", [&](const CalibrationRow& r) { return fixed4(r.K); });
  line("LOOE (approx)", [&](const CalibrationRow& r) { return fixed4(r.eps_loo_approx); });
  if (cfg.literal) {
    line("LOOE (literal)", [&](const CalibrationRow& r) {
      return fixed4(r.eps_loo_literal.value_or(std::nan("")));
    });
  }
  line("RSS per data", [&](const CalibrationRow& r) { return fixed4(r.eps); });
  line("rho", [&](const CalibrationRow& r) { return fixed4(r.rho); });
  line("beta", [&](const CalibrationRow& r) { return fixed4(r.beta); });
  out << "wrote " << cfg.out << '\n';
  return kExitOk;
}

// --- validate ---------------------------------------------------------------

struct Check {
  std::string name;
  bool pass;
  std::string detail;
};

double rel_inf(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const SynthConfig& sc = cfg.check;
  const SyntheticData data = gen_synthetic(sc);
  const Dataset& ds = data.train;
  const double beta = 1.0 / std::max(sc.sigma_n0_sq, 1e-12);
  const PriorSpec prior =
      PriorSpec::bernoulli_gauss(std::max(sc.rho0, 1e-3), sc.sigma_w0_sq);
  std::vector<Check> checks;

  const FitResult r = fit(ds, prior, beta, std::nullopt, cfg.settings);
  checks.push_back({"fit converges", r.state.converged,
                    std::to_string(r.state.iterations) + " iterations"});

  const FixedPointAudit audit = audit_fixed_point(r, ds);
  checks.push_back({"fixed-point residuals", audit.passed(),
                    "mean " + sci(audit.mean_residual) + ", field " +
                        sci(audit.field_residual / audit.field_scale) +
                        ", E " + sci(audit.e_residual) + ", secular " +
                        sci(audit.secular_residual)});
  checks.push_back({"free energy non-increasing", audit.energy_monotone,
                    std::to_string(r.energy_trace.size()) + " accepted steps"});

  {
    const double asym = (r.hessian - r.hessian.transpose()).cwiseAbs().maxCoeff();
    checks.push_back({"Hessian symmetric positive definite",
                      r.hessian_positive_definite && asym == 0.0,
                      "asymmetry " + sci(asym)});
  }

  {
    // Central differences of the re-extremized free energy at a point away
    // from the minimum, where the gradient is O(1).
    Eigen::VectorXd m0 = r.state.m;
    for (Index i = 0; i < m0.size(); ++i) m0[i] += 0.05 * std::sin(1.0 + i);
    const ECState st = evaluate_state(m0, ds, prior, beta);
    const Eigen::VectorXd g = gradient(m0, st.h, st.E, ds, beta);
    double worst = 0.0;
    const double step = 1e-5;
    const Index probes = std::min<Index>(ds.features(), 5);
    for (Index p = 0; p < probes; ++p) {
      const Index i = (p * ds.features()) / probes;
      Eigen::VectorXd mp = m0, mm = m0;
      mp[i] += step;
      mm[i] -= step;
      const double fd = (evaluate_state(mp, ds, prior, beta).free_energy -
                         evaluate_state(mm, ds, prior, beta).free_energy) /
                        (2.0 * step);
      worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
    checks.push_back({"gradient vs finite differences", worst <= 1e-5,
                      "max relative error " + sci(worst)});
  }

  {
    double worst = 0.0;
    const Index probes = std::min<Index>(ds.samples(), 5);
    for (Index mu = 0; mu < probes; ++mu) {
      const Eigen::VectorXd x = ds.X().col(mu);
      const Eigen::MatrixXd sm = downdated_inverse(r.hessian_inverse, x, beta);
      const Eigen::MatrixXd direct =
          (r.hessian - beta * x * x.transpose()).inverse();
      worst = std::max(worst, (sm - direct).norm() / direct.norm());
    }
    checks.push_back({"rank-one downdate vs direct inverse", worst <= 1e-8,
                      "relative error " + sci(worst)});
  }

  {
    LooOptions opts;
    opts.workers = cfg.workers;
    opts.fit_settings = cfg.settings;
    const LooReport approx = approx_looe(r, ds, beta, opts);
    const LooReport literal = literal_loocv(ds, prior, beta, opts, &r);
    const double rel = std::abs(approx.eps_loo - literal.eps_loo) / literal.eps_loo;
    checks.push_back({"approximate vs literal LOO error", rel <= 0.05,
                      "approx " + sci(approx.eps_loo) + ", literal " +
                          sci(literal.eps_loo) + ", relative " + sci(rel)});
  }

  {
    const double s2 = sc.sigma_w0_sq;
    const PriorSpec gauss = PriorSpec::bernoulli_gauss(1.0, s2);
    const FitResult g = fit(ds, gauss, beta, std::nullopt, cfg.settings);
    Eigen::MatrixXd A = beta * ds.gram();
    A.diagonal().array() += 1.0 / s2;
    const Eigen::VectorXd ridge = A.llt().solve(beta * ds.xy());
    const double err = rel_inf(g.state.m, ridge);
    checks.push_back({"Gaussian prior reproduces the ridge posterior mean",
                      g.state.converged && err <= 1e-8, "relative error " + sci(err)});
  }

  int failed = 0;
  for (const Check& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    if (!c.pass) ++failed;
  }
  out << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitNumerical;
}

void add_synth_flags(CLI::App* app, SynthConfig& s) {
  app->add_option("--n", s.N, "number of features")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--alpha", s.alpha, "samples per feature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--rho0", s.rho0, "true slab fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app->add_option("--sigma-w0-sq", s.sigma_w0_sq, "true slab variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--sigma-n0-sq", s.sigma_n0_sq, "noise variance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app->add_option("--seed", s.seed, "generator seed")->capture_default_str();
}

int dispatch(CLI::App& app, RunConfig& cfg, std::ostream& out) {
  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "synth") return cmd_synth(cfg, out);
  if (name == "fit") return cmd_fit(cfg, out);
  if (name == "loocv") return cmd_loocv(cfg, out);
  if (name == "sweep") return cmd_sweep(cfg, out);
  if (name == "calibrate") return cmd_calibrate(cfg, out);
  return cmd_validate(cfg, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Bayesian sparse linear regression with expectation-consistent "
               "inference and approximate leave-one-out error"};
  app.name("ecloo");
  app.require_subcommand(1);
  RunConfig cfg;
  cfg.workers = default_workers();

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic data set");
  add_synth_flags(synth, cfg.synth);
  cfg.synth.test_samples = -1;  // resolved after parsing
  synth->add_option("--test-samples", cfg.synth.test_samples,
                    "held-out samples (default: same as training)");
  synth->add_option("--out,-o", cfg.out, "training CSV (default train.csv)");
  cfg.out_test = "test.csv";
  synth->add_option("--out-test", cfg.out_test, "held-out CSV")
      ->capture_default_str();
  synth->add_option("--truth", cfg.out_truth, "also write the true coefficients");

  CLI::App* fitc = app.add_subcommand("fit", "fit one model and write a fit file");
  add_data_flags(fitc, cfg);
  add_prior_flags(fitc, cfg, true);
  fitc->add_option("--beta", cfg.beta, "noise precision")
      ->required()
      ->check(CLI::PositiveNumber);
  add_solver_flags(fitc, cfg);
  fitc->add_option("--out,-o", cfg.out, "fit file (default fit.json)");

  CLI::App* loo = app.add_subcommand("loocv", "leave-one-out error of one model");
  add_data_flags(loo, cfg);
  add_prior_flags(loo, cfg, true);
  loo->add_option("--beta", cfg.beta, "noise precision")
      ->required()
      ->check(CLI::PositiveNumber);
  loo->add_flag("--literal", cfg.literal, "also refit with each sample removed");
  loo->add_option("--kfold", cfg.kfold, "also run k-fold cross-validation")
      ->check(CLI::Range(2, 1 << 30));
  loo->add_option("--seed", cfg.seed, "k-fold permutation seed")
      ->capture_default_str();
  add_solver_flags(loo, cfg);
  loo->add_option("--out,-o", cfg.out, "LOO table (default loo.csv)");

  CLI::App* sw = app.add_subcommand("sweep", "evaluate a hyper-parameter grid");
  add_data_flags(sw, cfg);
  add_prior_flags(sw, cfg, false);
  sw->add_option("--beta-grid", cfg.beta_grid, "comma-separated beta values")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sw->add_option("--rho-grid", cfg.rho_grid, "comma-separated rho values")
      ->required()
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sw->add_option("--sigma-w2-grid", cfg.sigma_w2_grid,
                 "comma-separated slab variances (bernoulli-gauss)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  add_solver_flags(sw, cfg);
  sw->add_option("--out,-o", cfg.out, "sweep table (default sweep.csv)");

  CLI::App* cal = app.add_subcommand(
      "calibrate", "tune rho to a target sparsity K, then pick beta");
  add_data_flags(cal, cfg);
  cal->add_option("--prior", cfg.prior.family,
                  "bernoulli-uniform (default) or bernoulli-gauss");
  cal->add_option("--sigma-w2", cfg.prior.sigma_w2,
                  "slab variance (bernoulli-gauss only)")
      ->check(CLI::PositiveNumber);
  cal->add_option("--k-target,-k", cfg.k_targets,
                  "expected number of non-zero components (comma-separated)")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cal->add_option("--beta-grid", cfg.beta_grid, "comma-separated beta values")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  cal->add_flag("--literal", cfg.literal,
                "also report the literal LOO error at the selected model");
  add_solver_flags(cal, cfg);
  cal->add_option("--out,-o", cfg.out,
                  "calibration table (default calibrate.csv)");

  CLI::App* val = app.add_subcommand(
      "validate", "check solver invariants on a seeded synthetic instance");
  cfg.check.N = 100;
  add_synth_flags(val, cfg.check);
  add_solver_flags(val, cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (name == "synth" && cfg.synth.test_samples < 0) {
    cfg.synth.test_samples = cfg.synth.samples();
  }
  if (cfg.prior.family.empty()) {
    cfg.prior.family =
        name == "calibrate" ? "bernoulli-uniform" : "bernoulli-gauss";
  }
  if (cfg.out.empty()) {
    static const std::map<std::string, std::string> kDefaultOut{
        {"synth", "train.csv"},   {"fit", "fit.json"},
        {"loocv", "loo.csv"},     {"sweep", "sweep.csv"},
        {"calibrate", "calibrate.csv"}};
    if (auto it = kDefaultOut.find(name); it != kDefaultOut.end()) {
      cfg.out = it->second;
    }
  }

  try {
    return dispatch(app, cfg, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << e.what() << '\n';
    return e.code() == Errc::ConfigError ? kExitUsage : kExitNumerical;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace ecloo::cli

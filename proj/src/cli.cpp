#include "ergo/cli.hpp"

#include "ergo/bias.hpp"
#include "ergo/builtins.hpp"
#include "ergo/clt.hpp"
#include "ergo/criteria.hpp"
#include "ergo/empirical.hpp"
#include "ergo/engine.hpp"
#include "ergo/hormander.hpp"
#include "ergo/metric.hpp"
#include "ergo/oned.hpp"
#include "ergo/parallel.hpp"
#include "ergo/poisson1d.hpp"
#include "ergo/schedule.hpp"
#include "ergo/transport.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

namespace ergo::cli {

using nlohmann::json;

std::string format_csv_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void check_keys(const json& obj, const std::string& ctx, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(ctx + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(ctx + ": unknown key '" + it.key() + "'");
  }
}

double num(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx + ": expected a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& ctx) {
  if (!j.is_number_integer()) fail(ctx + ": expected an integer");
  return j.get<long>();
}

void set_default(json& obj, const std::string& key, const json& value) {
  if (!obj.contains(key)) obj[key] = value;
}

const std::map<std::string, std::set<std::string>>& model_param_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"ou", {"sigma"}},
      {"double_well", {"sigma", "d"}},
      {"polar", {"theta", "c"}},
      {"baxendale", {"a", "b", "sigma", "thetaX", "thetaY"}},
      {"kolmogorov_quartic", {"sigma"}},
      {"martingale_cauchy", {"sigma"}},
  };
  return keys;
}

BuiltinModel model_from_config(const json& doc) {
  const json& m = doc.at("model");
  std::string name = m.at("name").get<std::string>();
  std::map<std::string, double> params;
  for (auto it = m.begin(); it != m.end(); ++it) {
    if (it.key() == "name") continue;
    params[it.key()] = num(it.value(), "model." + it.key());
  }
  return make_builtin(name, params);
}

MatrixXd rho_from_config(const json& doc, int q) {
  const json& r = doc.at("rho");
  if (r.is_number()) return r.get<double>() * MatrixXd::Identity(q, q);
  if (!r.is_array()) fail("rho: expected a scalar or a q x q matrix");
  MatrixXd rho(q, q);
  if (static_cast<int>(r.size()) != q) fail("rho: matrix must be q x q with q = " + std::to_string(q));
  for (int i = 0; i < q; ++i) {
    const json& row = r[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != q) fail("rho: ragged matrix");
    for (int j = 0; j < q; ++j) rho(i, j) = num(row[static_cast<std::size_t>(j)], "rho");
  }
  return rho;
}

MetricS metric_from_config(const json& doc, int d) {
  const json& s = doc.at("criteria").at("S");
  if (s.is_number()) {
    double v = s.get<double>();
    if (!(v > 0.0)) fail("criteria.S: scalar must be positive");
    return MetricS(v * MatrixXd::Identity(d, d));
  }
  if (!s.is_array()) fail("criteria.S: expected a scalar or matrix");
  MatrixXd mat(d, d);
  if (static_cast<int>(s.size()) != d) fail("criteria.S: matrix must be d x d");
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) mat(i, j) = num(s[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], "criteria.S");
  }
  return MetricS(mat);
}

ThetaFunction theta_from_config(const json& doc) {
  const json& t = doc.at("criteria").at("theta");
  if (t.is_string()) {
    std::string name = t.get<std::string>();
    if (name == "one") return ThetaFunction::one();
    if (name == "zero") return ThetaFunction::zero();
    fail("criteria.theta: unknown selector '" + name + "' (use 'one', 'zero' or a number)");
  }
  return ThetaFunction::constant(num(t, "criteria.theta"));
}

VectorXd vector_from_json(const json& j, int d, const std::string& ctx) {
  if (j.is_number()) return VectorXd::Constant(d, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    fail(ctx + ": expected a number or an array of length " + std::to_string(d));
  }
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = num(j[static_cast<std::size_t>(i)], ctx);
  return v;
}

// ---- output helpers ----

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) fail("cannot open output file " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }
  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_csv_value(values[i]);
    }
    out_ << '\n';
  }
  void raw_row(const std::vector<std::string>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << values[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) fail("cannot open output file " + path.string());
  out << j.dump(2) << '\n';
}

// Equilibrated sample set from the decreasing-step scheme: first half burned
// in, the rest thinned to at most max_keep states.
std::vector<VectorXd> equilibrated_samples(const Model& model, const StepSchedule& sched, long n,
                                           const VectorXd& x0, std::uint64_t seed, int max_keep) {
  NoiseStream stream(model.q, seed, 0);
  CorrelationSpec corr = make_correlation_scalar(1.0, model.q);
  ScheduleAccumulator acc(sched);
  MacroNoise noise(model.q);
  VectorXd x = x0, b(model.d);
  MatrixXd sig(model.d, model.q);
  std::vector<VectorXd> samples;
  long burn = n / 2;
  long stride = std::max(1L, (n - burn) / max_keep);
  for (long k = 1; k <= n; ++k) {
    double gamma = acc.next();
    stream.next(corr, noise);
    model.drift(x, b);
    model.diffusion(x, sig);
    x += gamma * b;
    x.noalias() += std::sqrt(gamma) * (sig * noise.u);
    if (is_divergent(x)) throw divergence_error("equilibration run divergent", k);
    if (k > burn && (k - burn) % stride == 0) samples.push_back(x);
  }
  return samples;
}

// ---- subcommand implementations ----

int cmd_simulate(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  const json& sim = cfg.doc.at("sim");
  long n = integer(sim.at("n"), "sim.n");
  StepSchedule sched(num(cfg.doc.at("schedule").at("C"), "schedule.C"),
                     num(cfg.doc.at("schedule").at("mu"), "schedule.mu"));
  VectorXd x0 = vector_from_json(sim.at("x0"), bm.model.d, "sim.x0");

  WeightedEmpiricalMeasure measure(bm.model.d);
  if (sim.contains("histogram")) {
    const json& h = sim.at("histogram");
    measure.enable_histogram(static_cast<int>(integer(h.at("coord"), "histogram.coord")),
                             num(h.at("lo"), "histogram.lo"), num(h.at("hi"), "histogram.hi"),
                             static_cast<int>(integer(h.at("bins"), "histogram.bins")));
  }

  NoiseStream stream(bm.model.q, cfg.doc.at("seed").get<std::uint64_t>(), 0);
  CorrelationSpec corr = make_correlation_scalar(1.0, bm.model.q);
  ScheduleAccumulator acc(sched);
  MacroNoise noise(bm.model.q);
  VectorXd x = x0, b(bm.model.d);
  MatrixXd sig(bm.model.d, bm.model.q);
  for (long k = 1; k <= n; ++k) {
    double gamma = acc.next();
    measure.update(gamma, x);
    stream.next(corr, noise);
    bm.model.drift(x, b);
    bm.model.diffusion(x, sig);
    x += gamma * b;
    x.noalias() += std::sqrt(gamma) * (sig * noise.u);
    if (is_divergent(x)) throw divergence_error("simulate: divergent", k);
  }

  json report;
  report["n"] = n;
  report["H_n"] = measure.total_weight();
  for (int c = 0; c < bm.model.d; ++c) {
    for (int p = 1; p <= 4; ++p) {
      report["moments"]["coord" + std::to_string(c)]["order" + std::to_string(p)] =
          measure.moment(c, p);
    }
  }
  write_json(cfg.output_dir / "report.json", report);

  if (const Histogram* h = measure.histogram()) {
    CsvWriter csv(cfg.output_dir / "histogram.csv", {"bin_left", "bin_right", "weight"});
    double width = (h->hi - h->lo) / static_cast<double>(h->weights.size());
    for (std::size_t i = 0; i < h->weights.size(); ++i) {
      csv.row({h->lo + static_cast<double>(i) * width, h->lo + static_cast<double>(i + 1) * width,
               h->weights[i]});
    }
  }
  return 0;
}

int cmd_rr_clt(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  const json& clt = cfg.doc.at("clt");
  CltConfig cc;
  cc.model = bm;
  std::string f_name = clt.at("f").get<std::string>();
  const PoissonSolutionMeta* meta = nullptr;
  for (const auto& p : bm.poisson) {
    if (p.f_name == f_name) meta = &p;
  }
  if (meta != nullptr) {
    ScalarFn f = meta->f;
    cc.f = [f](const VectorXd& x) { return f(x[0]); };
    cc.nu_f = meta->nu_f;
  } else if (f_name == "x") {
    cc.f = [](const VectorXd& x) { return x[0]; };
    cc.nu_f = clt.contains("nu_f") ? num(clt.at("nu_f"), "clt.nu_f") : 0.0;
  } else {
    fail("clt.f: no Poisson metadata for '" + f_name + "' (provide clt.nu_f and f = 'x')");
  }
  cc.mode = clt.at("mode").get<std::string>() == "rr" ? SchemeMode::RichardsonRomberg
                                                      : SchemeMode::Crude;
  cc.C = num(cfg.doc.at("schedule").at("C"), "schedule.C");
  cc.mu = num(cfg.doc.at("schedule").at("mu"), "schedule.mu");
  for (const auto& v : clt.at("n_ladder")) cc.n_ladder.push_back(integer(v, "clt.n_ladder"));
  cc.replications = static_cast<int>(integer(clt.at("replications"), "clt.replications"));
  cc.rho = rho_from_config(cfg.doc, bm.model.q);
  cc.seed = cfg.doc.at("seed").get<std::uint64_t>();
  cc.threads = static_cast<int>(integer(cfg.doc.at("threads"), "threads"));
  cc.x0 = vector_from_json(clt.at("x0"), bm.model.d, "clt.x0");
  if (clt.contains("y0")) cc.y0 = vector_from_json(clt.at("y0"), bm.model.d, "clt.y0");

  CltReport report = run_clt_study(cc);
  if (report.divergent > 0 &&
      report.divergent * 100 > report.replications) {
    std::cerr << "warning: " << report.divergent << "/" << report.replications
              << " replications diverged (> 1%)\n";
  }

  json j;
  j["mode"] = clt.at("mode");
  j["replications"] = report.replications;
  j["divergent"] = report.divergent;
  j["seed"] = report.seed;
  j["bias_order"] = report.bias_order;
  j["rate_slope"] = report.rate_slope;
  j["assumed_unique_invariant"] = report.assumed_unique_invariant;
  for (const auto& r : report.rungs) {
    json rj;
    rj["n"] = r.n;
    rj["Gamma_n"] = r.Gamma;
    rj["Gamma_n_r"] = r.Gamma_r;
    rj["mean_norm_err"] = r.mean_norm_err;
    rj["var_norm_err"] = r.var_norm_err;
    rj["mean_bias_norm"] = r.mean_bias_norm;
    rj["median_bias_norm"] = r.median_bias_norm;
    rj["median_abs_err"] = r.median_abs_err;
    j["rungs"].push_back(rj);
  }
  write_json(cfg.output_dir / "report.json", j);

  CsvWriter csv(cfg.output_dir / "rungs.csv",
                {"n", "Gamma_n", "Gamma_n_r", "mean_err", "var_norm_err", "slope"});
  for (const auto& r : report.rungs) {
    csv.row({static_cast<double>(r.n), r.Gamma, r.Gamma_r, r.mean_est - cc.nu_f, r.var_norm_err,
             report.rate_slope});
  }
  return 0;
}

int cmd_confluence(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  const json& cr = cfg.doc.at("criteria");
  const Model& model = bm.model;
  MetricS s = metric_from_config(cfg.doc, model.d);
  double box_lo = num(cr.at("box_lo"), "criteria.box_lo");
  double box_hi = num(cr.at("box_hi"), "criteria.box_hi");
  Box box = Box::cube(model.d, box_lo, box_hi);
  int grid = static_cast<int>(integer(cr.at("grid"), "criteria.grid"));
  int budget = static_cast<int>(integer(cr.at("budget"), "criteria.budget"));
  std::uint64_t seed = cfg.doc.at("seed").get<std::uint64_t>();

  json report;
  report["evidence_note"] =
      "sampled/grid-limited evidence only; suprema and infima are not certified";
  report["assumed_invariant_set_weakly_compact"] = true;

  StepSchedule sched(num(cfg.doc.at("schedule").at("C"), "schedule.C"),
                     num(cfg.doc.at("schedule").at("mu"), "schedule.mu"));
  VectorXd x0 = vector_from_json(cr.at("x0"), model.d, "criteria.x0");
  std::vector<VectorXd> samples;
  try {
    samples = equilibrated_samples(model, sched,
                                   integer(cr.at("sim_n"), "criteria.sim_n"), x0, seed, 200);
  } catch (const divergence_error& e) {
    report["equilibration"] = std::string("diverged: ") + e.what();
  }
  if (!samples.empty()) {
    auto nc = necessary_condition(model, s, samples);
    report["necessary_condition"]["estimate"] = nc.estimate;
    report["necessary_condition"]["std_error"] = nc.std_error;
    report["necessary_condition"]["samples"] = nc.samples;
    report["necessary_condition"]["negative_within_2se"] = nc.negative_within_2se;
  }

  auto sup = smooth_criterion_sup(model, s, box, grid);
  report["smooth_criterion"]["sup_estimate"] = sup.sup_estimate;
  report["smooth_criterion"]["negative"] = sup.negative;
  report["smooth_criterion"]["grid_per_axis"] = sup.grid_per_axis;

  auto compact = compact_set_criterion(model, s, num(cr.at("radius"), "criteria.radius"),
                                       num(cr.at("delta"), "criteria.delta"), grid, seed);
  report["compact_set"]["pair_condition"] = compact.pair_condition;
  report["compact_set"]["pair_worst"] = compact.pair_worst;
  report["compact_set"]["differential_condition"] = compact.differential_condition;
  report["compact_set"]["diff_worst"] = compact.diff_worst;

  auto ell = directional_ellipticity(model, s, num(cr.at("eps0"), "criteria.eps0"), budget, box,
                                     seed);
  report["directional_ellipticity"]["eta0"] = ell.eta0;
  report["directional_ellipticity"]["alpha0"] = ell.alpha0;
  report["directional_ellipticity"]["grid_limited"] = ell.grid_limited;

  ThetaFunction theta = theta_from_config(cfg.doc);
  auto tc = check_theta_conditions(theta);
  report["theta"]["name"] = theta.name;
  report["theta"]["cond_i"] = tc.cond_i;
  report["theta"]["integrable_at_zero"] = tc.integrable_at_zero;
  report["theta"]["theta0_sup"] = tc.theta0_sup;
  if (tc.kappa_bound) report["theta"]["kappa_bound"] = *tc.kappa_bound;

  if (cr.contains("envelope")) {
    const json& env = cr.at("envelope");
    auto rep = verify_envelope(model, s, num(env.at("alpha"), "envelope.alpha"),
                               num(env.at("beta"), "envelope.beta"), num(env.at("a"), "envelope.a"),
                               budget, box, seed);
    report["envelope"]["max_violation"] = rep.max_violation;
    report["envelope"]["violated"] = rep.violated;
  }

  report["hormander_rank"] =
      hormander_rank(model, x0, static_cast<int>(integer(cr.at("bracket_len"), "criteria.bracket_len")));

  auto mono = drift_monotonicity_sup(model, s, box, budget, seed);
  report["drift_monotonicity"]["sup_estimate"] = mono.sup_estimate;
  report["drift_monotonicity"]["possibly_unbounded"] = mono.possibly_unbounded;

  write_json(cfg.output_dir / "report.json", report);
  return 0;
}

int cmd_nils_map(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  const Model& model = bm.model;
  MetricS s = metric_from_config(cfg.doc, model.d);
  const json& nm = cfg.doc.at("nils_map");
  double lo = num(nm.at("lo"), "nils_map.lo");
  double hi = num(nm.at("hi"), "nils_map.hi");
  int grid = static_cast<int>(integer(nm.at("grid"), "nils_map.grid"));
  VectorXd base = vector_from_json(nm.at("base"), model.d, "nils_map.base");
  int axis_i = static_cast<int>(integer(nm.at("axis_i"), "nils_map.axis_i"));
  int axis_j = static_cast<int>(integer(nm.at("axis_j"), "nils_map.axis_j"));
  if (axis_i < 0 || axis_i >= model.d || axis_j < 0 || axis_j >= model.d) {
    fail("nils_map: axis out of range");
  }

  std::vector<std::string> header;
  for (int k = 0; k < model.d; ++k) header.push_back("x" + std::to_string(k));
  for (int k = 0; k < model.d; ++k) header.push_back("y" + std::to_string(k));
  header.push_back("lambda_S");
  CsvWriter csv(cfg.output_dir / "nils_map.csv", header);
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      VectorXd x = base, y = base;
      x[axis_i] = lo + (hi - lo) * a / (grid - 1);
      y[axis_j] = lo + (hi - lo) * b / (grid - 1);
      double delta = diagonal_delta(s.norm(x), s.norm(y));
      if (s.norm(x - y) < delta) continue;  // Lambda_S undefined on the band
      std::vector<double> row;
      for (int k = 0; k < model.d; ++k) row.push_back(x[k]);
      for (int k = 0; k < model.d; ++k) row.push_back(y[k]);
      row.push_back(nils(model, s, x, y));
      csv.row(row);
    }
  }
  return 0;
}

int cmd_transport_check(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  const Model& model = bm.model;
  MetricS s = metric_from_config(cfg.doc, model.d);
  const json& tr = cfg.doc.at("transport");
  std::uint64_t seed = cfg.doc.at("seed").get<std::uint64_t>();
  StepSchedule sched(num(cfg.doc.at("schedule").at("C"), "schedule.C"),
                     num(cfg.doc.at("schedule").at("mu"), "schedule.mu"));
  VectorXd x0 = vector_from_json(tr.at("x0"), model.d, "transport.x0");
  auto samples = equilibrated_samples(model, sched, integer(tr.at("sim_n"), "transport.sim_n"), x0,
                                      seed, static_cast<int>(integer(tr.at("samples"), "transport.samples")));
  int atoms = static_cast<int>(integer(tr.at("atoms"), "transport.atoms"));
  auto rep = weak_confluence_transport_test(model, s, samples, atoms, seed);

  json j;
  j["primal"] = rep.primal;
  j["dual"] = rep.dual;
  j["duality_gap"] = std::abs(rep.primal - rep.dual);
  j["usc_diagonal_integral"] = rep.usc_diagonal_integral;
  j["negative"] = rep.negative;
  j["atoms"] = rep.atoms;
  j["note"] = "strengthened criterion; both the coupling optimum and the diagonal integral "
              "are reported without adjudicating their gap";
  write_json(cfg.output_dir / "report.json", j);

  // Re-solve on the same atoms to dump the optimal coupling and potentials.
  DiscreteMarginal marg = subsample_marginal(samples, atoms, s, seed);
  MatrixXd lam = usc_nils_matrix(model, s, marg);
  auto sol = max_coupling_value(lam, marg);
  auto dual = kantorovich_dual(lam, marg);
  {
    CsvWriter csv(cfg.output_dir / "coupling.csv", {"i", "j", "mass"});
    for (int i = 0; i < marg.size(); ++i) {
      for (int jj = 0; jj < marg.size(); ++jj) {
        if (sol.coupling.m(i, jj) > 1e-15) {
          csv.row({static_cast<double>(i), static_cast<double>(jj), sol.coupling.m(i, jj)});
        }
      }
    }
  }
  {
    CsvWriter csv(cfg.output_dir / "potentials.csv", {"atom", "phi"});
    for (int i = 0; i < marg.size(); ++i) csv.row({static_cast<double>(i), dual.phi[i]});
  }
  return 0;
}

int cmd_counterexample(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  if (bm.name != "polar") fail("counterexample: model must be 'polar'");
  const json& ce = cfg.doc.at("counterexample");
  double dphi0 = num(ce.at("dphi0"), "counterexample.dphi0");
  double dt = num(ce.at("dt"), "counterexample.dt");
  double horizon = num(ce.at("T"), "counterexample.T");
  double win_lo = num(ce.at("window_lo"), "counterexample.window_lo");
  double win_hi = num(ce.at("window_hi"), "counterexample.window_hi");
  std::uint64_t seed = cfg.doc.at("seed").get<std::uint64_t>();

  VectorXd x1(2), x2(2);
  x1 << 1.0, 0.0;
  x2 << std::cos(dphi0), std::sin(dphi0);
  CorrelationSpec shared = make_correlation_scalar(1.0, 2);
  NoiseStream stream(2, seed, 0);

  long total_steps = static_cast<long>(std::llround(horizon / dt));
  long stride = std::max(1L, total_steps / 20000);
  CsvWriter csv(cfg.output_dir / "trace.csv", {"t", "r1", "r2", "gap"});
  KahanSum gap_sum, r_sum;
  long window_count = 0;
  long step_idx = 0;
  simulate_duplicated_continuous(
      bm.model, x1, x2, shared, dt, horizon,
      [&](double t, const VectorXd& a, const VectorXd& b) {
        double gap = (a - b).norm();
        if (step_idx % stride == 0) csv.row({t, a.norm(), b.norm(), gap});
        ++step_idx;
        if (t >= win_lo && t <= win_hi) {
          gap_sum.add(gap);
          r_sum.add(a.norm());
          ++window_count;
        }
      },
      stream);

  double expected = std::abs(std::sqrt(2.0 - 2.0 * std::cos(dphi0)));
  json j;
  j["dphi0"] = dphi0;
  j["expected_gap"] = expected;
  j["window_gap_avg"] = gap_sum.value() / static_cast<double>(window_count);
  j["window_r_avg"] = r_sum.value() / static_cast<double>(window_count);
  write_json(cfg.output_dir / "report.json", j);
  return 0;
}

int cmd_poisson_1d(const RunConfig& cfg) {
  BuiltinModel bm = model_from_config(cfg.doc);
  if (bm.model.d != 1) fail("poisson-1d: model must be one-dimensional");
  const json& po = cfg.doc.at("poisson");
  std::string f_name = po.at("f").get<std::string>();
  ScalarFn f;
  if (f_name == "x") {
    f = ScalarFn::identity();
  } else if (f_name == "x^2") {
    f = ScalarFn::monomial(2);
  } else {
    fail("poisson.f: expected 'x' or 'x^2'");
  }
  double lo = num(po.at("lo"), "poisson.lo");
  double hi = num(po.at("hi"), "poisson.hi");
  Poisson1dOptions opts;
  opts.grid_points = static_cast<int>(integer(po.at("grid"), "poisson.grid"));
  PoissonData data = poisson_solve_1d(bm, f, lo, hi, opts);

  json j;
  j["f"] = f_name;
  j["nu_f"] = data.nu_f;
  j["residual_tol"] = opts.residual_tol;
  j["residual_ok"] = true;  // the solver throws otherwise
  if (bm.log_invariant_density) {
    j["m_g_1"] = first_order_bias_constant(bm, data, lo, hi);
  }
  write_json(cfg.output_dir / "report.json", j);

  CsvWriter csv(cfg.output_dir / "table.csv", {"x", "g", "g_prime", "phi1"});
  int rows = 201;
  for (int i = 0; i < rows; ++i) {
    double x = lo + (hi - lo) * i / (rows - 1);
    VectorXd v(1);
    v[0] = x;
    csv.row({x, data.g_deriv(x, 0), data.g_deriv(x, 1), phi1(bm.model, data, v)});
  }
  return 0;
}

// ---- config schema ----

void validate_and_fill(json& doc) {
  static const std::set<std::string> top_keys = {
      "subcommand", "model", "schedule", "rho", "seed", "threads",  "output_dir",
      "sim",        "clt",   "criteria", "transport", "counterexample", "poisson", "nils_map"};
  check_keys(doc, "config", top_keys);

  if (!doc.contains("subcommand")) fail("config: missing 'subcommand'");
  static const std::set<std::string> commands = {"simulate",  "confluence",     "nils-map",
                                                 "transport-check", "rr-clt",   "counterexample",
                                                 "poisson-1d"};
  std::string sub = doc.at("subcommand").get<std::string>();
  if (!commands.count(sub)) fail("config: unknown subcommand '" + sub + "'");

  if (!doc.contains("model")) fail("config: missing 'model'");
  const json& m = doc.at("model");
  if (!m.is_object() || !m.contains("name")) fail("model: expected {name, ...params}");
  std::string name = m.at("name").get<std::string>();
  auto it = model_param_keys().find(name);
  if (it == model_param_keys().end()) fail("model.name: unknown builtin '" + name + "'");
  std::set<std::string> allowed = it->second;
  allowed.insert("name");
  check_keys(m, "model", allowed);

  set_default(doc, "schedule", json::object());
  check_keys(doc["schedule"], "schedule", {"C", "mu"});
  set_default(doc["schedule"], "C", 1.0);
  set_default(doc["schedule"], "mu", 1.0 / 3.0);
  double mu = num(doc["schedule"]["mu"], "schedule.mu");
  if (!(mu > 0.0 && mu <= 1.0)) fail("schedule.mu: must lie in (0,1]");
  if (!(num(doc["schedule"]["C"], "schedule.C") > 0.0)) fail("schedule.C: must be positive");

  set_default(doc, "rho", 1.0);
  set_default(doc, "seed", 12345);
  if (!doc["seed"].is_number_integer()) fail("seed: expected an integer");
  set_default(doc, "threads", 0);
  set_default(doc, "output_dir", "ergo-out");

  // Build the model once here: validates its parameters eagerly so bad
  // configs fail before any simulation starts. The admissibility of rho
  // (I - rho^T rho PSD) is part of validation.
  BuiltinModel bm = model_from_config(doc);
  try {
    make_correlation(rho_from_config(doc, bm.model.q));
  } catch (const parameter_error& e) {
    fail(std::string("rho: ") + e.what());
  }

  if (sub == "simulate") {
    set_default(doc, "sim", json::object());
    check_keys(doc["sim"], "sim", {"n", "x0", "histogram"});
    set_default(doc["sim"], "n", 100000);
    set_default(doc["sim"], "x0", 0.0);
    if (doc["sim"].contains("histogram")) {
      check_keys(doc["sim"]["histogram"], "sim.histogram", {"coord", "lo", "hi", "bins"});
    }
  }
  if (sub == "rr-clt") {
    if (!doc.contains("clt")) fail("rr-clt: missing 'clt' section");
    check_keys(doc["clt"], "clt", {"f", "mode", "n_ladder", "replications", "x0", "y0", "nu_f"});
    set_default(doc["clt"], "f", "x");
    set_default(doc["clt"], "mode", "rr");
    std::string mode = doc["clt"]["mode"].get<std::string>();
    if (mode != "rr" && mode != "crude") fail("clt.mode: expected 'rr' or 'crude'");
    if (!doc["clt"].contains("n_ladder")) fail("clt: missing 'n_ladder'");
    set_default(doc["clt"], "replications", 100);
    set_default(doc["clt"], "x0", 0.0);
  }
  if (sub == "confluence" || sub == "nils-map" || sub == "transport-check") {
    set_default(doc, "criteria", json::object());
    check_keys(doc["criteria"], "criteria",
               {"S", "theta", "box_lo", "box_hi", "grid", "budget", "eps0", "radius", "delta",
                "envelope", "x0", "bracket_len", "sim_n"});
    set_default(doc["criteria"], "S", 1.0);
    set_default(doc["criteria"], "theta", "one");
    set_default(doc["criteria"], "box_lo", -2.0);
    set_default(doc["criteria"], "box_hi", 2.0);
    set_default(doc["criteria"], "grid", 9);
    set_default(doc["criteria"], "budget", 4000);
    set_default(doc["criteria"], "eps0", 0.5);
    set_default(doc["criteria"], "radius", 2.0);
    set_default(doc["criteria"], "delta", 0.2);
    set_default(doc["criteria"], "x0", 0.5);
    set_default(doc["criteria"], "bracket_len", 2);
    set_default(doc["criteria"], "sim_n", 20000);
    if (doc["criteria"].contains("envelope")) {
      check_keys(doc["criteria"]["envelope"], "criteria.envelope", {"alpha", "beta", "a"});
    }
  }
  if (sub == "nils-map") {
    set_default(doc, "nils_map", json::object());
    check_keys(doc["nils_map"], "nils_map", {"lo", "hi", "grid", "base", "axis_i", "axis_j"});
    set_default(doc["nils_map"], "lo", -2.0);
    set_default(doc["nils_map"], "hi", 2.0);
    set_default(doc["nils_map"], "grid", 41);
    set_default(doc["nils_map"], "base", 0.0);
    set_default(doc["nils_map"], "axis_i", 0);
    set_default(doc["nils_map"], "axis_j", bm.model.d > 1 ? 1 : 0);
  }
  if (sub == "transport-check") {
    set_default(doc, "transport", json::object());
    check_keys(doc["transport"], "transport", {"atoms", "samples", "sim_n", "x0"});
    set_default(doc["transport"], "atoms", 100);
    set_default(doc["transport"], "samples", 400);
    set_default(doc["transport"], "sim_n", 20000);
    set_default(doc["transport"], "x0", 1.0);
    if (integer(doc["transport"]["atoms"], "transport.atoms") > 500) {
      fail("transport.atoms: capped at 500");
    }
  }
  if (sub == "counterexample") {
    if (name != "polar") fail("counterexample: model must be 'polar'");
    set_default(doc, "counterexample", json::object());
    check_keys(doc["counterexample"], "counterexample",
               {"dphi0", "dt", "T", "window_lo", "window_hi"});
    set_default(doc["counterexample"], "dphi0", M_PI / 2.0);
    set_default(doc["counterexample"], "dt", 1e-3);
    set_default(doc["counterexample"], "T", 100.0);
    set_default(doc["counterexample"], "window_lo", 50.0);
    set_default(doc["counterexample"], "window_hi", 100.0);
  }
  if (sub == "poisson-1d") {
    set_default(doc, "poisson", json::object());
    check_keys(doc["poisson"], "poisson", {"f", "lo", "hi", "grid"});
    set_default(doc["poisson"], "f", "x^2");
    set_default(doc["poisson"], "lo", -8.0);
    set_default(doc["poisson"], "hi", 8.0);
    set_default(doc["poisson"], "grid", 2001);
  }
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc_in) {
  json doc = doc_in;
  validate_and_fill(doc);
  RunConfig cfg;
  cfg.doc = std::move(doc);
  cfg.subcommand = cfg.doc.at("subcommand").get<std::string>();
  cfg.output_dir = cfg.doc.at("output_dir").get<std::string>();
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

int dispatch(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);

  // Reproducibility manifest: fully-resolved config plus fixed conventions.
  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = cfg.doc;
  manifest["correlation_root"] = "symmetric";  // T_q(rho) choice
  write_json(cfg.output_dir / "manifest.json", manifest);

  try {
    if (cfg.subcommand == "simulate") return cmd_simulate(cfg);
    if (cfg.subcommand == "rr-clt") return cmd_rr_clt(cfg);
    if (cfg.subcommand == "confluence") return cmd_confluence(cfg);
    if (cfg.subcommand == "nils-map") return cmd_nils_map(cfg);
    if (cfg.subcommand == "transport-check") return cmd_transport_check(cfg);
    if (cfg.subcommand == "counterexample") return cmd_counterexample(cfg);
    if (cfg.subcommand == "poisson-1d") return cmd_poisson_1d(cfg);
    throw std::invalid_argument("unknown subcommand " + cfg.subcommand);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["subcommand"] = cfg.subcommand;
    write_json(cfg.output_dir / "error.json", err);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"ergodic SDE simulation and confluence diagnostics"};
  app.set_version_flag("--version", std::string("ergo ") + kVersion);
  std::string config_path;
  app.add_option("config", config_path, "JSON run configuration")->required();
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "override config seed");
  int threads = -1;
  app.add_option("--threads", threads, "override worker count");
  std::string output_dir;
  app.add_option("--output-dir", output_dir, "override output directory");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "override a config key: dotted.path=json-value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot read config file " << config_path << "\n";
      return 2;
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json doc = json::parse(text);

    // Flag overrides win over file keys.
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects path=value");
      std::string path = kv.substr(0, eq);
      json value;
      try {
        value = json::parse(kv.substr(eq + 1));
      } catch (const json::parse_error&) {
        value = kv.substr(eq + 1);  // plain string
      }
      json* node = &doc;
      std::size_t pos = 0;
      while (true) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (dot == std::string::npos) {
          (*node)[key] = value;
          break;
        }
        node = &(*node)[key];
        pos = dot + 1;
      }
    }
    if (*seed_opt) doc["seed"] = seed;
    if (threads >= 0) doc["threads"] = threads;
    if (!output_dir.empty()) doc["output_dir"] = output_dir;
    if (const char* env = std::getenv("ERGO_OUTPUT_DIR")) doc["output_dir"] = env;

    RunConfig cfg = parse_config(doc);
    return dispatch(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ergo::cli

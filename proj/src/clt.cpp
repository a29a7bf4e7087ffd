#include "ergo/clt.hpp"

#include "ergo/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace ergo {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

double log_log_slope(const std::vector<long>& n, const std::vector<double>& y) {
  if (n.size() != y.size() || n.size() < 2) throw parameter_error("log_log_slope: need >= 2 rungs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  auto m = static_cast<double>(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    double lx = std::log(static_cast<double>(n[i]));
    double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

CltReport run_clt_study(const CltConfig& config) {
  if (config.n_ladder.empty()) throw parameter_error("run_clt_study: empty n ladder");
  if (!std::is_sorted(config.n_ladder.begin(), config.n_ladder.end())) {
    throw parameter_error("run_clt_study: n ladder must be increasing");
  }
  if (config.replications < 1) throw parameter_error("run_clt_study: replications must be >= 1");
  const Model& model = config.model.model;
  if (config.x0.size() != model.d) throw parameter_error("run_clt_study: x0 dimension mismatch");
  const bool rr = config.mode == SchemeMode::RichardsonRomberg;
  const int bias_r = rr ? 3 : 2;
  StepSchedule sched(config.C, config.mu);
  CorrelationSpec corr = rr ? make_correlation(config.rho)
                            : make_correlation_scalar(1.0, model.q);

  const auto n_rungs = config.n_ladder.size();
  const long n_max = config.n_ladder.back();
  const auto reps = static_cast<std::size_t>(config.replications);

  // est[rep][rung]; NaN marks divergent replications.
  std::vector<std::vector<double>> est(reps, std::vector<double>(n_rungs, std::numeric_limits<double>::quiet_NaN()));
  std::vector<char> diverged(reps, 0);
  std::vector<double> gamma_sum(n_rungs, 0.0), gamma_r_sum(n_rungs, 0.0);

  int threads = config.threads > 0 ? config.threads : default_threads();
  parallel_for(static_cast<long>(reps), threads, [&](long rep) {
    NoiseStream stream(model.q, config.seed, static_cast<std::uint64_t>(rep), config.dist);
    ScheduleAccumulator acc(sched);
    KahanSum sum;  // running sum of gamma_k * (estimator increment at step k)
    std::size_t rung = 0;
    try {
      if (!rr) {
        VectorXd x = config.x0;
        MacroNoise noise(model.q);
        VectorXd b(model.d);
        MatrixXd sig(model.d, model.q);
        for (long k = 1; k <= n_max; ++k) {
          double gamma = acc.next();
          sum.add(gamma * config.f(x));
          stream.next(corr, noise);
          model.drift(x, b);
          model.diffusion(x, sig);
          x += gamma * b;
          x.noalias() += std::sqrt(gamma) * (sig * noise.u);
          if (is_divergent(x)) throw divergence_error("crude scheme divergent", k);
          if (k == config.n_ladder[rung]) {
            est[static_cast<std::size_t>(rep)][rung] = sum.value() / acc.Gamma();
            ++rung;
          }
        }
      } else {
        PairStepper stepper(model, sched, corr);
        PairState state(config.x0, config.y0.value_or(config.x0));
        for (long k = 1; k <= n_max; ++k) {
          double fx = config.f(state.x);
          double fy = config.f(state.y);
          stepper.advance(state, stream);
          double gamma = stepper.schedule().gamma_n();
          double fmid = config.f(state.y_mid);
          sum.add(gamma * (fy + fmid - fx));
          if (k == config.n_ladder[rung]) {
            est[static_cast<std::size_t>(rep)][rung] = sum.value() / stepper.schedule().Gamma();
            ++rung;
          }
        }
      }
    } catch (const divergence_error&) {
      diverged[static_cast<std::size_t>(rep)] = 1;
    }
  });

  CltReport report;
  report.seed = config.seed;
  report.replications = config.replications;
  report.bias_order = bias_r;
  for (char d : diverged) report.divergent += d;

  // Rung normalizations Gamma_n, Gamma_n^{(r)} are replication-independent.
  {
    ScheduleAccumulator acc(sched);
    std::size_t rung = 0;
    for (long k = 1; k <= n_max && rung < n_rungs; ++k) {
      acc.next();
      if (k == config.n_ladder[rung]) {
        gamma_sum[rung] = acc.Gamma();
        gamma_r_sum[rung] = acc.Gamma_r(bias_r);
        ++rung;
      }
    }
  }

  std::vector<long> ns;
  std::vector<double> medians;
  for (std::size_t r = 0; r < n_rungs; ++r) {
    CltRung rung;
    rung.n = config.n_ladder[r];
    rung.Gamma = gamma_sum[r];
    rung.Gamma_r = gamma_r_sum[r];
    std::vector<double> errs, abs_errs, bias_norm, values;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      if (diverged[rep]) continue;
      double e = est[rep][r] - config.nu_f;
      errs.push_back(std::sqrt(rung.Gamma) * e);
      abs_errs.push_back(std::abs(e));
      bias_norm.push_back(rung.Gamma / rung.Gamma_r * e);
      values.push_back(est[rep][r]);
    }
    if (errs.empty()) throw std::runtime_error("run_clt_study: every replication diverged");
    double n_good = static_cast<double>(errs.size());
    double mean = 0.0;
    for (double e : errs) mean += e;
    mean /= n_good;
    double var = 0.0;
    for (double e : errs) var += (e - mean) * (e - mean);
    var = errs.size() > 1 ? var / (n_good - 1.0) : 0.0;
    rung.mean_norm_err = mean;
    rung.var_norm_err = var;
    double bias_mean = 0.0;
    for (double v : bias_norm) bias_mean += v;
    rung.mean_bias_norm = bias_mean / n_good;
    rung.median_bias_norm = median(bias_norm);
    rung.median_abs_err = median(abs_errs);
    double est_mean = 0.0;
    for (double v : values) est_mean += v;
    rung.mean_est = est_mean / n_good;
    report.rungs.push_back(rung);
    ns.push_back(rung.n);
    medians.push_back(rung.median_abs_err);
    if (r + 1 == n_rungs) report.terminal_estimates = values;
  }
  report.rate_slope = ns.size() >= 2 ? log_log_slope(ns, medians) : 0.0;
  return report;
}

}  // namespace ergo

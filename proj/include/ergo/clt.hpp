#pragma once

#include "ergo/builtins.hpp"
#include "ergo/engine.hpp"

#include <optional>
#include <vector>

namespace ergo {

enum class SchemeMode { Crude, RichardsonRomberg };

struct CltConfig {
  BuiltinModel model;
  std::function<double(const VectorXd&)> f;
  double nu_f = 0.0;  // exact nu(f) the errors are measured against
  SchemeMode mode = SchemeMode::Crude;
  double C = 1.0;
  double mu = 1.0 / 3.0;
  std::vector<long> n_ladder;
  int replications = 100;
  MatrixXd rho;  // q x q; ignored for crude runs
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency
  VectorXd x0;
  std::optional<VectorXd> y0;  // half-step scheme start; defaults to x0
  NoiseDist dist = NoiseDist::Gaussian;
};

struct CltRung {
  long n = 0;
  double Gamma = 0.0;
  double Gamma_r = 0.0;           // Gamma^{(2)} crude / Gamma^{(3)} rr
  double mean_norm_err = 0.0;     // mean of sqrt(Gamma) (est - nu f)
  double var_norm_err = 0.0;      // variance of the same
  double mean_bias_norm = 0.0;    // mean of (Gamma/Gamma^{(r)}) (est - nu f)
  double median_bias_norm = 0.0;  // seed-median of the same
  double median_abs_err = 0.0;    // seed-median |est - nu f| (rate regression)
  double mean_est = 0.0;
};

struct CltReport {
  std::vector<CltRung> rungs;
  double rate_slope = 0.0;  // log-log slope of median_abs_err vs n
  int replications = 0;
  int divergent = 0;
  std::uint64_t seed = 0;
  int bias_order = 2;  // the r in Gamma^{(r)}
  // Intermediate-rho uniqueness of mu^(rho) is assumed, not verified.
  bool assumed_unique_invariant = true;
  std::vector<double> terminal_estimates;  // per replication at the last rung
};

CltReport run_clt_study(const CltConfig& config);

// Least-squares slope of log(y) against log(n); helper shared with tests.
double log_log_slope(const std::vector<long>& n, const std::vector<double>& y);

}  // namespace ergo

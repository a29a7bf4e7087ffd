#include "ergo/builtins.hpp"

#include <cmath>

namespace ergo {

const PoissonSolutionMeta& BuiltinModel::poisson_for(const std::string& f_name) const {
  for (const auto& p : poisson) {
    if (p.f_name == f_name) return p;
  }
  throw parameter_error(name + ": no Poisson metadata for f = " + f_name);
}

BuiltinModel make_ou(double sigma) {
  if (!(sigma > 0.0)) throw parameter_error("make_ou: sigma must be > 0");
  BuiltinModel bm;
  bm.name = "ou";
  Model& m = bm.model;
  m.d = m.q = 1;
  m.drift = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) { out[0] = -x[0]; };
  m.diffusion = [sigma](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = sigma;
  };
  m.analytic_jacobian = [](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = -1.0;
  };
  m.analytic_sigma_gradient = [](Eigen::Ref<const VectorXd>, std::vector<MatrixXd>& out) {
    out[0].setZero();
  };
  bm.log_invariant_density = [sigma](const VectorXd& x) { return -x[0] * x[0] / (sigma * sigma); };
  bm.metadata_S = MatrixXd::Identity(1, 1);
  bm.closed_form_nils = [](const VectorXd&, const VectorXd&) { return -1.0; };
  bm.has_scalar_coeffs = true;
  bm.b1 = ScalarFn{[](double x) { return -x; },
                   [](double, int k) { return k == 1 ? -1.0 : 0.0; }};
  bm.sigma1 = ScalarFn::constant(sigma);
  bm.poisson.push_back({"x", ScalarFn::identity(), 0.0, ScalarFn::monomial(1, -1.0)});
  bm.poisson.push_back(
      {"x^2", ScalarFn::monomial(2), 0.5 * sigma * sigma, ScalarFn::monomial(2, -0.5)});
  return bm;
}

BuiltinModel make_double_well(double sigma, int d) {
  if (!(sigma > 0.0)) throw parameter_error("make_double_well: sigma must be > 0");
  if (d < 1) throw parameter_error("make_double_well: d must be >= 1");
  BuiltinModel bm;
  bm.name = "double_well";
  Model& m = bm.model;
  m.d = m.q = d;
  // b = -grad U with U = (|x|^2-1)^2 / 4.
  m.drift = [](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) {
    out = -(x.squaredNorm() - 1.0) * x;
  };
  m.diffusion = [sigma](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out.setZero();
    out.diagonal().setConstant(sigma);
  };
  m.analytic_jacobian = [d](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    out = -(x.squaredNorm() - 1.0) * MatrixXd::Identity(d, d) - 2.0 * x * x.transpose();
  };
  m.analytic_sigma_gradient = [d](Eigen::Ref<const VectorXd>, std::vector<MatrixXd>& out) {
    for (int k = 0; k < d; ++k) out[k].setZero();
  };
  bm.log_invariant_density = [sigma](const VectorXd& x) {
    double u = 0.25 * std::pow(x.squaredNorm() - 1.0, 2);
    return -2.0 * u / (sigma * sigma);
  };
  bm.metadata_S = MatrixXd::Identity(d, d);
  bm.closed_form_nils = [](const VectorXd& x, const VectorXd& y) {
    VectorXd diff = x - y;
    double proj = (x + y).dot(diff);
    return 1.0 - 0.5 * (x.squaredNorm() + y.squaredNorm() + proj * proj / diff.squaredNorm());
  };
  if (d == 1) {
    bm.has_scalar_coeffs = true;
    bm.b1 = ScalarFn{[](double x) { return -x * (x * x - 1.0); },
                     [](double x, int k) {
                       switch (k) {
                         case 1: return 1.0 - 3.0 * x * x;
                         case 2: return -6.0 * x;
                         case 3: return -6.0;
                         default: return 0.0;
                       }
                     }};
    bm.sigma1 = ScalarFn::constant(sigma);
  }
  return bm;
}

BuiltinModel make_polar_counterexample(double theta, double c) {
  if (!(theta > 0.0 && theta < std::sqrt(2.0))) {
    throw parameter_error("make_polar_counterexample: theta must lie in (0, sqrt(2))");
  }
  if (!(c > 0.0)) throw parameter_error("make_polar_counterexample: c must be > 0");
  BuiltinModel bm;
  bm.name = "polar";
  Model& m = bm.model;
  m.d = m.q = 2;
  // Ito transcription of dr = min(r,1)(1-r)(dt + theta dW1), dphi = c dW2:
  //   b = m(r) x/r - (c^2/2) x,   sigma = [ theta m(r) x/r | c(-x2, x1) ],
  // with m(r) = min(r,1)(1-r) and b(0) = 0 by continuity.
  const double half_c2 = 0.5 * c * c;
  m.drift = [half_c2](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) {
    double r = x.norm();
    if (r == 0.0) {
      out.setZero();
      return;
    }
    double h = (r <= 1.0) ? (1.0 - r) : (1.0 - r) / r;  // m(r)/r
    out = (h - half_c2) * x;
  };
  m.diffusion = [theta, c](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    double r = x.norm();
    double h = (r == 0.0) ? 1.0 : ((r <= 1.0) ? (1.0 - r) : (1.0 - r) / r);
    out(0, 0) = theta * h * x[0];
    out(1, 0) = theta * h * x[1];
    out(0, 1) = -c * x[1];
    out(1, 1) = c * x[0];
  };
  m.analytic_jacobian = [half_c2](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    double r = x.norm();
    if (r == 0.0) {
      out = (1.0 - half_c2) * MatrixXd::Identity(2, 2);
      return;
    }
    double h = (r <= 1.0) ? (1.0 - r) : (1.0 - r) / r;
    double hp = (r <= 1.0) ? -1.0 : -1.0 / (r * r);
    out = (h - half_c2) * MatrixXd::Identity(2, 2) + (hp / r) * x * x.transpose();
  };
  m.analytic_sigma_gradient = [theta, c](Eigen::Ref<const VectorXd> x, std::vector<MatrixXd>& out) {
    double r = x.norm();
    double h, hp;
    if (r == 0.0) {
      h = 1.0;
      hp = 0.0;
    } else {
      h = (r <= 1.0) ? (1.0 - r) : (1.0 - r) / r;
      hp = (r <= 1.0) ? -1.0 : -1.0 / (r * r);
    }
    for (int k = 0; k < 2; ++k) {
      out[k].setZero();
      VectorXd col = VectorXd::Zero(2);
      col[k] = h;
      if (r > 0.0) col += (hp / r) * x[k] * x;
      out[k].col(0) = theta * col;
    }
    out[0](1, 1) = c;   // d/dx1 of c*x1 in row 2
    out[1](0, 1) = -c;  // d/dx2 of -c*x2 in row 1
  };
  // Invariant measure is the uniform law on the unit circle (singular); no
  // density metadata.
  bm.metadata_S = MatrixXd::Identity(2, 2);
  return bm;
}

BuiltinModel make_baxendale(double a, double b, double sigma, double theta_x, double theta_y) {
  if (!(a * b < 0.0)) throw parameter_error("make_baxendale: requires ab < 0");
  if (!(a + b < 0.0)) throw parameter_error("make_baxendale: requires a + b < 0");
  double bound = std::sqrt(2.0 * a * b / (a + b));
  if (!(sigma > bound)) {
    throw parameter_error("make_baxendale: requires sigma > sqrt(2ab/(a+b)) = " +
                          std::to_string(bound));
  }
  BuiltinModel bm;
  bm.name = "baxendale";
  Model& m = bm.model;
  m.d = 2;
  m.q = 1;
  const double s2 = sigma * sigma;
  const double ax = a - 0.5 * s2;
  const double by = b - 0.5 * s2;
  m.drift = [ax, by](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) {
    out[0] = ax * x[0];
    out[1] = by * x[1];
  };
  m.diffusion = [sigma, theta_x, theta_y](Eigen::Ref<const VectorXd> x,
                                          Eigen::Ref<MatrixXd> out) {
    out(0, 0) = theta_x - sigma * x[1];
    out(1, 0) = sigma * x[0] + theta_y;
  };
  m.analytic_jacobian = [ax, by](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out.setZero();
    out(0, 0) = ax;
    out(1, 1) = by;
  };
  m.analytic_sigma_gradient = [sigma](Eigen::Ref<const VectorXd>, std::vector<MatrixXd>& out) {
    out[0].setZero();
    out[1].setZero();
    out[0](1, 0) = sigma;   // d/dx of sigma*x + theta_y
    out[1](0, 0) = -sigma;  // d/dy of theta_x - sigma*y
  };
  const double root = std::sqrt((b - a) * (b - a) + s2 * s2);
  const double lambda = (b - a + root) / s2;
  const double alpha = s2 - (a + b) - root;
  bm.bax_lambda = lambda;
  bm.bax_alpha = alpha;
  bm.metadata_S = MatrixXd::Identity(2, 2);
  bm.metadata_S(1, 1) = lambda;
  bm.closed_form_nils = [alpha, lambda, s2](const VectorXd& xi, const VectorXd& eta) {
    double dx = xi[0] - eta[0];
    double dy = xi[1] - eta[1];
    double n2 = dx * dx + lambda * dy * dy;
    return -0.5 * alpha - (lambda - 1.0) * (lambda - 1.0) * s2 * dx * dx * dy * dy / (n2 * n2);
  };
  return bm;
}

BuiltinModel make_kolmogorov_1d(const ScalarFn& uprime, double sigma,
                                std::function<double(double)> potential) {
  if (!(sigma > 0.0)) throw parameter_error("make_kolmogorov_1d: sigma must be > 0");
  BuiltinModel bm;
  bm.name = "kolmogorov_1d";
  Model& m = bm.model;
  m.d = m.q = 1;
  ScalarFn up = uprime;
  m.drift = [up](Eigen::Ref<const VectorXd> x, Eigen::Ref<VectorXd> out) { out[0] = -up(x[0]); };
  m.diffusion = [sigma](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = sigma;
  };
  m.analytic_jacobian = [up](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = -up.d(x[0], 1);
  };
  m.analytic_sigma_gradient = [](Eigen::Ref<const VectorXd>, std::vector<MatrixXd>& out) {
    out[0].setZero();
  };
  if (potential) {
    bm.log_invariant_density = [potential, sigma](const VectorXd& x) {
      return -2.0 * potential(x[0]) / (sigma * sigma);
    };
  }
  bm.has_scalar_coeffs = true;
  bm.b1 = ScalarFn{[up](double x) { return -up(x); },
                   [up](double x, int k) { return -up.d(x, k); }};
  bm.sigma1 = ScalarFn::constant(sigma);
  bm.metadata_S = MatrixXd::Identity(1, 1);
  return bm;
}

BuiltinModel make_martingale_1d(const ScalarFn& sigma_fn) {
  BuiltinModel bm;
  bm.name = "martingale_1d";
  Model& m = bm.model;
  m.d = m.q = 1;
  ScalarFn s = sigma_fn;
  m.drift = [](Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd> out) { out[0] = 0.0; };
  m.diffusion = [s](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = s(x[0]);
  };
  m.analytic_jacobian = [](Eigen::Ref<const VectorXd>, Eigen::Ref<MatrixXd> out) {
    out(0, 0) = 0.0;
  };
  bm.log_invariant_density = [s](const VectorXd& x) { return -2.0 * std::log(std::abs(s(x[0]))); };
  bm.has_scalar_coeffs = true;
  bm.b1 = ScalarFn::constant(0.0);
  bm.sigma1 = s;
  bm.metadata_S = MatrixXd::Identity(1, 1);
  return bm;
}

Model make_rank_one_noise(int d,
                          std::function<void(Eigen::Ref<const VectorXd>, Eigen::Ref<VectorXd>)> b,
                          std::function<VectorXd(const VectorXd&)> lambda,
                          const MatrixXd& sigma0) {
  if (sigma0.rows() != d || sigma0.cols() != d) {
    throw parameter_error("make_rank_one_noise: sigma0 must be d x d");
  }
  Model m;
  m.d = m.q = d;
  m.drift = std::move(b);
  MatrixXd s0 = sigma0;
  m.diffusion = [lambda, s0](Eigen::Ref<const VectorXd> x, Eigen::Ref<MatrixXd> out) {
    VectorXd l = lambda(x);
    out = x * l.transpose() + s0;
  };
  return m;
}

namespace {

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 std::optional<double> fallback = std::nullopt) {
  auto it = params.find(key);
  if (it != params.end()) return it->second;
  if (fallback) return *fallback;
  throw parameter_error("missing model parameter '" + key + "'");
}

}  // namespace

BuiltinModel make_builtin(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "ou") return make_ou(get_param(params, "sigma", 1.0));
  if (name == "double_well") {
    return make_double_well(get_param(params, "sigma", 1.0),
                            static_cast<int>(get_param(params, "d", 2.0)));
  }
  if (name == "polar") {
    return make_polar_counterexample(get_param(params, "theta", 1.0), get_param(params, "c", 1.0));
  }
  if (name == "baxendale") {
    return make_baxendale(get_param(params, "a"), get_param(params, "b"),
                          get_param(params, "sigma"), get_param(params, "thetaX", 0.0),
                          get_param(params, "thetaY", 0.0));
  }
  if (name == "kolmogorov_quartic") {
    double sigma = get_param(params, "sigma", 1.0);
    return make_kolmogorov_1d(ScalarFn::monomial(3), sigma,
                              [](double x) { return 0.25 * x * x * x * x; });
  }
  if (name == "martingale_cauchy") {
    double s0 = get_param(params, "sigma", 1.0);
    ScalarFn s{[s0](double x) { return s0 * std::sqrt(1.0 + x * x); }, nullptr};
    return make_martingale_1d(s);
  }
  throw parameter_error("unknown builtin model '" + name + "'");
}

std::vector<std::string> builtin_names() {
  return {"ou", "double_well", "polar", "baxendale", "kolmogorov_quartic", "martingale_cauchy"};
}

}  // namespace ergo

#include "ergo/hormander.hpp"

#include <Eigen/SVD>
#include <functional>
#include <vector>

namespace ergo {
namespace {

using Field = std::function<VectorXd(const VectorXd&)>;

// [F, G](x) = J_G(x) F(x) - J_F(x) G(x), Jacobians by central differences.
Field bracket(const Field& f, const Field& g, int d) {
  return [f, g, d](const VectorXd& x) {
    VectorXd fx = f(x), gx = g(x);
    VectorXd out = VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) {
      double h = fd_step(x[k]);
      VectorXd xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      out += (g(xp) - g(xm)) / (2.0 * h) * fx[k];
      out -= (f(xp) - f(xm)) / (2.0 * h) * gx[k];
    }
    return out;
  };
}

}  // namespace

int hormander_rank(const Model& model, const VectorXd& x, int max_bracket_length) {
  if (max_bracket_length < 1 || max_bracket_length > 3) {
    throw parameter_error("hormander_rank: bracket length must be 1..3 (cost control)");
  }
  const int d = model.d;
  const int q = model.q;

  std::vector<Field> fields;  // A_0, A_1..A_q
  fields.push_back([&model, d, q](const VectorXd& y) {
    VectorXd b(d);
    model.drift(y, b);
    // Stratonovich drift correction -1/2 sum_j (D A_j) A_j.
    MatrixXd sig(d, q), sp(d, q), sm(d, q);
    model.diffusion(y, sig);
    VectorXd corr = VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) {
      double h = fd_step(y[k]);
      VectorXd yp = y, ym = y;
      yp[k] += h;
      ym[k] -= h;
      model.diffusion(yp, sp);
      model.diffusion(ym, sm);
      MatrixXd dk = (sp - sm) / (2.0 * h);  // d sigma / dx_k
      for (int j = 0; j < q; ++j) corr += dk.col(j) * sig(k, j);
    }
    return VectorXd(b - 0.5 * corr);
  });
  for (int j = 0; j < q; ++j) {
    fields.push_back([&model, d, q, j](const VectorXd& y) {
      MatrixXd sig(d, q);
      model.diffusion(y, sig);
      return VectorXd(sig.col(j));
    });
  }

  std::vector<VectorXd> family;
  for (int j = 1; j <= q; ++j) family.push_back(fields[static_cast<std::size_t>(j)](x));

  std::vector<Field> level = fields;  // brackets built on top of these
  std::vector<Field> current;
  if (max_bracket_length >= 2) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      for (std::size_t j = i + 1; j < fields.size(); ++j) {
        Field br = bracket(fields[i], fields[j], d);
        family.push_back(br(x));
        current.push_back(std::move(br));
      }
    }
  }
  if (max_bracket_length >= 3) {
    for (const auto& br : current) {
      for (const auto& base : fields) {
        Field deeper = bracket(br, base, d);
        family.push_back(deeper(x));
      }
    }
  }

  MatrixXd mat(d, static_cast<int>(family.size()));
  for (std::size_t c = 0; c < family.size(); ++c) mat.col(static_cast<int>(c)) = family[c];
  Eigen::JacobiSVD<MatrixXd> svd(mat);
  double top = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  if (!(top > 0.0)) return 0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()[i] > 1e-6 * top) ++rank;
  }
  return rank;
}

}  // namespace ergo

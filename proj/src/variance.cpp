#include "resi/variance.hpp"

#include <cmath>

#include "resi/error.hpp"

namespace resi {

namespace {

Eigen::VectorXd vec(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& M) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorKind::IllConditioned, "matrix is not positive definite");
  }
  return ldlt.solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
}

// The matrices S is built from, at a given theta.
struct Pieces {
  Eigen::MatrixXd L;       // m1 x dim
  Eigen::MatrixXd Ainv;    // bread or information inverse
  Eigen::MatrixXd B;       // meat (Robust only)
  Eigen::MatrixXd P;       // L A^-1
  Eigen::MatrixXd R;       // L A^-1 B A^-1 (Robust only)
  Eigen::MatrixXd sigma_beta;
  Eigen::VectorXd beta;
};

Pieces pieces_at(const FittedModel& model, const ContrastMatrix& L, VarianceForm form,
                 const Eigen::VectorXd& theta) {
  const auto& eq = model.equation;
  const Eigen::Index m = eq.m();
  Pieces p;
  if (form == VarianceForm::Robust) {
    Eigen::VectorXd full = model.theta;
    full.head(m) = theta;
    p.L = L.matrix(m);
    p.Ainv = spd_inverse(eq.bread_at(full).topLeftCorner(m, m));
    p.B = eq.meat_at(full, model.meat_flavor()).topLeftCorner(m, m);
    p.P = p.L * p.Ainv;
    p.R = p.P * p.B * p.Ainv;
    p.sigma_beta = p.R * p.L.transpose();
  } else {
    p.L = L.matrix(eq.dim());
    p.Ainv = spd_inverse(eq.information_at(theta, model.dispersion));
    p.P = p.L * p.Ainv;
    p.sigma_beta = p.P * p.L.transpose();
  }
  p.sigma_beta = 0.5 * (p.sigma_beta + p.sigma_beta.transpose()).eval();
  p.beta = p.L * theta;
  return p;
}

double s_from(const Pieces& p, bool is_signed) {
  if (is_signed) return p.beta(0) / std::sqrt(p.sigma_beta(0, 0));
  return std::sqrt(p.beta.dot(p.sigma_beta.ldlt().solve(p.beta)));
}

}  // namespace

VarianceForm default_variance_form(CovMode mode) {
  return is_robust(mode) ? VarianceForm::Robust : VarianceForm::Model;
}

double boundary_threshold(Eigen::Index m1) { return 1e-8 / std::sqrt(static_cast<double>(m1)); }

Eigen::VectorXd form_theta(const FittedModel& model, VarianceForm form) {
  return form == VarianceForm::Robust ? model.coefficients() : model.theta;
}

double plugin_resi(const FittedModel& model, const ContrastMatrix& L, VarianceForm form,
                   bool is_signed, const Eigen::VectorXd& theta) {
  if (is_signed && L.m1() != 1) throw Error(ErrorKind::SignedUndefined, "signed RESI requires m1 = 1");
  return s_from(pieces_at(model, L, form, theta), is_signed);
}

DerivativeBundle derivative_bundle(const FittedModel& model, const ContrastMatrix& L,
                                   VarianceForm form, bool is_signed) {
  if (is_signed && L.m1() != 1) throw Error(ErrorKind::SignedUndefined, "signed RESI requires m1 = 1");
  const auto& eq = model.equation;
  const Eigen::VectorXd theta = form_theta(model, form);
  const Pieces p = pieces_at(model, L, form, theta);

  DerivativeBundle d;
  d.s = s_from(p, is_signed);

  // Both variants share the structure dS = c * (...) with
  //   unsigned: c = 1/(2S), core = Sigma^-1 beta beta^T Sigma^-1
  //   signed:   c = 1/2,    core = beta Sigma^{-3/2} (scalar, m1 = 1)
  Eigen::MatrixXd core;
  double c;
  if (is_signed) {
    const double sb = p.sigma_beta(0, 0);
    d.partial_theta = p.L.transpose() / std::sqrt(sb);
    core = Eigen::MatrixXd::Constant(1, 1, p.beta(0) * std::pow(sb, -1.5));
    c = 0.5;
  } else {
    if (d.s <= boundary_threshold(L.m1())) {
      throw Error(ErrorKind::BoundaryGradient, "unsigned RESI gradient is undefined at S = 0");
    }
    const Eigen::VectorXd w = p.sigma_beta.ldlt().solve(p.beta);  // Sigma^-1 beta
    d.partial_theta = p.L.transpose() * w / d.s;
    core = w * w.transpose();
    c = 0.5 / d.s;
  }

  if (form == VarianceForm::Robust) {
    // dS/dB = -c P^T core P ;  dS/dA = c (P^T core R + R^T core P)
    const Eigen::MatrixXd gB = -c * p.P.transpose() * core * p.P;
    const Eigen::MatrixXd gA = c * (p.P.transpose() * core * p.R + p.R.transpose() * core * p.P);
    Eigen::VectorXd full = model.theta;
    full.head(eq.m()) = theta;
    d.dS_dA = vec(gA);
    d.dS_dB = vec(gB);
    d.dA_dtheta = eq.bread_jacobian(full);
    d.dB_dtheta = eq.meat_jacobian(full, model.meat_flavor());
    d.dS_dtheta = d.partial_theta + d.dA_dtheta * d.dS_dA + d.dB_dtheta * d.dS_dB;
    d.sigma_theta = p.Ainv * p.B * p.Ainv;
  } else {
    // Sigma_beta = L M^-1 L^T  =>  dS/dM = c P^T core P
    const Eigen::MatrixXd gA = c * p.P.transpose() * core * p.P;
    d.dS_dA = vec(gA);
    d.dA_dtheta = eq.information_jacobian(theta, model.dispersion);
    d.dS_dtheta = d.partial_theta + d.dA_dtheta * d.dS_dA;
    if (form == VarianceForm::Model) {
      d.sigma_theta = p.Ainv;
    } else {
      const Eigen::MatrixXd A = eq.bread_at(theta);
      const Eigen::MatrixXd Ainv = A.partialPivLu().inverse();
      d.sigma_theta = Ainv * eq.meat_at(theta, model.meat_flavor()) * Ainv.transpose();
    }
  }
  d.sigma_theta = 0.5 * (d.sigma_theta + d.sigma_theta.transpose()).eval();
  if (!d.dS_dtheta.allFinite()) throw Error(ErrorKind::IllConditioned, "non-finite RESI gradient");
  return d;
}

double resi_variance(const FittedModel& model, const ContrastMatrix& L, VarianceForm form,
                     bool is_signed) {
  try {
    const auto d = derivative_bundle(model, L, form, is_signed);
    return d.dS_dtheta.dot(d.sigma_theta * d.dS_dtheta);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BoundaryGradient) return 1.0;
    throw;
  }
}

Eigen::VectorXd finite_difference_gradient(const FittedModel& model, const ContrastMatrix& L,
                                           VarianceForm form, bool is_signed, double step) {
  const Eigen::VectorXd theta = form_theta(model, form);
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = step * std::max(1.0, std::abs(theta(k)));
    Eigen::VectorXd up = theta, dn = theta;
    up(k) += h;
    dn(k) -= h;
    g(k) = (plugin_resi(model, L, form, is_signed, up) - plugin_resi(model, L, form, is_signed, dn)) /
           (2.0 * h);
  }
  return g;
}

}  // namespace resi

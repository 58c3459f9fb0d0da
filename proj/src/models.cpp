#include "resi/models.hpp"

#include <cmath>
#include <json.hpp>

#include "resi/error.hpp"

namespace resi {

namespace {

constexpr double kScoreTol = 1e-10;
constexpr int kMaxNewton = 100;
constexpr int kMaxHalvings = 30;
constexpr double kBoundaryProb = 1e-10;
constexpr double kMaxCondition = 1e12;

Eigen::VectorXd vec(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

// X^T diag(w) X / n
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  return (X.transpose() * w.asDiagonal() * X) / static_cast<double>(X.rows());
}

void check_condition(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 0.0 || s(0) / s(s.size() - 1) > kMaxCondition) {
    throw Error(ErrorKind::IllConditioned, "bread matrix is near-singular");
  }
}

}  // namespace

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

CovMode default_cov_mode(Family family) {
  return family == Family::Linear ? CovMode::HC3 : CovMode::HC0;
}

std::string to_string(Family family) { return family == Family::Linear ? "linear" : "logistic"; }

std::string to_string(CovMode mode) {
  switch (mode) {
    case CovMode::HC0: return "hc0";
    case CovMode::HC3: return "hc3";
    case CovMode::Model: return "model";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "linear") return Family::Linear;
  if (s == "logistic") return Family::Logistic;
  throw Error(ErrorKind::Parameter, "unknown family '" + s + "'");
}

CovMode parse_cov_mode(const std::string& s) {
  if (s == "hc0") return CovMode::HC0;
  if (s == "hc3") return CovMode::HC3;
  if (s == "model") return CovMode::Model;
  throw Error(ErrorKind::Parameter, "unknown covariance mode '" + s + "'");
}

EstimatingEquation::EstimatingEquation(ModelFamily family, Eigen::MatrixXd X, Eigen::VectorXd y)
    : family_(family), X_(std::move(X)), y_(std::move(y)) {
  if (family_.include_dispersion && family_.kind != Family::Linear) {
    throw Error(ErrorKind::Parameter, "dispersion parameter is only defined for the linear family");
  }
  if (y_.size() != X_.rows()) throw Error(ErrorKind::Schema, "outcome length does not match design rows");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X_);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(X_.rows(), X_.cols());
  leverages_ = Q.rowwise().squaredNorm();
}

Eigen::VectorXd EstimatingEquation::hc_weights(MeatFlavor flavor) const {
  if (flavor == MeatFlavor::HC0) return Eigen::VectorXd::Ones(n());
  if (family_.kind != Family::Linear) {
    throw Error(ErrorKind::UnsupportedFlavor,
                "HC3 is only available for the linear family; logistic uses HC0");
  }
  return (1.0 - leverages_.array()).inverse().matrix();
}

Eigen::MatrixXd EstimatingEquation::psi(const Eigen::VectorXd& theta, MeatFlavor flavor) const {
  const Eigen::VectorXd w = hc_weights(flavor);
  Eigen::MatrixXd out(n(), dim());
  const Eigen::VectorXd eta = X_ * theta.head(m());
  if (family_.kind == Family::Linear) {
    const Eigen::VectorXd r = y_ - eta;
    out.leftCols(m()) = (r.cwiseProduct(w)).asDiagonal() * X_;
    if (family_.include_dispersion) out.col(m()) = r.array().square() - theta(m());
  } else {
    Eigen::VectorXd r(n());
    for (Eigen::Index i = 0; i < n(); ++i) r(i) = y_(i) - expit(eta(i));
    out = r.asDiagonal() * X_;
  }
  return out;
}

Eigen::VectorXd EstimatingEquation::mean_psi(const Eigen::VectorXd& theta) const {
  return psi(theta).colwise().mean().transpose();
}

Eigen::MatrixXd EstimatingEquation::bread_at(const Eigen::VectorXd& theta) const {
  const double nn = static_cast<double>(n());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim(), dim());
  if (family_.kind == Family::Linear) {
    A.topLeftCorner(m(), m()) = X_.transpose() * X_ / nn;
    if (family_.include_dispersion) {
      const Eigen::VectorXd r = y_ - X_ * theta.head(m());
      // d psi_phi / d theta_c = -2 r x, so the bread row is +2/n sum r x.
      A.block(m(), 0, 1, m()) = 2.0 * (X_.transpose() * r).transpose() / nn;
      A(m(), m()) = 1.0;
    }
  } else {
    const Eigen::VectorXd eta = X_ * theta;
    Eigen::VectorXd w(n());
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double mu = expit(eta(i));
      w(i) = mu * (1.0 - mu);
    }
    A = weighted_gram(X_, w);
  }
  return A;
}

Eigen::MatrixXd EstimatingEquation::meat_at(const Eigen::VectorXd& theta, MeatFlavor flavor) const {
  const Eigen::MatrixXd P = psi(theta, flavor);
  return P.transpose() * P / static_cast<double>(n());
}

Eigen::MatrixXd EstimatingEquation::information_at(const Eigen::VectorXd& theta, double fixed_phi) const {
  if (family_.kind == Family::Logistic) return bread_at(theta);
  const double nn = static_cast<double>(n());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim(), dim());
  const double phi = family_.include_dispersion ? theta(m()) : fixed_phi;
  M.topLeftCorner(m(), m()) = X_.transpose() * X_ / (nn * phi);
  if (family_.include_dispersion) M(m(), m()) = 1.0 / (2.0 * phi * phi);
  return M;
}

Eigen::MatrixXd EstimatingEquation::bread_jacobian(const Eigen::VectorXd& theta) const {
  const Eigen::Index mm = m();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(mm, mm * mm);
  if (family_.kind == Family::Linear) return J;  // psi' does not depend on theta
  const Eigen::VectorXd eta = X_ * theta.head(mm);
  Eigen::VectorXd c(n());
  for (Eigen::Index i = 0; i < n(); ++i) {
    const double mu = expit(eta(i));
    c(i) = mu * (1.0 - mu) * (1.0 - 2.0 * mu);
  }
  for (Eigen::Index k = 0; k < mm; ++k) {
    J.row(k) = vec(weighted_gram(X_, c.cwiseProduct(X_.col(k)))).transpose();
  }
  return J;
}

Eigen::MatrixXd EstimatingEquation::meat_jacobian(const Eigen::VectorXd& theta, MeatFlavor flavor) const {
  const Eigen::Index mm = m();
  Eigen::MatrixXd J(mm, mm * mm);
  const Eigen::VectorXd eta = X_ * theta.head(mm);
  Eigen::VectorXd c(n());
  if (family_.kind == Family::Linear) {
    const Eigen::VectorXd w = hc_weights(flavor);
    // B = 1/n sum w^2 r^2 x x^T, dB/dtheta_k = -2/n sum w^2 r x_k x x^T.
    c = -2.0 * w.array().square() * (y_ - eta).array();
  } else {
    (void)hc_weights(flavor);
    for (Eigen::Index i = 0; i < n(); ++i) {
      const double mu = expit(eta(i));
      c(i) = -2.0 * (y_(i) - mu) * mu * (1.0 - mu);
    }
  }
  for (Eigen::Index k = 0; k < mm; ++k) {
    J.row(k) = vec(weighted_gram(X_, c.cwiseProduct(X_.col(k)))).transpose();
  }
  return J;
}

Eigen::MatrixXd EstimatingEquation::information_jacobian(const Eigen::VectorXd& theta,
                                                         double fixed_phi) const {
  if (family_.kind == Family::Logistic) return bread_jacobian(theta);
  const Eigen::Index p = dim();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(p, p * p);
  if (!family_.include_dispersion) {
    (void)fixed_phi;
    return J;
  }
  const double phi = theta(m());
  Eigen::MatrixXd dM = Eigen::MatrixXd::Zero(p, p);
  dM.topLeftCorner(m(), m()) = -X_.transpose() * X_ / (static_cast<double>(n()) * phi * phi);
  dM(m(), m()) = -1.0 / (phi * phi * phi);
  J.row(m()) = vec(dM).transpose();
  return J;
}

FittedModel fit(ModelFamily family, const DesignMatrix& design, const Eigen::VectorXd& y, CovMode mode) {
  return fit(family, design.X, y, mode);
}

FittedModel fit(ModelFamily family, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, CovMode mode) {
  if (family.kind == Family::Logistic && mode == CovMode::HC3) {
    throw Error(ErrorKind::UnsupportedFlavor,
                "HC3 requires weight adjustments that depend on beta; use HC0 for logistic");
  }
  if (y.size() != X.rows()) throw Error(ErrorKind::Schema, "outcome length does not match design rows");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i))) throw Error(ErrorKind::Schema, "missing value in outcome");
    if (family.kind == Family::Logistic && y(i) != 0.0 && y(i) != 1.0) {
      throw Error(ErrorKind::Schema, "logistic outcome must be coded 0/1");
    }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) throw Error(ErrorKind::SingularSystem, "design is rank deficient");

  EstimatingEquation eq(family, X, y);
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(eq.dim());
  Eigen::VectorXd residuals;
  Eigen::VectorXd mu;
  double dispersion = 1.0;
  int iterations = 0;

  if (family.kind == Family::Linear) {
    theta.head(m) = qr.solve(y);
    residuals = y - X * theta.head(m);
    const double ssr = residuals.squaredNorm();
    dispersion = ssr / static_cast<double>(n - m);
    if (family.include_dispersion) theta(m) = ssr / static_cast<double>(n);
  } else {
    auto score = [&](const Eigen::VectorXd& t) { return eq.mean_psi(t); };
    Eigen::VectorXd g = score(theta);
    bool converged = false;
    for (; iterations < kMaxNewton; ++iterations) {
      const double gnorm = g.lpNorm<Eigen::Infinity>();
      if (gnorm <= kScoreTol) {
        converged = true;
        break;
      }
      const Eigen::VectorXd step = eq.bread_at(theta).ldlt().solve(g);
      double t = 1.0;
      bool accepted = false;
      for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
        const Eigen::VectorXd cand = theta + t * step;
        const Eigen::VectorXd gc = score(cand);
        if (gc.allFinite() && gc.lpNorm<Eigen::Infinity>() < gnorm) {
          theta = cand;
          g = gc;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        converged = gnorm <= 1e-8;
        break;
      }
    }
    if (!converged) throw Error(ErrorKind::Separation, "logistic Newton iterations did not converge");
    mu.resize(n);
    const Eigen::VectorXd eta = X * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = expit(eta(i));
      if (mu(i) < kBoundaryProb || mu(i) > 1.0 - kBoundaryProb) {
        throw Error(ErrorKind::Separation, "fitted probabilities at 0 or 1 (separated data)");
      }
    }
    residuals = y - mu;
  }

  const MeatFlavor flavor = mode == CovMode::HC3 ? MeatFlavor::HC3 : MeatFlavor::HC0;
  FittedModel fm{family,
                 mode,
                 theta,
                 eq.bread_at(theta),
                 eq.meat_at(theta, flavor),
                 n,
                 residuals,
                 family.kind == Family::Linear ? eq.leverages() : Eigen::VectorXd(),
                 mu,
                 dispersion,
                 iterations,
                 std::move(eq)};
  return fm;
}

Eigen::MatrixXd bread(const FittedModel& model) { return model.bread; }

Eigen::MatrixXd meat(const FittedModel& model, MeatFlavor flavor) {
  return model.equation.meat_at(model.theta, flavor);
}

CovarianceEstimate covariance(const FittedModel& model) {
  const Eigen::MatrixXd& A = model.bread;
  check_condition(A);
  CovarianceEstimate out;
  out.mode = model.cov_mode;
  if (is_robust(model.cov_mode)) {
    const Eigen::MatrixXd Ainv = A.partialPivLu().inverse();
    out.sigma = Ainv * model.meat * Ainv.transpose();
  } else if (model.family.kind == Family::Logistic) {
    out.sigma = A.ldlt().solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
  } else {
    const Eigen::Index m = model.m();
    out.sigma = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    const Eigen::MatrixXd Acc = A.topLeftCorner(m, m);
    out.sigma.topLeftCorner(m, m) =
        model.dispersion * Acc.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
    if (model.family.include_dispersion) out.sigma(m, m) = 2.0 * model.dispersion * model.dispersion;
  }
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

std::string to_json(const FittedModel& model) {
  auto matrix = [](const Eigen::MatrixXd& M) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json j;
  j["theta"] = std::vector<double>(model.theta.data(), model.theta.data() + model.theta.size());
  j["bread"] = matrix(model.bread);
  j["meat"] = matrix(model.meat);
  j["cov_mode"] = to_string(model.cov_mode);
  j["n"] = model.n;
  return j.dump();
}

}  // namespace resi

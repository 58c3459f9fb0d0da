#include <doctest.h>

#include <cmath>

#include "resi/effect_size.hpp"
#include "resi/error.hpp"
#include "resi/rng.hpp"
#include "resi/variance.hpp"

using namespace resi;

namespace {

template <class F>
ErrorKind error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected resi::Error");
  return ErrorKind::Io;
}

WaldStatistics stats(double t2, Eigen::Index m1, Eigen::Index n, Eigen::Index m = 2) {
  WaldStatistics s;
  s.t_squared = t2;
  s.m1 = m1;
  s.n = n;
  s.m = m;
  if (m1 == 1) s.z = std::sqrt(t2);
  return s;
}

// A fitted two-coefficient model on n = 100 rows whose theta and covariance
// can be overwritten.
FittedModel toy_model() {
  Eigen::MatrixXd X(100, 2);
  Eigen::VectorXd y(100);
  StreamRng rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    X.row(i) << 1.0, rng.normal();
    y(i) = rng.normal();
  }
  return fit(ModelFamily::linear(), X, y, CovMode::HC0);
}

struct Fit {
  FittedModel model;
  ContrastMatrix L;
};

// Random linear or logistic fit with m1 tested columns among 5 covariates.
Fit random_fit(std::uint64_t seed, bool logistic, int n, Eigen::Index m1) {
  StreamRng rng(seed, 7);
  const Eigen::Index p = 5;
  Eigen::MatrixXd X(n, p + 1);
  Eigen::VectorXd y(n);
  Eigen::VectorXd b(p);
  for (auto& v : b) v = 0.4 * rng.normal();
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j <= p; ++j) X(i, j) = j == 1 ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.normal();
    const double eta = X.row(i).tail(p).dot(b);
    y(i) = logistic ? (rng.bernoulli(expit(eta)) ? 1.0 : 0.0) : eta + rng.normal() * (1.0 + 0.5 * X(i, 1));
  }
  ContrastMatrix L;
  for (Eigen::Index k = 0; k < m1; ++k) L.columns.push_back(1 + k);
  const auto fam = logistic ? ModelFamily::logistic() : ModelFamily::linear();
  return {fit(fam, X, y, logistic ? CovMode::HC0 : CovMode::HC3), L};
}

}  // namespace

TEST_CASE("Wald statistics worked examples") {
  auto fm = toy_model();
  CovarianceEstimate cov{Eigen::Matrix2d::Identity() * 4.0, CovMode::HC0};
  const ContrastMatrix L{{1}};

  fm.theta << 0.0, 2.0;
  const auto s = wald_statistics(fm, cov, L);
  CHECK(s.t_squared == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(*s.z == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(std::abs(s.t_squared - *s.z * *s.z) < 1e-12);
  CHECK(std::abs(*s.f_stat - s.t_squared) < 1e-12);

  Eigen::VectorXd beta0(1);
  beta0 << 2.0;
  const auto null = wald_statistics(fm, cov, L, beta0);
  CHECK(null.t_squared == 0.0);
  CHECK(*null.z == 0.0);

  CovarianceEstimate singular{Eigen::Matrix2d::Zero(), CovMode::HC0};
  CHECK(error_of([&] { wald_statistics(fm, singular, L); }) == ErrorKind::IllConditioned);
}

TEST_CASE("T squared is invariant to contrast row order") {
  const auto f = random_fit(3, false, 200, 3);
  const auto cov = covariance(f.model);
  ContrastMatrix rev{{3, 1, 2}};
  CHECK(std::abs(wald_statistics(f.model, cov, f.L).t_squared - wald_statistics(f.model, cov, rev).t_squared) < 1e-10);
}

TEST_CASE("unsigned estimator") {
  CHECK(resi_unsigned(stats(1.0, 1, 100)).value == 0.0);
  CHECK(resi_unsigned(stats(26.0, 1, 100)).value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(resi_unsigned(stats(0.5, 3, 100)).value == 0.0);
}

TEST_CASE("signed estimator") {
  auto s = stats(100.0, 1, 100);
  CHECK(resi_signed(s).value == doctest::Approx(1.0).epsilon(1e-15));
  s.z = 0.0;
  CHECK(resi_signed(s).value == 0.0);
  auto neg = stats(9.0, 1, 900);
  neg.z = -3.0;
  CHECK(resi_signed(neg).value == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(error_of([] { resi_signed(stats(4.0, 2, 100)); }) == ErrorKind::SignedUndefined);
}

TEST_CASE("scaled estimator") {
  CHECK(resi_scaled(stats(0.0, 1, 100)).value == 0.0);
  CHECK(resi_scaled(stats(25.0, 1, 100)).value == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("F and t based estimators") {
  const Eigen::Index n = 50, m = 4, m1 = 2;
  auto s = stats(0.0, m1, n, m);
  const double f0 = static_cast<double>(n - m) / static_cast<double>(n - m - 2);
  s.f_stat = f0;
  CHECK(resi_f(s).value < 1e-7);
  auto t = stats(0.0, 1, n, m);
  t.t_stat = 0.0;
  CHECK(resi_t(t).value == 0.0);

  auto small = stats(3.0, 1, 5, 3);
  small.f_stat = 3.0;
  small.t_stat = 1.7;
  CHECK(error_of([&] { resi_f(small); }) == ErrorKind::InsufficientDf);
  CHECK(error_of([&] { resi_t(small); }) == ErrorKind::InsufficientDf);

  auto logistic = stats(3.0, 1, 100);
  CHECK(error_of([&] { resi_f(logistic); }) == ErrorKind::Parameter);
}

TEST_CASE("unsigned and scaled estimators differ by m1 / n") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (Eigen::Index m1 : {1, 3}) {
      const auto f = random_fit(seed, seed % 2 == 1, 150, m1);
      const auto s = wald_statistics(f.model, covariance(f.model), f.L);
      const double hat = resi_unsigned(s).value;
      const double tilde = resi_scaled(s).value;
      if (s.t_squared > static_cast<double>(m1)) {
        CHECK(std::abs(hat * hat - tilde * tilde + static_cast<double>(m1) / 150.0) <= 1e-14);
      }
      if (m1 == 1) CHECK(std::abs(tilde - std::abs(resi_signed(s).value)) <= 1e-15);
    }
  }
}

TEST_CASE("F and t variants approach the chi-square and Z variants") {
  const auto f = random_fit(99, false, 10000, 1);
  const auto s = wald_statistics(f.model, covariance(f.model), f.L);
  CHECK(std::abs(resi_f(s).value - resi_unsigned(s).value) < 1e-3);
  CHECK(std::abs(resi_t(s).value - resi_signed(s).value) < 1e-3);
}

TEST_CASE("RESI and its variance are scale free") {
  for (bool logistic : {false, true}) {
    const auto f = random_fit(5, logistic, 400, 3);
    Eigen::MatrixXd X2 = f.model.equation.X();
    Eigen::VectorXd scale(X2.cols());
    scale << 1.0, 2.0, 0.01, 7.5, 300.0, 0.2;
    X2 = X2 * scale.asDiagonal();
    const auto fam = logistic ? ModelFamily::logistic() : ModelFamily::linear();
    const auto mode = f.model.cov_mode;
    const auto g = fit(fam, X2, f.model.equation.y(), mode);
    const auto a = wald_statistics(f.model, covariance(f.model), f.L);
    const auto b = wald_statistics(g, covariance(g), f.L);
    CHECK(std::abs(a.t_squared - b.t_squared) <= 1e-8 * std::max(1.0, a.t_squared));
    CHECK(std::abs(resi_unsigned(a).value - resi_unsigned(b).value) < 1e-8);
    const auto form = default_variance_form(mode);
    CHECK(std::abs(resi_variance(f.model, f.L, form, false) - resi_variance(g, f.L, form, false)) < 1e-8);
  }
}

TEST_CASE("standard error is sigma over root n") {
  auto est = with_variance(resi_unsigned(stats(30.0, 1, 400)), 1.21);
  CHECK(est.sigma_s == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(est.se == est.sigma_s / 20.0);
}

TEST_CASE("variant names") {
  for (auto v : {ResiVariant::UnsignedChisq, ResiVariant::SignedZ, ResiVariant::Scaled, ResiVariant::UnsignedF,
                 ResiVariant::SignedT}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
}

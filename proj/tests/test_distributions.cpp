#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/non_central_f.hpp>
#include <boost/math/distributions/non_central_t.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

#include "resi/distributions.hpp"
#include "resi/error.hpp"

using namespace resi;
namespace bm = boost::math;

TEST_CASE("log gamma matches reference") {
  for (double x : {0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 10.0, 57.3, 400.5}) {
    CHECK(dist::log_gamma(x) == doctest::Approx(bm::lgamma(x)).epsilon(1e-13));
  }
}

TEST_CASE("incomplete gamma and beta match reference") {
  for (double a : {0.5, 1.0, 2.5, 10.0, 75.0}) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 12.0, 90.0}) {
      CHECK(std::abs(dist::gamma_p(a, x) - bm::gamma_p(a, x)) < 1e-13);
      CHECK(std::abs(dist::gamma_q(a, x) - bm::gamma_q(a, x)) < 1e-13);
    }
  }
  for (double a : {0.5, 1.0, 3.5, 40.0}) {
    for (double b : {0.5, 2.0, 25.0}) {
      for (double x : {0.001, 0.2, 0.5, 0.9, 0.999}) {
        CHECK(std::abs(dist::beta_inc(x, a, b) - bm::ibeta(a, b, x)) < 1e-13);
      }
    }
  }
}

TEST_CASE("normal quantile reference values") {
  CHECK(dist::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(dist::normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-14));
  const bm::normal nd;
  for (double p : {1e-12, 1e-6, 0.001, 0.025, 0.3, 0.5, 0.77, 0.999, 1 - 1e-9}) {
    CHECK(std::abs(dist::normal_quantile(p) - bm::quantile(nd, p)) < 1e-10 * std::max(1.0, std::abs(bm::quantile(nd, p))));
  }
  for (double x : {-30.0, -8.0, -1.3, 0.0, 0.4, 2.2, 9.0}) {
    CHECK(std::abs(dist::normal_cdf(x) - bm::cdf(nd, x)) < 1e-15);
  }
}

TEST_CASE("chi-square cdf, survival and quantile") {
  CHECK(dist::chi2_sf(1.0, 1.0) == doctest::Approx(0.31731050786291404).epsilon(1e-12));
  CHECK(dist::chi2_sf(10.0, 1.0) == doctest::Approx(0.0015654022580025018).epsilon(1e-10));
  for (double df : {1.0, 2.0, 3.0, 7.0, 30.0}) {
    const bm::chi_squared c(df);
    for (double x : {0.05, 0.7, 2.0, 5.5, 20.0, 60.0}) {
      CHECK(std::abs(dist::chi2_cdf(x, df) - bm::cdf(c, x)) < 1e-12);
      CHECK(std::abs(dist::chi2_sf(x, df) - bm::cdf(bm::complement(c, x))) < 1e-12);
    }
    for (double p : {0.01, 0.5, 0.95, 0.999}) {
      CHECK(dist::chi2_quantile(p, df) == doctest::Approx(bm::quantile(c, p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("central t and F cdfs") {
  for (double df : {1.0, 4.0, 30.0, 500.0}) {
    const bm::students_t t(df);
    for (double x : {-6.0, -1.0, 0.0, 0.3, 2.5}) CHECK(std::abs(dist::t_cdf(x, df) - bm::cdf(t, x)) < 1e-12);
  }
  for (double d1 : {1.0, 3.0}) {
    for (double d2 : {5.0, 40.0, 400.0}) {
      const bm::fisher_f f(d1, d2);
      for (double x : {0.01, 0.5, 1.0, 4.0, 20.0}) CHECK(std::abs(dist::f_cdf(x, d1, d2) - bm::cdf(f, x)) < 1e-12);
    }
  }
}

TEST_CASE("noncentral t cdf matches reference") {
  for (double df : {3.0, 20.0, 398.0}) {
    for (double ncp : {-3.0, 0.0, 0.5, 4.0, 20.0}) {
      const bm::non_central_t nt(df, ncp);
      for (double x : {-5.0, -0.5, 0.0, 1.0, 4.0, 21.0}) {
        CHECK(std::abs(dist::noncentral_t_cdf(x, df, ncp) - bm::cdf(nt, x)) < 1e-10);
      }
    }
  }
}

TEST_CASE("noncentral F cdf matches reference") {
  for (double d1 : {1.0, 3.0}) {
    for (double d2 : {10.0, 396.0}) {
      for (double ncp : {0.0, 0.3, 5.0, 100.0}) {
        const bm::non_central_f nf(d1, d2, ncp);
        for (double x : {0.05, 1.0, 3.0, 30.0, 120.0}) {
          CHECK(std::abs(dist::noncentral_f_cdf(x, d1, d2, ncp) - bm::cdf(nf, x)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("noncentral cdfs reduce to central at zero noncentrality") {
  CHECK(std::abs(dist::noncentral_t_cdf(1.3, 12.0, 0.0) - dist::t_cdf(1.3, 12.0)) < 1e-10);
  CHECK(std::abs(dist::noncentral_f_cdf(2.1, 2.0, 30.0, 0.0) - dist::f_cdf(2.1, 2.0, 30.0)) < 1e-10);
}

TEST_CASE("root finder") {
  const double r = dist::find_root([](double x) { return x * x - 2.0; }, 0.0, 2.0);
  CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  try {
    dist::find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0);
    FAIL("expected an unbracketed-root error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Solver);
  }
}

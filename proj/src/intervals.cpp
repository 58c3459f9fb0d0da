#include "resi/intervals.hpp"

#include <algorithm>
#include <cmath>

#include "resi/distributions.hpp"
#include "resi/error.hpp"
#include "resi/parallel.hpp"
#include "resi/rng.hpp"

namespace resi {

std::string to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::TruncatedAsymptotic: return "truncated-asymptotic";
    case IntervalMethod::WaldAsymptotic: return "wald-asymptotic";
    case IntervalMethod::BootstrapPercentile: return "bootstrap-percentile";
    case IntervalMethod::NoncentralInversion: return "noncentral-inversion";
  }
  return "?";
}

std::string to_string(IntervalBranch b) {
  switch (b) {
    case IntervalBranch::TwoSided: return "two-sided";
    case IntervalBranch::OneSided: return "one-sided";
    case IntervalBranch::GammaAdjusted: return "gamma-adjusted";
    case IntervalBranch::NotApplicable: return "n/a";
  }
  return "?";
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Parameter, "alpha must lie in (0, 1)");
}

ConfidenceInterval truncated_ci(const ResiEstimate& est, double alpha) {
  check_alpha(alpha);
  if (!(est.se > 0.0)) throw Error(ErrorKind::Parameter, "standard error must be positive");
  if (is_signed(est.variant)) throw Error(ErrorKind::Parameter, "truncated interval requires an unsigned estimate");

  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.method = IntervalMethod::TruncatedAsymptotic;
  const double z = dist::normal_quantile(1.0 - alpha / 2.0);
  ci.lower = est.value - z * est.se;
  ci.upper = est.value + z * est.se;
  ci.branch = IntervalBranch::TwoSided;
  if (ci.lower <= 0.0) {
    ci.lower = 0.0;
    const double s = est.value;
    const double n = static_cast<double>(est.n);
    const double m1 = static_cast<double>(est.m1);
    // Under H0, n S-hat^2 + m1 behaves as chi2_m1 on {S-hat > 0}.
    ci.gamma = dist::chi2_sf(n * s * s + m1, m1);
    if (ci.gamma < alpha / 2.0) {
      ci.upper = est.value + dist::normal_quantile(1.0 - (alpha - ci.gamma)) * est.se;
      ci.branch = IntervalBranch::GammaAdjusted;
    } else {
      ci.upper = est.value + dist::normal_quantile(1.0 - alpha) * est.se;
      ci.branch = IntervalBranch::OneSided;
    }
  }
  return ci;
}

ConfidenceInterval signed_ci(const ResiEstimate& est, double alpha) {
  check_alpha(alpha);
  if (est.m1 != 1) throw Error(ErrorKind::SignedUndefined, "signed interval requires m1 = 1");
  const double half = dist::normal_quantile(1.0 - alpha / 2.0) * est.se;
  ConfidenceInterval ci;
  ci.lower = est.value - half;
  ci.upper = est.value + half;
  ci.level = 1.0 - alpha;
  ci.method = IntervalMethod::WaldAsymptotic;
  ci.branch = IntervalBranch::TwoSided;
  return ci;
}

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorKind::Parameter, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

BootstrapDraws bootstrap_statistics(
    std::size_t n, const BootstrapOptions& opts,
    const std::function<std::vector<double>(const std::vector<std::size_t>&)>& statistic) {
  if (opts.replicates < 100) throw Error(ErrorKind::Parameter, "bootstrap needs at least 100 replicates");
  const auto B = static_cast<std::size_t>(opts.replicates);
  constexpr int kMaxAttempts = 50;

  BootstrapDraws out;
  out.values.resize(B);
  std::vector<int> failures(B, 0);
  parallel_for(B, opts.threads, [&](std::size_t r) {
    std::vector<std::size_t> rows(n);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      StreamRng rng(opts.seed, r, static_cast<std::uint64_t>(attempt));
      for (auto& i : rows) i = static_cast<std::size_t>(rng.below(n));
      try {
        out.values[r] = statistic(rows);
        return;
      } catch (const Error&) {
        ++failures[r];
      }
    }
  });

  for (int f : failures) out.redraws += f;
  const bool exhausted = std::any_of(failures.begin(), failures.end(), [](int f) { return f >= kMaxAttempts; });
  if (exhausted || out.redraws > static_cast<int>(0.1 * static_cast<double>(B))) {
    throw Error(ErrorKind::BootstrapInstability,
                std::to_string(out.redraws) + " failed bootstrap fits for " + std::to_string(B) + " replicates");
  }
  return out;
}

ConfidenceInterval percentile_interval(const BootstrapDraws& draws, std::size_t k, double alpha) {
  check_alpha(alpha);
  std::vector<double> column;
  column.reserve(draws.values.size());
  for (const auto& row : draws.values) column.push_back(row.at(k));
  ConfidenceInterval ci;
  ci.level = 1.0 - alpha;
  ci.method = IntervalMethod::BootstrapPercentile;
  ci.branch = IntervalBranch::NotApplicable;
  ci.lower = sample_quantile(column, alpha / 2.0);
  ci.upper = sample_quantile(std::move(column), 1.0 - alpha / 2.0);
  return ci;
}

BootstrapResult bootstrap_ci(ModelFamily family, const DesignMatrix& design, const Eigen::VectorXd& y,
                             CovMode mode, const ContrastMatrix& L, ResiVariant variant, double alpha,
                             const BootstrapOptions& opts) {
  check_alpha(alpha);
  const auto draws = bootstrap_statistics(
      static_cast<std::size_t>(design.n()), opts, [&](const std::vector<std::size_t>& rows) {
        Eigen::MatrixXd Xb(static_cast<Eigen::Index>(rows.size()), design.X.cols());
        Eigen::VectorXd yb(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const auto j = static_cast<Eigen::Index>(rows[i]);
          Xb.row(static_cast<Eigen::Index>(i)) = design.X.row(j);
          yb(static_cast<Eigen::Index>(i)) = y(j);
        }
        const auto fm = fit(family, Xb, yb, mode);
        return std::vector<double>{resi_point(wald_statistics(fm, covariance(fm), L), variant).value};
      });
  return {percentile_interval(draws, 0, alpha), draws.redraws};
}

}  // namespace resi

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "resi/design.hpp"
#include "resi/effect_size.hpp"
#include "resi/models.hpp"

namespace resi {

enum class IntervalMethod { TruncatedAsymptotic, WaldAsymptotic, BootstrapPercentile, NoncentralInversion };
enum class IntervalBranch { TwoSided, OneSided, GammaAdjusted, NotApplicable };

std::string to_string(IntervalMethod m);
std::string to_string(IntervalBranch b);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  IntervalMethod method = IntervalMethod::WaldAsymptotic;
  IntervalBranch branch = IntervalBranch::NotApplicable;
  /// Null right-tail probability P(S-hat > s) when the lower bound was truncated.
  double gamma = 0.0;

  bool contains(double v) const { return lower <= v && v <= upper; }
  double width() const { return upper - lower; }
};

/// Interval for an unsigned RESI that respects the [0, inf) parameter space.
/// A two-sided Wald interval is used unless its lower bound is <= 0; then the
/// lower bound is set to 0 and the upper quantile is chosen from the null tail
/// probability gamma = 1 - F_{chi2_m1}(n s^2 + m1).
ConfidenceInterval truncated_ci(const ResiEstimate& est, double alpha);

/// Wald interval S +/- z_{1-alpha/2} sigma_S / sqrt(n) for a signed RESI.
ConfidenceInterval signed_ci(const ResiEstimate& est, double alpha);

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BootstrapResult {
  ConfidenceInterval ci;
  int redraws = 0;  // replicates redrawn after a fit failure
};

/// Nonparametric case-resampling percentile interval for one RESI variant.
/// Replicate r draws from a stream keyed by (seed, r), so the result does not
/// depend on `threads`. Throws BootstrapInstability if more than 10% of draws fail.
BootstrapResult bootstrap_ci(ModelFamily family, const DesignMatrix& design, const Eigen::VectorXd& y,
                             CovMode mode, const ContrastMatrix& L, ResiVariant variant, double alpha,
                             const BootstrapOptions& opts);

/// Evaluates `statistic` on `opts.replicates` case resamples of n rows and
/// returns one row of values per replicate. A replicate whose statistic
/// throws resi::Error is redrawn from its next substream. Throws
/// BootstrapInstability if redraws exceed 10% of the replicate count.
struct BootstrapDraws {
  std::vector<std::vector<double>> values;
  int redraws = 0;
};
BootstrapDraws bootstrap_statistics(
    std::size_t n, const BootstrapOptions& opts,
    const std::function<std::vector<double>(const std::vector<std::size_t>&)>& statistic);

/// Percentile interval of column `k` of the draws.
ConfidenceInterval percentile_interval(const BootstrapDraws& draws, std::size_t k, double alpha);

void check_alpha(double alpha);

/// Percentile of a sample (type 7), used for the bootstrap endpoints.
double sample_quantile(std::vector<double> values, double p);

}  // namespace resi

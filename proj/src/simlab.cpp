#include "resi/simlab.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "resi/baselines.hpp"
#include "resi/distributions.hpp"
#include "resi/effect_size.hpp"
#include "resi/error.hpp"
#include "resi/intervals.hpp"
#include "resi/parallel.hpp"
#include "resi/variance.hpp"

namespace resi::sim {

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Normal: return "normal";
    case ErrorKind::Gamma: return "gamma";
    case ErrorKind::Hetero: return "hetero";
  }
  return "?";
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::ResiUnsigned: return "resi-unsigned";
    case EstimatorKind::ResiSigned: return "resi-signed";
    case EstimatorKind::CohenF: return "cohen-f";
    case EstimatorKind::CohenD: return "cohen-d";
  }
  return "?";
}

ErrorKind parse_error_kind(const std::string& s) {
  if (s == "normal") return ErrorKind::Normal;
  if (s == "gamma") return ErrorKind::Gamma;
  if (s == "hetero") return ErrorKind::Hetero;
  throw Error(resi::ErrorKind::Config, "unknown error kind '" + s + "'");
}

EstimatorKind parse_estimator(const std::string& s) {
  if (s == "resi-unsigned" || s == "unsigned") return EstimatorKind::ResiUnsigned;
  if (s == "resi-signed" || s == "signed") return EstimatorKind::ResiSigned;
  if (s == "cohen-f") return EstimatorKind::CohenF;
  if (s == "cohen-d") return EstimatorKind::CohenD;
  throw Error(resi::ErrorKind::Config, "unknown estimator '" + s + "'");
}

double hetero_scale() {
  return std::sqrt(kSigma2 / (kLinearP * kSigma1 * kSigma1 + (1.0 - kLinearP) * kSigma0 * kSigma0));
}

std::uint64_t Scenario::stream_id() const {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(family) + 1);
  h = mix64(h ^ (family == Family::Linear ? static_cast<std::uint64_t>(errors) : std::bit_cast<std::uint64_t>(eta)));
  h = mix64(h ^ std::bit_cast<std::uint64_t>(target_s));
  return mix64(h ^ static_cast<std::uint64_t>(n));
}

std::string Scenario::design_label() const {
  if (family == Family::Linear) return to_string(errors);
  std::ostringstream os;
  os << "eta=" << eta;
  return os.str();
}

namespace {

double logistic_sigma_beta(double eta, double beta) {
  const double m0 = expit(eta);
  const double m1 = expit(eta + beta);
  const double w0 = m0 * (1.0 - m0);
  const double w1 = m1 * (1.0 - m1);
  // Slope entry of A^-1 with A = E[w x x^T], x = (1, X), X ~ Bernoulli(1/2).
  return 2.0 * (1.0 / w0 + 1.0 / w1);
}

constexpr double kBetaLimit = 50.0;

}  // namespace

double population_sigma_beta(const Scenario& s, double beta) {
  if (s.family == Family::Logistic) return logistic_sigma_beta(s.eta, beta);
  const double p = kLinearP;
  if (s.errors == ErrorKind::Hetero) {
    const double c = hetero_scale();
    const double v1 = c * c * kSigma1 * kSigma1;
    const double v0 = c * c * kSigma0 * kSigma0;
    return v1 / p + v0 / (1.0 - p);
  }
  return kSigma2 / (p * (1.0 - p));
}

double population_resi(const Scenario& s, double beta) {
  return std::abs(beta) / std::sqrt(population_sigma_beta(s, beta));
}

double solve_beta(const Scenario& s) {
  if (!(s.target_s >= 0.0)) throw Error(resi::ErrorKind::Parameter, "target effect size must be nonnegative");
  if (s.target_s == 0.0) return 0.0;
  if (s.family == Family::Linear) return s.target_s * std::sqrt(population_sigma_beta(s, 0.0));

  // S(beta) rises then falls as the exposed group saturates; locate the peak
  // by golden-section search and solve on the rising branch.
  auto S = [&](double b) { return population_resi(s, b); };
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = kBetaLimit;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  while (b - a > 1e-10) {
    if (S(c) > S(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - ratio * (b - a);
    d = a + ratio * (b - a);
  }
  const double peak = 0.5 * (a + b);
  if (S(peak) < s.target_s) {
    throw Error(resi::ErrorKind::Solver, "target effect size not reachable for this intercept");
  }
  return dist::find_root([&](double x) { return S(x) - s.target_s; }, 0.0, peak, 1e-14, 1e-12);
}

Dataset generate(const Scenario& s, double beta, StreamRng& rng) {
  if (s.n < 10) throw Error(resi::ErrorKind::Parameter, "simulated sample size must be at least 10");
  const auto n = static_cast<Eigen::Index>(s.n);
  Dataset d;
  d.X.resize(n, 2);
  d.y.resize(n);
  d.X.col(0).setOnes();
  if (s.family == Family::Logistic) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = rng.bernoulli(kLogisticP) ? 1.0 : 0.0;
      d.X(i, 1) = x;
      d.y(i) = rng.bernoulli(expit(s.eta + beta * x)) ? 1.0 : 0.0;
    }
    return d;
  }

  d.errors.resize(n);
  const double gamma_mean = kGammaShape / kGammaRate;
  const double gamma_sd = std::sqrt(kGammaShape) / kGammaRate;
  const double c = hetero_scale();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng.bernoulli(kLinearP) ? 1.0 : 0.0;
    double e = 0.0;
    switch (s.errors) {
      case ErrorKind::Normal: e = std::sqrt(kSigma2) * rng.normal(); break;
      case ErrorKind::Gamma:
        e = (rng.gamma(kGammaShape, kGammaRate) - gamma_mean) * std::sqrt(kSigma2) / gamma_sd;
        break;
      case ErrorKind::Hetero: e = c * (x > 0.5 ? kSigma1 : kSigma0) * rng.normal(); break;
    }
    d.X(i, 1) = x;
    d.errors(i) = e;
    d.y(i) = beta * x + e;
  }
  return d;
}

namespace {

struct Cell {
  EstimatorKind estimator;
  std::optional<CovMode> mode;  // empty for Cohen indices
};

struct Draw {
  double estimate = 0.0;
  double width = 0.0;
  bool covered = false;
  bool ok = false;
};

Draw draw_resi(const Scenario& s, const Dataset& data, CovMode mode, bool is_signed, double truth, double alpha) {
  const bool linear = s.family == Family::Linear;
  const ModelFamily family = linear ? ModelFamily::linear(mode == CovMode::Model) : ModelFamily::logistic();
  const auto fm = fit(family, data.X, data.y, mode);
  const ContrastMatrix L{{1}};
  const auto stats = wald_statistics(fm, covariance(fm), L);
  ResiVariant variant;
  if (linear) {
    variant = is_signed ? ResiVariant::SignedT : ResiVariant::UnsignedF;
  } else {
    variant = is_signed ? ResiVariant::SignedZ : ResiVariant::UnsignedChisq;
  }
  auto est = resi_point(stats, variant);
  est = with_variance(est, resi_variance(fm, L, default_variance_form(mode), is_signed));
  const auto ci = is_signed ? signed_ci(est, alpha) : truncated_ci(est, alpha);
  return {est.value, ci.width(), ci.contains(truth), true};
}

Draw draw_cohen(const Dataset& data, EstimatorKind kind, double truth, double alpha) {
  CohenEstimate ce;
  if (kind == EstimatorKind::CohenF) {
    ce = cohens_f(data.X, data.y, ContrastMatrix{{1}}, alpha);
  } else {
    std::vector<double> g0, g1;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) (data.X(i, 1) > 0.5 ? g1 : g0).push_back(data.y(i));
    ce = cohens_d(Eigen::Map<Eigen::VectorXd>(g0.data(), static_cast<Eigen::Index>(g0.size())),
                  Eigen::Map<Eigen::VectorXd>(g1.data(), static_cast<Eigen::Index>(g1.size())), alpha);
  }
  return {ce.value, ce.ci.width(), ce.ci.contains(truth), true};
}

}  // namespace

std::vector<SimReport> run_scenario(const Scenario& s, const GridOptions& opts) {
  if (opts.replicates < 10) throw Error(resi::ErrorKind::Parameter, "at least 10 replicates are required");
  check_alpha(opts.alpha);

  std::vector<Cell> cells;
  for (auto e : s.estimators) {
    const bool cohen = e == EstimatorKind::CohenF || e == EstimatorKind::CohenD;
    if (cohen) {
      if (s.family != Family::Linear) throw Error(resi::ErrorKind::Config, "Cohen indices require the linear family");
      cells.push_back({e, std::nullopt});
    } else {
      for (auto mode : s.cov_modes) {
        if (s.family == Family::Logistic && mode == CovMode::HC3) {
          throw Error(resi::ErrorKind::UnsupportedFlavor, "HC3 is not available for the logistic family");
        }
        cells.push_back({e, mode});
      }
    }
  }

  const double beta = solve_beta(s);
  // Cohen's d targets beta / sigma; the other indices target the RESI, which
  // equals Cohen's f in the population under homoskedastic errors.
  const double d_truth = s.family == Family::Linear ? beta / std::sqrt(kSigma2) : 0.0;

  const auto R = static_cast<std::size_t>(opts.replicates);
  std::vector<std::vector<Draw>> draws(cells.size(), std::vector<Draw>(R));
  parallel_for(R, opts.threads, [&](std::size_t r) {
    StreamRng rng(opts.seed, s.stream_id(), r);
    const Dataset data = generate(s, beta, rng);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      const double truth = cell.estimator == EstimatorKind::CohenD ? d_truth : s.target_s;
      try {
        if (cell.mode) {
          draws[c][r] = draw_resi(s, data, *cell.mode, cell.estimator == EstimatorKind::ResiSigned, truth, opts.alpha);
        } else {
          draws[c][r] = draw_cohen(data, cell.estimator, truth, opts.alpha);
        }
      } catch (const Error&) {
        draws[c][r] = Draw{};
      }
    }
  });

  std::vector<SimReport> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SimReport rep;
    rep.scenario = s;
    rep.estimator = cells[c].estimator;
    rep.cov_label = cells[c].mode ? to_string(*cells[c].mode) : "classical";
    rep.truth = cells[c].estimator == EstimatorKind::CohenD ? d_truth : s.target_s;
    rep.seed = opts.seed;
    double sum = 0.0, width = 0.0, hits = 0.0;
    int ok = 0;
    for (const auto& d : draws[c]) {
      if (!d.ok) continue;
      ++ok;
      sum += d.estimate;
      width += d.width;
      hits += d.covered ? 1.0 : 0.0;
    }
    rep.replicates = ok;
    rep.failures = opts.replicates - ok;
    rep.flagged = rep.failures > 0.05 * opts.replicates;
    if (ok > 0) {
      const double k = static_cast<double>(ok);
      rep.mean_estimate = sum / k;
      rep.bias = rep.mean_estimate - rep.truth;
      double ss = 0.0;
      for (const auto& d : draws[c]) {
        if (d.ok) ss += (d.estimate - rep.mean_estimate) * (d.estimate - rep.mean_estimate);
      }
      rep.bias_mcse = ok > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
      rep.coverage = hits / k;
      rep.coverage_mcse = std::sqrt(rep.coverage * (1.0 - rep.coverage) / k);
      rep.mean_width = width / k;
    }
    out.push_back(rep);
  }
  return out;
}

std::vector<SimReport> run_grid(const std::vector<Scenario>& scenarios, const GridOptions& opts) {
  std::vector<SimReport> out;
  for (const auto& s : scenarios) {
    auto reps = run_scenario(s, opts);
    out.insert(out.end(), reps.begin(), reps.end());
  }
  return out;
}

std::string csv_header() {
  return "family,error_kind_or_eta,target_s,n,variant,cov_mode,bias,bias_mcse,coverage,coverage_mcse,"
         "mean_width,replicates,failures,seed";
}

namespace {

std::string variant_label(const SimReport& r) {
  const bool linear = r.scenario.family == Family::Linear;
  switch (r.estimator) {
    case EstimatorKind::ResiUnsigned: return to_string(linear ? ResiVariant::UnsignedF : ResiVariant::UnsignedChisq);
    case EstimatorKind::ResiSigned: return to_string(linear ? ResiVariant::SignedT : ResiVariant::SignedZ);
    default: return to_string(r.estimator);
  }
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SimReport>& reports) {
  out << csv_header() << '\n';
  out << std::setprecision(17);
  for (const auto& r : reports) {
    const auto& s = r.scenario;
    out << to_string(s.family) << ',';
    if (s.family == Family::Linear) {
      out << to_string(s.errors);
    } else {
      out << s.eta;
    }
    out << ',' << s.target_s << ',' << s.n << ',' << variant_label(r) << ',' << r.cov_label << ',' << r.bias << ','
        << r.bias_mcse << ',' << r.coverage << ',' << r.coverage_mcse << ',' << r.mean_width << ',' << r.replicates
        << ',' << r.failures << ',' << r.seed << '\n';
  }
}

}  // namespace resi::sim

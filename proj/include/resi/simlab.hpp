#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "resi/models.hpp"
#include "resi/rng.hpp"

namespace resi::sim {

enum class ErrorKind { Normal, Gamma, Hetero };

/// Estimators compared in a cell. Linear RESI uses the F/t point estimators,
/// logistic the chi-square/Z ones.
enum class EstimatorKind { ResiUnsigned, ResiSigned, CohenF, CohenD };

std::string to_string(ErrorKind k);
std::string to_string(EstimatorKind k);
ErrorKind parse_error_kind(const std::string& s);
EstimatorKind parse_estimator(const std::string& s);

// Generative constants.
inline constexpr double kLinearP = 0.4;
inline constexpr double kLogisticP = 0.5;
inline constexpr double kSigma2 = 2.0;
inline constexpr double kGammaShape = 1.2;
inline constexpr double kGammaRate = 0.775;
inline constexpr double kSigma0 = 1.111;
inline constexpr double kSigma1 = 3.333;

/// Factor c with c^2 (p sigma1^2 + (1-p) sigma0^2) = sigma^2.
double hetero_scale();

struct Scenario {
  Family family = Family::Linear;
  ErrorKind errors = ErrorKind::Normal;  // linear
  double eta = 0.0;                      // logistic intercept
  double target_s = 0.0;
  int n = 100;
  std::vector<CovMode> cov_modes;        // one RESI cell per mode
  std::vector<EstimatorKind> estimators;

  /// Stable identifier of the generative design (family, errors/eta, S, n);
  /// keys the RNG stream so adding cells never perturbs existing ones.
  std::uint64_t stream_id() const;
  std::string design_label() const;  // "normal" / "hetero" / "eta=-1"
};

/// Population robust slope variance Sigma_beta (variance of sqrt(n) beta-hat).
double population_sigma_beta(const Scenario& s, double beta);
/// RESI of the population design at slope beta.
double population_resi(const Scenario& s, double beta);
/// Slope giving RESI = target_s; 0 for target 0. Logistic uses a bracketed
/// root on the rising branch of S(beta); throws Solver if unreachable.
double solve_beta(const Scenario& s);

struct Dataset {
  Eigen::MatrixXd X;  // [1, x]
  Eigen::VectorXd y;
  Eigen::VectorXd errors;  // linear only
};

Dataset generate(const Scenario& s, double beta, StreamRng& rng);

struct SimReport {
  Scenario scenario;
  EstimatorKind estimator = EstimatorKind::ResiUnsigned;
  std::string cov_label;  // hc0/hc3/model, or "classical" for Cohen indices
  double truth = 0.0;
  double bias = 0.0;
  double bias_mcse = 0.0;
  double coverage = 0.0;
  double coverage_mcse = 0.0;
  double mean_width = 0.0;
  double mean_estimate = 0.0;
  int replicates = 0;  // successful
  int failures = 0;
  bool flagged = false;  // failures > 5%
  std::uint64_t seed = 0;
};

struct GridOptions {
  int replicates = 1000;
  int threads = 1;
  std::uint64_t seed = 1;
  double alpha = 0.05;
};

std::vector<SimReport> run_scenario(const Scenario& s, const GridOptions& opts);
std::vector<SimReport> run_grid(const std::vector<Scenario>& scenarios, const GridOptions& opts);

std::string csv_header();
void write_csv(std::ostream& out, const std::vector<SimReport>& reports);

}  // namespace resi::sim

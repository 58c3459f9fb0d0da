#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "resi/design.hpp"
#include "resi/models.hpp"
#include "resi/table.hpp"

namespace resi {

struct AnalysisConfig {
  std::string outcome;
  Family family = Family::Linear;
  std::vector<TermSpec> terms;
  std::optional<CovMode> cov;  // family default when empty
  double alpha = 0.05;
  int bootstrap = 0;  // replicates, 0 disables
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Signed RESI of one coefficient.
struct CoefficientRow {
  std::string term;
  double estimate = 0.0;
  double resi = 0.0;
  double sigma_s = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::optional<double> boot_lower;
  std::optional<double> boot_upper;
  double z = 0.0;
  double p_value = 1.0;

  bool operator==(const CoefficientRow&) const = default;
};

/// Type-II test of one term group with its unsigned RESI.
struct AnovaRow {
  std::string term;
  int df = 0;
  double resi = 0.0;
  double sigma_s = 0.0;
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::string ci_branch;
  std::optional<double> boot_lower;
  std::optional<double> boot_upper;
  double chisq = 0.0;
  double p_value = 1.0;

  bool operator==(const AnovaRow&) const = default;
};

struct AnalysisReport {
  std::string family;
  std::string cov_mode;
  std::string outcome;
  long long n = 0;
  double alpha = 0.05;
  int bootstrap = 0;
  int bootstrap_redraws = 0;
  std::vector<CoefficientRow> coefficients;
  std::vector<AnovaRow> anova;

  bool operator==(const AnalysisReport&) const = default;
};

/// Fits the full model, reports the signed (Z-based) RESI of every
/// non-intercept coefficient and the unsigned (chi-square based) RESI of
/// every term. Main effects are tested in a refit that drops each
/// interaction containing them; interactions are tested in the full model.
/// p-values use the chi-square law of the robust Wald statistic.
AnalysisReport analyze(const DataTable& data, const AnalysisConfig& cfg);

std::string format_table(const AnalysisReport& report);
std::string to_json(const AnalysisReport& report);
AnalysisReport report_from_json(const std::string& text);
std::string to_csv(const AnalysisReport& report);

enum class BenchmarkPreset { Small, Large };
BenchmarkPreset parse_preset(const std::string& s);

/// Synthetic data shaped like the two application models: `small` is a
/// linear model on n = 245 with sex, diagnosis, ns(age, 3) and the
/// diagnosis-by-age interaction; `large` is logistic on n = 20000 with sex,
/// ns(age, 3) and their interaction.
struct BenchmarkCase {
  DataTable data;
  AnalysisConfig config;
};
BenchmarkCase benchmark_case(BenchmarkPreset preset, std::uint64_t seed);

struct BenchmarkResult {
  std::string preset;
  long long n = 0;
  int bootstrap = 0;
  double asymptotic_seconds = 0.0;
  double bootstrap_seconds = 0.0;
  double ratio = 0.0;
  /// Largest |asymptotic - bootstrap| endpoint difference over all rows.
  double max_endpoint_distance = 0.0;
  AnalysisReport report;
};

BenchmarkResult run_benchmark(BenchmarkPreset preset, int replicates, std::uint64_t seed, int threads);

}  // namespace resi

#include "resi/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "resi/distributions.hpp"
#include "resi/effect_size.hpp"
#include "resi/error.hpp"
#include "resi/intervals.hpp"
#include "resi/rng.hpp"
#include "resi/variance.hpp"

namespace resi {

namespace {

using nlohmann::json;

ModelFamily model_family(Family f, CovMode mode) {
  return f == Family::Linear ? ModelFamily::linear(mode == CovMode::Model) : ModelFamily::logistic();
}

/// Full design restricted to `keep` columns.
struct SubModel {
  std::string term;  // tested term
  std::vector<Eigen::Index> keep;
  ContrastMatrix L;  // in reduced coordinates
};

Eigen::MatrixXd take_columns(const Eigen::MatrixXd& X, const std::vector<Eigen::Index>& keep) {
  Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(keep[j]);
  return out;
}

std::vector<SubModel> anova_models(const DesignMatrix& design) {
  std::vector<SubModel> out;
  for (const auto& term : design.terms) {
    SubModel sm;
    sm.term = term.name;
    for (Eigen::Index j = 0; j < design.m(); ++j) {
      const auto& owner = design.column_terms[static_cast<std::size_t>(j)];
      bool drop = false;
      if (term.kind != TermKind::Interaction) {
        for (const auto& other : design.terms) {
          if (other.name == owner && other.kind == TermKind::Interaction && other.involves(term.name)) drop = true;
        }
      }
      if (drop) continue;
      if (owner == term.name) sm.L.columns.push_back(static_cast<Eigen::Index>(sm.keep.size()));
      sm.keep.push_back(j);
    }
    out.push_back(std::move(sm));
  }
  return out;
}

// Re-tags a fit error with the term under test; the kind prefix is dropped
// because the rethrown Error adds it again.
std::string with_context(const std::string& term, const Error& e) {
  std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.kind())) + ": ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return "term '" + term + "': " + msg;
}

}  // namespace

AnalysisReport analyze(const DataTable& data, const AnalysisConfig& cfg) {
  check_alpha(cfg.alpha);
  if (cfg.bootstrap != 0 && cfg.bootstrap < 100) throw Error(ErrorKind::Parameter, "bootstrap needs at least 100 replicates");
  if (cfg.terms.empty()) throw Error(ErrorKind::Parameter, "no model terms given");
  const CovMode mode = cfg.cov.value_or(default_cov_mode(cfg.family));
  if (cfg.family == Family::Logistic && mode == CovMode::HC3) {
    throw Error(ErrorKind::UnsupportedFlavor, "HC3 is not available for the logistic family");
  }
  const ModelFamily family = model_family(cfg.family, mode);
  const VarianceForm form = default_variance_form(mode);

  const DesignMatrix design = build_design(data, cfg.terms);
  const auto& ycol = data.column(cfg.outcome);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(ycol.data(), static_cast<Eigen::Index>(ycol.size()));
  if (!y.allFinite()) throw Error(ErrorKind::Schema, "outcome '" + cfg.outcome + "' has missing values");

  AnalysisReport rep;
  rep.family = to_string(cfg.family);
  rep.cov_mode = to_string(mode);
  rep.outcome = cfg.outcome;
  rep.n = design.n();
  rep.alpha = cfg.alpha;
  rep.bootstrap = cfg.bootstrap;

  const auto full = fit(family, design, y, mode);
  const auto full_cov = covariance(full);
  for (Eigen::Index j = 1; j < design.m(); ++j) {
    const ContrastMatrix L{{j}};
    const auto& name = design.column_names[static_cast<std::size_t>(j)];
    try {
      const auto stats = wald_statistics(full, full_cov, L);
      auto est = with_variance(resi_signed(stats), resi_variance(full, L, form, true));
      const auto ci = signed_ci(est, cfg.alpha);
      CoefficientRow row;
      row.term = name;
      row.estimate = full.theta(j);
      row.resi = est.value;
      row.sigma_s = est.sigma_s;
      row.se = est.se;
      row.ci_lower = ci.lower;
      row.ci_upper = ci.upper;
      row.z = *stats.z;
      row.p_value = dist::chi2_sf(stats.t_squared, 1.0);
      rep.coefficients.push_back(row);
    } catch (const Error& e) {
      throw Error(e.kind(), with_context(name, e));
    }
  }

  const auto subs = anova_models(design);
  for (const auto& sm : subs) {
    try {
      const auto fm = sm.keep.size() == static_cast<std::size_t>(design.m())
                          ? full
                          : fit(family, take_columns(design.X, sm.keep), y, mode);
      const auto stats = wald_statistics(fm, covariance(fm), sm.L);
      auto est = with_variance(resi_unsigned(stats), resi_variance(fm, sm.L, form, false));
      const auto ci = truncated_ci(est, cfg.alpha);
      AnovaRow row;
      row.term = sm.term;
      row.df = static_cast<int>(sm.L.m1());
      row.resi = est.value;
      row.sigma_s = est.sigma_s;
      row.se = est.se;
      row.ci_lower = ci.lower;
      row.ci_upper = ci.upper;
      row.ci_branch = to_string(ci.branch);
      row.chisq = stats.t_squared;
      row.p_value = dist::chi2_sf(stats.t_squared, static_cast<double>(row.df));
      rep.anova.push_back(row);
    } catch (const Error& e) {
      throw Error(e.kind(), with_context(sm.term, e));
    }
  }

  if (cfg.bootstrap > 0) {
    BootstrapOptions opts;
    opts.replicates = cfg.bootstrap;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;
    const auto draws = bootstrap_statistics(
        static_cast<std::size_t>(design.n()), opts, [&](const std::vector<std::size_t>& rows) {
          Eigen::MatrixXd Xb(static_cast<Eigen::Index>(rows.size()), design.m());
          Eigen::VectorXd yb(static_cast<Eigen::Index>(rows.size()));
          for (std::size_t i = 0; i < rows.size(); ++i) {
            Xb.row(static_cast<Eigen::Index>(i)) = design.X.row(static_cast<Eigen::Index>(rows[i]));
            yb(static_cast<Eigen::Index>(i)) = y(static_cast<Eigen::Index>(rows[i]));
          }
          std::vector<double> out;
          const auto fb = fit(family, Xb, yb, mode);
          const auto cb = covariance(fb);
          for (Eigen::Index j = 1; j < design.m(); ++j) {
            out.push_back(resi_signed(wald_statistics(fb, cb, ContrastMatrix{{j}})).value);
          }
          for (const auto& sm : subs) {
            const auto fr = sm.keep.size() == static_cast<std::size_t>(design.m())
                                ? fb
                                : fit(family, take_columns(Xb, sm.keep), yb, mode);
            out.push_back(resi_unsigned(wald_statistics(fr, covariance(fr), sm.L)).value);
          }
          return out;
        });
    rep.bootstrap_redraws = draws.redraws;
    std::size_t k = 0;
    for (auto& row : rep.coefficients) {
      const auto ci = percentile_interval(draws, k++, cfg.alpha);
      row.boot_lower = ci.lower;
      row.boot_upper = ci.upper;
    }
    for (auto& row : rep.anova) {
      const auto ci = percentile_interval(draws, k++, cfg.alpha);
      row.boot_lower = ci.lower;
      row.boot_upper = ci.upper;
    }
  }
  return rep;
}

namespace {

std::string fmt6(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string fmt6(const std::optional<double>& v) { return v ? fmt6(*v) : "-"; }

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream os;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0) {
        os << std::left << std::setw(static_cast<int>(width[c])) << r[c];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[c])) << r[c];
      }
    }
    os << '\n';
  }
  return os.str();
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string csv_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_num(const std::optional<double>& v) { return v ? csv_num(*v) : ""; }

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_table(const AnalysisReport& r) {
  const bool boot = r.bootstrap > 0;
  const std::string level = fmt6(100.0 * (1.0 - r.alpha)) + "%";
  std::ostringstream os;
  os << "family: " << r.family << "  outcome: " << r.outcome << "  n: " << r.n << "  covariance: " << r.cov_mode
     << '\n';
  if (boot) os << "bootstrap replicates: " << r.bootstrap << "  redraws: " << r.bootstrap_redraws << '\n';

  os << "\nCoefficients (signed RESI, " << level << " Wald CI)\n";
  std::vector<std::vector<std::string>> rows{{"term", "estimate", "RESI", "SE", "lower", "upper"}};
  if (boot) rows[0].insert(rows[0].end(), {"boot.lower", "boot.upper"});
  rows[0].insert(rows[0].end(), {"z", "p"});
  for (const auto& c : r.coefficients) {
    std::vector<std::string> row{c.term, fmt6(c.estimate), fmt6(c.resi), fmt6(c.se), fmt6(c.ci_lower),
                                 fmt6(c.ci_upper)};
    if (boot) row.insert(row.end(), {fmt6(c.boot_lower), fmt6(c.boot_upper)});
    row.insert(row.end(), {fmt6(c.z), fmt6(c.p_value)});
    rows.push_back(row);
  }
  os << render(rows);

  os << "\nType-II ANOVA (unsigned RESI, " << level << " truncated CI)\n";
  rows = {{"term", "df", "RESI", "SE", "lower", "upper", "branch"}};
  if (boot) rows[0].insert(rows[0].end(), {"boot.lower", "boot.upper"});
  rows[0].insert(rows[0].end(), {"chisq", "p"});
  for (const auto& a : r.anova) {
    std::vector<std::string> row{a.term,          std::to_string(a.df), fmt6(a.resi), fmt6(a.se),
                                 fmt6(a.ci_lower), fmt6(a.ci_upper),    a.ci_branch};
    if (boot) row.insert(row.end(), {fmt6(a.boot_lower), fmt6(a.boot_upper)});
    row.insert(row.end(), {fmt6(a.chisq), fmt6(a.p_value)});
    rows.push_back(row);
  }
  os << render(rows);
  return os.str();
}

std::string to_json(const AnalysisReport& r) {
  json j;
  j["family"] = r.family;
  j["cov_mode"] = r.cov_mode;
  j["outcome"] = r.outcome;
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["bootstrap"] = r.bootstrap;
  j["bootstrap_redraws"] = r.bootstrap_redraws;
  j["coefficients"] = json::array();
  for (const auto& c : r.coefficients) {
    j["coefficients"].push_back({{"term", c.term},
                                 {"estimate", c.estimate},
                                 {"resi", c.resi},
                                 {"sigma_s", c.sigma_s},
                                 {"se", c.se},
                                 {"ci_lower", c.ci_lower},
                                 {"ci_upper", c.ci_upper},
                                 {"boot_lower", opt(c.boot_lower)},
                                 {"boot_upper", opt(c.boot_upper)},
                                 {"z", c.z},
                                 {"p_value", c.p_value}});
  }
  j["anova"] = json::array();
  for (const auto& a : r.anova) {
    j["anova"].push_back({{"term", a.term},
                          {"df", a.df},
                          {"resi", a.resi},
                          {"sigma_s", a.sigma_s},
                          {"se", a.se},
                          {"ci_lower", a.ci_lower},
                          {"ci_upper", a.ci_upper},
                          {"ci_branch", a.ci_branch},
                          {"boot_lower", opt(a.boot_lower)},
                          {"boot_upper", opt(a.boot_upper)},
                          {"chisq", a.chisq},
                          {"p_value", a.p_value}});
  }
  return j.dump(2) + "\n";
}

AnalysisReport report_from_json(const std::string& text) {
  AnalysisReport r;
  try {
    const json j = json::parse(text);
    r.family = j.at("family").get<std::string>();
    r.cov_mode = j.at("cov_mode").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    r.n = j.at("n").get<long long>();
    r.alpha = j.at("alpha").get<double>();
    r.bootstrap = j.at("bootstrap").get<int>();
    r.bootstrap_redraws = j.at("bootstrap_redraws").get<int>();
    for (const auto& c : j.at("coefficients")) {
      CoefficientRow row;
      row.term = c.at("term").get<std::string>();
      row.estimate = c.at("estimate").get<double>();
      row.resi = c.at("resi").get<double>();
      row.sigma_s = c.at("sigma_s").get<double>();
      row.se = c.at("se").get<double>();
      row.ci_lower = c.at("ci_lower").get<double>();
      row.ci_upper = c.at("ci_upper").get<double>();
      row.boot_lower = opt_from(c.at("boot_lower"));
      row.boot_upper = opt_from(c.at("boot_upper"));
      row.z = c.at("z").get<double>();
      row.p_value = c.at("p_value").get<double>();
      r.coefficients.push_back(row);
    }
    for (const auto& a : j.at("anova")) {
      AnovaRow row;
      row.term = a.at("term").get<std::string>();
      row.df = a.at("df").get<int>();
      row.resi = a.at("resi").get<double>();
      row.sigma_s = a.at("sigma_s").get<double>();
      row.se = a.at("se").get<double>();
      row.ci_lower = a.at("ci_lower").get<double>();
      row.ci_upper = a.at("ci_upper").get<double>();
      row.ci_branch = a.at("ci_branch").get<std::string>();
      row.boot_lower = opt_from(a.at("boot_lower"));
      row.boot_upper = opt_from(a.at("boot_upper"));
      row.chisq = a.at("chisq").get<double>();
      row.p_value = a.at("p_value").get<double>();
      r.anova.push_back(row);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

std::string to_csv(const AnalysisReport& r) {
  std::ostringstream os;
  os << "table,term,df,estimate,resi,sigma_s,se,ci_lower,ci_upper,ci_branch,boot_lower,boot_upper,statistic,p_value\n";
  for (const auto& c : r.coefficients) {
    os << "coefficient," << csv_text(c.term) << ",1," << csv_num(c.estimate) << ',' << csv_num(c.resi) << ','
       << csv_num(c.sigma_s) << ',' << csv_num(c.se) << ',' << csv_num(c.ci_lower) << ',' << csv_num(c.ci_upper)
       << ",two-sided," << csv_num(c.boot_lower) << ',' << csv_num(c.boot_upper) << ',' << csv_num(c.z) << ','
       << csv_num(c.p_value) << '\n';
  }
  for (const auto& a : r.anova) {
    os << "anova," << csv_text(a.term) << ',' << a.df << ",," << csv_num(a.resi) << ',' << csv_num(a.sigma_s) << ','
       << csv_num(a.se) << ',' << csv_num(a.ci_lower) << ',' << csv_num(a.ci_upper) << ',' << a.ci_branch << ','
       << csv_num(a.boot_lower) << ',' << csv_num(a.boot_upper) << ',' << csv_num(a.chisq) << ','
       << csv_num(a.p_value) << '\n';
  }
  return os.str();
}

BenchmarkPreset parse_preset(const std::string& s) {
  if (s == "small") return BenchmarkPreset::Small;
  if (s == "large") return BenchmarkPreset::Large;
  throw Error(ErrorKind::Config, "unknown preset '" + s + "' (expected small or large)");
}

BenchmarkCase benchmark_case(BenchmarkPreset preset, std::uint64_t seed) {
  StreamRng rng(seed, 0x62656e6368ULL);
  BenchmarkCase bc;
  if (preset == BenchmarkPreset::Small) {
    constexpr std::size_t n = 245;
    std::vector<double> sex(n), dx(n), age(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      sex[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      dx[i] = rng.bernoulli(0.45) ? 1.0 : 0.0;
      age[i] = 2.0 + 18.0 * rng.uniform();
      const double a = (age[i] - 11.0) / 6.0;
      const double mean = 0.3 * sex[i] - 0.5 * dx[i] + 0.8 * a - 0.4 * a * a + 0.3 * dx[i] * a;
      y[i] = mean + (0.8 + 0.3 * dx[i]) * rng.normal();
    }
    bc.data.add_column("sex", sex);
    bc.data.add_column("dx", dx);
    bc.data.add_column("age", age);
    bc.data.add_column("y", y);
    bc.config.family = Family::Linear;
    bc.config.terms = parse_terms("binary(sex), binary(dx), ns(age,3), dx:ns(age,3)");
  } else {
    constexpr std::size_t n = 20000;
    std::vector<double> sex(n), age(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      sex[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
      age[i] = 1.0 + 17.0 * rng.uniform();
      const double a = (age[i] - 9.5) / 5.0;
      const double eta = -1.2 + 0.6 * sex[i] + 0.4 * a - 0.2 * a * a + 0.15 * sex[i] * a;
      y[i] = rng.bernoulli(expit(eta)) ? 1.0 : 0.0;
    }
    bc.data.add_column("sex", sex);
    bc.data.add_column("age", age);
    bc.data.add_column("y", y);
    bc.config.family = Family::Logistic;
    bc.config.terms = parse_terms("binary(sex), ns(age,3), sex:ns(age,3)");
  }
  bc.config.outcome = "y";
  bc.config.seed = seed;
  return bc;
}

BenchmarkResult run_benchmark(BenchmarkPreset preset, int replicates, std::uint64_t seed, int threads) {
  auto bc = benchmark_case(preset, seed);
  bc.config.threads = threads;
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  BenchmarkResult out;
  out.preset = preset == BenchmarkPreset::Small ? "small" : "large";
  out.n = static_cast<long long>(bc.data.rows());
  out.bootstrap = replicates;

  auto t0 = clock::now();
  analyze(bc.data, bc.config);
  auto t1 = clock::now();
  bc.config.bootstrap = replicates;
  out.report = analyze(bc.data, bc.config);
  auto t2 = clock::now();
  out.asymptotic_seconds = seconds(t0, t1);
  out.bootstrap_seconds = seconds(t1, t2);
  out.ratio = out.bootstrap_seconds / std::max(out.asymptotic_seconds, 1e-9);

  for (const auto& c : out.report.coefficients) {
    out.max_endpoint_distance = std::max({out.max_endpoint_distance, std::abs(c.ci_lower - *c.boot_lower),
                                          std::abs(c.ci_upper - *c.boot_upper)});
  }
  for (const auto& a : out.report.anova) {
    out.max_endpoint_distance = std::max({out.max_endpoint_distance, std::abs(a.ci_lower - *a.boot_lower),
                                          std::abs(a.ci_upper - *a.boot_upper)});
  }
  return out;
}

}  // namespace resi

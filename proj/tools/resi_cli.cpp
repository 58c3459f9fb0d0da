#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "resi/analysis.hpp"
#include "resi/error.hpp"
#include "resi/grid_config.hpp"
#include "resi/simlab.hpp"

namespace {

// Writes to --out when given, else stdout.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw resi::Error(resi::ErrorKind::Io, "cannot write '" + path + "'");
  f << text;
}

std::string render_report(const resi::AnalysisReport& r, const std::string& format) {
  if (format == "json") return resi::to_json(r);
  if (format == "csv") return resi::to_csv(r);
  return resi::format_table(r);
}

std::string render_benchmark(const resi::BenchmarkResult& b, const std::string& format) {
  std::ostringstream os;
  if (format == "json") {
    os << std::setprecision(17) << "{\n  \"preset\": \"" << b.preset << "\",\n  \"n\": " << b.n
       << ",\n  \"bootstrap\": " << b.bootstrap << ",\n  \"asymptotic_seconds\": " << b.asymptotic_seconds
       << ",\n  \"bootstrap_seconds\": " << b.bootstrap_seconds << ",\n  \"ratio\": " << b.ratio
       << ",\n  \"max_endpoint_distance\": " << b.max_endpoint_distance << "\n}\n";
  } else if (format == "csv") {
    os << std::setprecision(17)
       << "preset,n,bootstrap,asymptotic_seconds,bootstrap_seconds,ratio,max_endpoint_distance\n"
       << b.preset << ',' << b.n << ',' << b.bootstrap << ',' << b.asymptotic_seconds << ',' << b.bootstrap_seconds
       << ',' << b.ratio << ',' << b.max_endpoint_distance << '\n';
  } else {
    os << std::setprecision(6) << "preset: " << b.preset << "  n: " << b.n << "  bootstrap replicates: " << b.bootstrap
       << "\nasymptotic: " << b.asymptotic_seconds << " s\nbootstrap:  " << b.bootstrap_seconds
       << " s\nratio:      " << b.ratio << "\nmax CI endpoint distance: " << b.max_endpoint_distance << "\n\n"
       << resi::format_table(b.report);
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust effect size index (RESI) estimation and simulation"};
  app.require_subcommand(1);

  std::string input, outcome, family = "linear", terms, cov, format = "table", out;
  double alpha = 0.05;
  int bootstrap = 0;
  std::uint64_t seed = 1;
  int threads = 1;

  auto* analyze = app.add_subcommand("analyze", "Coefficient and Type-II ANOVA tables with RESI intervals");
  analyze->add_option("--input", input, "CSV file with a header row")->required();
  analyze->add_option("--outcome", outcome, "Outcome column")->required();
  analyze->add_option("--family", family, "linear or logistic")->check(CLI::IsMember({"linear", "logistic"}));
  analyze->add_option("--terms", terms, "Term list, e.g. \"binary(sex), ns(age,3), sex:ns(age,3)\"")->required();
  analyze->add_option("--cov", cov, "hc0, hc3 or model (default hc3 linear, hc0 logistic)")
      ->check(CLI::IsMember({"hc0", "hc3", "model"}));
  analyze->add_option("--alpha", alpha, "Significance level");
  analyze->add_option("--bootstrap", bootstrap, "Bootstrap replicates (0 disables)");
  analyze->add_option("--seed", seed, "Bootstrap seed");
  analyze->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  analyze->add_option("--format", format, "table, json or csv")->check(CLI::IsMember({"table", "json", "csv"}));
  analyze->add_option("--out", out, "Output path (default stdout)");

  std::string grid;
  bool dry_run = false;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_threads, sim_reps;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation grid and write one CSV row per cell");
  simulate->add_option("grid", grid, "Grid config file")->required();
  simulate->add_flag("--dry-run", dry_run, "Print the cell count without running");
  simulate->add_option("--seed", sim_seed, "Override the grid seed");
  simulate->add_option("--threads", sim_threads, "Override the grid thread count")->check(CLI::PositiveNumber);
  simulate->add_option("--replicates", sim_reps, "Override the grid replicate count");
  simulate->add_option("--out", out, "Output path (default stdout)");

  std::string preset = "small", emit_data;
  int bench_b = 1000;
  auto* bench = app.add_subcommand("benchmark", "Time asymptotic against bootstrap intervals on synthetic data");
  bench->add_option("--preset", preset, "small (linear, n=245) or large (logistic, n=20000)")
      ->check(CLI::IsMember({"small", "large"}));
  bench->add_option("--bootstrap", bench_b, "Bootstrap replicates");
  bench->add_option("--seed", seed, "Data and bootstrap seed");
  bench->add_option("--threads", threads, "Worker threads for the bootstrap")->check(CLI::PositiveNumber);
  bench->add_option("--format", format, "table, json or csv")->check(CLI::IsMember({"table", "json", "csv"}));
  bench->add_option("--emit-data", emit_data, "Also write the synthetic dataset to this CSV path");
  bench->add_option("--out", out, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      resi::AnalysisConfig cfg;
      cfg.outcome = outcome;
      cfg.family = resi::parse_family(family);
      cfg.terms = resi::parse_terms(terms);
      if (!cov.empty()) cfg.cov = resi::parse_cov_mode(cov);
      cfg.alpha = alpha;
      cfg.bootstrap = bootstrap;
      cfg.seed = seed;
      cfg.threads = threads;
      const auto data = resi::DataTable::read_csv_file(input);
      emit(out, render_report(resi::analyze(data, cfg), format));
    } else if (*simulate) {
      auto cfg = resi::sim::read_grid_file(grid);
      if (sim_seed) cfg.options.seed = *sim_seed;
      if (sim_threads) cfg.options.threads = *sim_threads;
      if (sim_reps) cfg.options.replicates = *sim_reps;
      if (dry_run) {
        std::ostringstream os;
        os << "scenarios: " << cfg.scenarios.size() << "\ncells: " << cfg.cell_count()
           << "\nreplicates per cell: " << cfg.options.replicates << '\n';
        emit(out, os.str());
        return 0;
      }
      const auto reports = resi::sim::run_grid(cfg.scenarios, cfg.options);
      for (const auto& r : reports) {
        if (!r.flagged) continue;
        std::cerr << "warning: " << r.failures << " of " << r.failures + r.replicates << " replicates failed for "
                  << to_string(r.scenario.family) << ' ' << r.scenario.design_label() << " S=" << r.scenario.target_s
                  << " n=" << r.scenario.n << ' ' << resi::sim::to_string(r.estimator) << '/' << r.cov_label << '\n';
      }
      std::ostringstream os;
      resi::sim::write_csv(os, reports);
      emit(out, os.str());
    } else if (*bench) {
      const auto p = resi::parse_preset(preset);
      if (!emit_data.empty()) {
        std::ofstream f(emit_data, std::ios::binary);
        if (!f) throw resi::Error(resi::ErrorKind::Io, "cannot write '" + emit_data + "'");
        resi::benchmark_case(p, seed).data.write_csv(f);
      }
      emit(out, render_benchmark(resi::run_benchmark(p, bench_b, seed, threads), format));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

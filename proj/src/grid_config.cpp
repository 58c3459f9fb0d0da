#include "resi/grid_config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "resi/error.hpp"

namespace resi::sim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(resi::ErrorKind::Config, "grid line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) fail(line, "invalid number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, "invalid number '" + s + "'");
  }
}

long long to_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) fail(line, "invalid integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, "invalid integer '" + s + "'");
  }
}

struct Block {
  int line = 0;
  std::map<std::string, std::vector<std::string>> values;
};

void expand(const Block& b, std::vector<Scenario>& out) {
  auto need = [&](const std::string& key) -> const std::vector<std::string>& {
    auto it = b.values.find(key);
    if (it == b.values.end() || it->second.empty()) fail(b.line, "scenario block is missing '" + key + "'");
    return it->second;
  };
  for (const auto& [key, _] : b.values) {
    if (key != "family" && key != "errors" && key != "eta" && key != "target_s" && key != "n" && key != "cov" &&
        key != "estimators") {
      fail(b.line, "unknown scenario key '" + key + "'");
    }
  }

  const auto& fam = need("family");
  if (fam.size() != 1) fail(b.line, "one family per scenario block");
  Family family;
  try {
    family = parse_family(fam[0]);
  } catch (const Error& e) {
    fail(b.line, e.what());
  }

  std::vector<ErrorKind> errors{ErrorKind::Normal};
  std::vector<double> etas{0.0};
  if (family == Family::Linear) {
    if (b.values.count("eta")) fail(b.line, "'eta' applies to logistic scenarios");
    errors.clear();
    for (const auto& e : need("errors")) {
      try {
        errors.push_back(parse_error_kind(e));
      } catch (const Error& err) {
        fail(b.line, err.what());
      }
    }
  } else {
    if (b.values.count("errors")) fail(b.line, "'errors' applies to linear scenarios");
    etas.clear();
    for (const auto& e : need("eta")) etas.push_back(to_double(e, b.line));
  }

  std::vector<double> targets;
  for (const auto& t : need("target_s")) {
    const double v = to_double(t, b.line);
    if (!(v >= 0.0)) fail(b.line, "target_s must be nonnegative");
    targets.push_back(v);
  }
  std::vector<int> ns;
  for (const auto& t : need("n")) {
    const long long v = to_int(t, b.line);
    if (v < 10 || v > 100000000) fail(b.line, "n must be at least 10");
    ns.push_back(static_cast<int>(v));
  }

  std::vector<CovMode> modes;
  if (b.values.count("cov")) {
    for (const auto& c : b.values.at("cov")) {
      try {
        modes.push_back(parse_cov_mode(c));
      } catch (const Error& e) {
        fail(b.line, e.what());
      }
      if (family == Family::Logistic && modes.back() == CovMode::HC3) fail(b.line, "hc3 is linear only");
    }
  } else {
    modes.push_back(default_cov_mode(family));
  }

  std::vector<EstimatorKind> estimators;
  if (b.values.count("estimators")) {
    for (const auto& e : b.values.at("estimators")) {
      try {
        estimators.push_back(parse_estimator(e));
      } catch (const Error& err) {
        fail(b.line, err.what());
      }
      const bool cohen = estimators.back() == EstimatorKind::CohenF || estimators.back() == EstimatorKind::CohenD;
      if (cohen && family != Family::Linear) fail(b.line, "Cohen indices require the linear family");
    }
  } else {
    estimators = {EstimatorKind::ResiUnsigned, EstimatorKind::ResiSigned};
  }

  for (auto e : errors) {
    for (double eta : etas) {
      for (double t : targets) {
        for (int n : ns) {
          Scenario s;
          s.family = family;
          s.errors = e;
          s.eta = eta;
          s.target_s = t;
          s.n = n;
          s.cov_modes = modes;
          s.estimators = estimators;
          out.push_back(std::move(s));
        }
      }
    }
  }
}

}  // namespace

std::size_t GridConfig::cell_count() const {
  std::size_t total = 0;
  for (const auto& s : scenarios) total += s.cov_modes.size();
  return total;
}

GridConfig parse_grid(const std::string& text) {
  GridConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool in_block = false;
  bool seen_block = false;
  Block block;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s == "scenario") {
      if (in_block) fail(line, "nested scenario block");
      in_block = seen_block = true;
      block = Block{line, {}};
      continue;
    }
    if (s == "end") {
      if (!in_block) fail(line, "'end' outside a scenario block");
      expand(block, cfg.scenarios);
      in_block = false;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (in_block) {
      if (block.values.count(key)) fail(line, "duplicate key '" + key + "'");
      block.values[key] = split_list(value);
      continue;
    }
    if (seen_block) fail(line, "global keys must precede scenario blocks");
    if (key == "seed") {
      const long long v = to_int(value, line);
      if (v < 0) fail(line, "seed must be nonnegative");
      cfg.options.seed = static_cast<std::uint64_t>(v);
    } else if (key == "replicates") {
      const long long v = to_int(value, line);
      if (v < 10) fail(line, "replicates must be at least 10");
      cfg.options.replicates = static_cast<int>(v);
    } else if (key == "threads") {
      const long long v = to_int(value, line);
      if (v < 1) fail(line, "threads must be positive");
      cfg.options.threads = static_cast<int>(v);
    } else if (key == "alpha") {
      const double v = to_double(value, line);
      if (!(v > 0.0 && v < 1.0)) fail(line, "alpha must lie in (0, 1)");
      cfg.options.alpha = v;
    } else {
      fail(line, "unknown key '" + key + "'");
    }
  }
  if (in_block) fail(line, "unterminated scenario block");
  if (cfg.scenarios.empty()) throw Error(resi::ErrorKind::Config, "grid defines no scenarios");
  return cfg;
}

GridConfig read_grid_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(resi::ErrorKind::Io, "cannot open grid file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_grid(ss.str());
}

}  // namespace resi::sim

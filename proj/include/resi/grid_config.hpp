#pragma once

#include <string>
#include <vector>

#include "resi/simlab.hpp"

namespace resi::sim {

/// Parsed simulation grid. The text format is line based:
///
///   # comment
///   seed = 20240601
///   replicates = 1000
///   threads = 4
///   alpha = 0.05
///
///   scenario
///   family = linear
///   errors = normal, gamma, hetero
///   target_s = 0, 0.25, 0.5
///   n = 100, 400
///   cov = hc3, model
///   estimators = resi-unsigned, resi-signed, cohen-f
///   end
///
/// Inside a block every key takes a comma-separated list and the block
/// expands to the cartesian product of its lists. Logistic blocks use `eta`
/// in place of `errors`. Global keys must precede the first block.
struct GridConfig {
  GridOptions options;
  std::vector<Scenario> scenarios;

  /// Scenario count times covariance modes.
  std::size_t cell_count() const;
};

GridConfig parse_grid(const std::string& text);
GridConfig read_grid_file(const std::string& path);

}  // namespace resi::sim

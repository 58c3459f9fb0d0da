#pragma once

#include <Eigen/Dense>
#include <set>
#include <string>
#include <vector>

#include "resi/table.hpp"

namespace resi {

enum class TermKind { Numeric, Binary, Spline, Interaction };

/// One model term. `column` names the source data column for numeric,
/// binary and spline terms; `left`/`right` name the parent terms of an
/// interaction.
struct TermSpec {
  std::string name;
  TermKind kind = TermKind::Numeric;
  std::string column;
  int df = 0;
  std::string left;
  std::string right;

  static TermSpec numeric(const std::string& column);
  static TermSpec binary(const std::string& column);
  static TermSpec spline(const std::string& column, int df);
  static TermSpec interaction(const std::string& left, const std::string& right);

  /// True when `term` is this term or one of its interaction parents.
  bool involves(const std::string& term) const;
};

/// Parses a comma-separated term list, e.g.
/// "binary(sex), binary(dx), ns(age,3), dx:ns(age,3)". A bare identifier is
/// a numeric term.
std::vector<TermSpec> parse_terms(const std::string& spec);

/// Natural cubic spline basis with boundary knots at the data range and
/// df-1 interior knots at equally spaced sample quantiles. Basis columns are
/// linear outside the boundary knots. The constant function is excluded so
/// that the basis pairs with a separate intercept.
class NaturalSplineBasis {
 public:
  NaturalSplineBasis() = default;
  static NaturalSplineBasis fit(const Eigen::VectorXd& x, int df);

  /// Evaluates the basis at arbitrary points, including outside the knots.
  Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;

  int df() const { return df_; }
  /// Knots on the original scale, boundary knots first and last.
  const std::vector<double>& knots() const { return knots_; }

 private:
  int df_ = 0;
  std::vector<double> knots_;
};

/// Basis of x at its own sample points.
Eigen::MatrixXd natural_spline_basis(const Eigen::VectorXd& x, int df);

struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> column_terms;  // term name per column
  std::vector<std::string> column_names;  // display label per column
  std::vector<TermSpec> terms;            // declaration order, intercept excluded

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index m() const { return X.cols(); }
  /// Column indices belonging to `term`, ascending.
  std::vector<Eigen::Index> columns_of(const std::string& term) const;
  bool has_term(const std::string& term) const;
  /// Rows resampled by index; knots and columns are kept as built.
  DesignMatrix select_rows(const std::vector<std::size_t>& rows) const;
};

inline constexpr const char* kInterceptName = "(Intercept)";

/// Intercept first, then term blocks in declaration order.
DesignMatrix build_design(const DataTable& data, const std::vector<TermSpec>& terms);

/// Coordinate-selection contrast. Stored as selected column indices so the
/// same contrast can be materialized against a parameter vector that carries
/// an extra dispersion entry.
struct ContrastMatrix {
  std::vector<Eigen::Index> columns;

  Eigen::Index m1() const { return static_cast<Eigen::Index>(columns.size()); }
  /// m1 x width 0/1 selector.
  Eigen::MatrixXd matrix(Eigen::Index width) const;
};

ContrastMatrix contrast_for_terms(const DesignMatrix& design, const std::set<std::string>& tested);
/// Single-coefficient contrast for column `col` (never the intercept).
ContrastMatrix contrast_for_column(const DesignMatrix& design, Eigen::Index col);

}  // namespace resi

#include "resi/design.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "resi/error.hpp"

namespace resi {

namespace {

std::string strip_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

// Splits on `sep` outside parentheses.
std::vector<std::string> split_top_level(const std::string& s, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

TermSpec parse_single(const std::string& item) {
  const auto open = item.find('(');
  if (open == std::string::npos) {
    if (item.empty()) throw Error(ErrorKind::Schema, "empty term in term list");
    return TermSpec::numeric(item);
  }
  if (item.back() != ')') throw Error(ErrorKind::Schema, "malformed term '" + item + "'");
  const std::string fn = item.substr(0, open);
  const auto args = split_top_level(item.substr(open + 1, item.size() - open - 2), ',');
  if (fn == "numeric" && args.size() == 1) return TermSpec::numeric(args[0]);
  if (fn == "binary" && args.size() == 1) return TermSpec::binary(args[0]);
  if ((fn == "ns" || fn == "spline") && args.size() == 2) {
    int df = 0;
    try {
      df = std::stoi(args[1]);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Schema, "spline df must be an integer in '" + item + "'");
    }
    return TermSpec::spline(args[0], df);
  }
  throw Error(ErrorKind::Schema, "unrecognized term '" + item + "'");
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

double cube_pos(double v) { return v > 0.0 ? v * v * v : 0.0; }

}  // namespace

TermSpec TermSpec::numeric(const std::string& column) {
  return TermSpec{column, TermKind::Numeric, column, 0, {}, {}};
}

TermSpec TermSpec::binary(const std::string& column) {
  return TermSpec{column, TermKind::Binary, column, 0, {}, {}};
}

TermSpec TermSpec::spline(const std::string& column, int df) {
  if (df < 1) throw Error(ErrorKind::Schema, "spline df must be >= 1");
  return TermSpec{"ns(" + column + "," + std::to_string(df) + ")", TermKind::Spline, column, df,
                  {}, {}};
}

TermSpec TermSpec::interaction(const std::string& left, const std::string& right) {
  return TermSpec{left + ":" + right, TermKind::Interaction, {}, 0, left, right};
}

bool TermSpec::involves(const std::string& term) const {
  return name == term || (kind == TermKind::Interaction && (left == term || right == term));
}

std::vector<TermSpec> parse_terms(const std::string& spec) {
  std::vector<TermSpec> terms;
  for (const auto& raw : split_top_level(strip_spaces(spec), ',')) {
    if (raw.empty()) continue;
    const auto sides = split_top_level(raw, ':');
    if (sides.size() == 1) {
      terms.push_back(parse_single(raw));
    } else if (sides.size() == 2) {
      terms.push_back(TermSpec::interaction(sides[0], sides[1]));
    } else {
      throw Error(ErrorKind::Schema, "only two-way interactions are supported: '" + raw + "'");
    }
  }
  if (terms.empty()) throw Error(ErrorKind::Schema, "empty term list");
  return terms;
}

NaturalSplineBasis NaturalSplineBasis::fit(const Eigen::VectorXd& x, int df) {
  if (df < 1) throw Error(ErrorKind::KnotPlacement, "spline df must be >= 1");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < df + 1) {
    throw Error(ErrorKind::KnotPlacement, "need at least " + std::to_string(df + 1) +
                                              " distinct values, have " + std::to_string(distinct));
  }
  sorted.assign(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());

  NaturalSplineBasis basis;
  basis.df_ = df;
  basis.knots_.push_back(sorted.front());
  for (int j = 1; j < df; ++j) basis.knots_.push_back(quantile_type7(sorted, double(j) / df));
  basis.knots_.push_back(sorted.back());
  for (std::size_t k = 1; k < basis.knots_.size(); ++k) {
    if (!(basis.knots_[k] > basis.knots_[k - 1])) {
      throw Error(ErrorKind::KnotPlacement, "tied quantiles produce coincident knots");
    }
  }
  return basis;
}

// Truncated-power form of the natural cubic spline space on the rescaled
// axis u = (x - lo) / (hi - lo):
//   N_1 = u,  N_{k+1} = d_k - d_{K-1},  d_k = ((u - t_k)^3_+ - (u - t_K)^3_+) / (t_K - t_k).
Eigen::MatrixXd NaturalSplineBasis::evaluate(const Eigen::VectorXd& x) const {
  const double lo = knots_.front();
  const double span = knots_.back() - lo;
  const auto K = knots_.size();
  std::vector<double> t(K);
  for (std::size_t k = 0; k < K; ++k) t[k] = (knots_[k] - lo) / span;

  auto d = [&](std::size_t k, double u) {
    return (cube_pos(u - t[k]) - cube_pos(u - t[K - 1])) / (t[K - 1] - t[k]);
  };

  Eigen::MatrixXd B(x.size(), df_);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = (x[i] - lo) / span;
    B(i, 0) = u;
    for (int k = 0; k + 1 < df_; ++k) B(i, k + 1) = d(k, u) - d(K - 2, u);
  }
  return B;
}

Eigen::MatrixXd natural_spline_basis(const Eigen::VectorXd& x, int df) {
  return NaturalSplineBasis::fit(x, df).evaluate(x);
}

std::vector<Eigen::Index> DesignMatrix::columns_of(const std::string& term) const {
  std::vector<Eigen::Index> cols;
  for (std::size_t j = 0; j < column_terms.size(); ++j) {
    if (column_terms[j] == term) cols.push_back(static_cast<Eigen::Index>(j));
  }
  return cols;
}

bool DesignMatrix::has_term(const std::string& term) const {
  return std::find(column_terms.begin(), column_terms.end(), term) != column_terms.end();
}

DesignMatrix DesignMatrix::select_rows(const std::vector<std::size_t>& rows) const {
  DesignMatrix out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  out.column_terms = column_terms;
  out.column_names = column_names;
  out.terms = terms;
  return out;
}

DesignMatrix build_design(const DataTable& data, const std::vector<TermSpec>& terms) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  struct Block {
    Eigen::MatrixXd cols;
    std::vector<std::string> labels;
  };
  std::map<std::string, Block> blocks;
  std::vector<std::string> order;

  auto source = [&](const TermSpec& t) {
    const auto& col = data.column(t.column);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(col[static_cast<std::size_t>(i)])) {
        throw Error(ErrorKind::Schema, "missing value in column '" + t.column + "'");
      }
      v[i] = col[static_cast<std::size_t>(i)];
    }
    return v;
  };

  for (const auto& t : terms) {
    if (blocks.contains(t.name)) throw Error(ErrorKind::Schema, "duplicate term '" + t.name + "'");
    Block b;
    switch (t.kind) {
      case TermKind::Numeric:
        b.cols = source(t);
        b.labels = {t.name};
        break;
      case TermKind::Binary: {
        b.cols = source(t);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (b.cols(i, 0) != 0.0 && b.cols(i, 0) != 1.0) {
            throw Error(ErrorKind::Schema, "binary column '" + t.column + "' must be coded 0/1");
          }
        }
        b.labels = {t.name};
        break;
      }
      case TermKind::Spline: {
        b.cols = natural_spline_basis(source(t), t.df);
        for (int k = 1; k <= t.df; ++k) b.labels.push_back(t.name + std::to_string(k));
        break;
      }
      case TermKind::Interaction: {
        const auto l = blocks.find(t.left);
        const auto r = blocks.find(t.right);
        if (l == blocks.end() || r == blocks.end()) {
          throw Error(ErrorKind::Schema,
                      "interaction '" + t.name + "' must reference previously declared terms");
        }
        const auto& L = l->second;
        const auto& R = r->second;
        b.cols.resize(n, L.cols.cols() * R.cols.cols());
        Eigen::Index c = 0;
        for (Eigen::Index a = 0; a < L.cols.cols(); ++a) {
          for (Eigen::Index bb = 0; bb < R.cols.cols(); ++bb, ++c) {
            b.cols.col(c) = L.cols.col(a).cwiseProduct(R.cols.col(bb));
            b.labels.push_back(L.labels[a] + ":" + R.labels[bb]);
          }
        }
        break;
      }
    }
    blocks.emplace(t.name, std::move(b));
    order.push_back(t.name);
  }

  Eigen::Index m = 1;
  for (const auto& name : order) m += blocks.at(name).cols.cols();
  if (n <= m) {
    throw Error(ErrorKind::DegenerateDesign,
                "need more rows than parameters (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
  }

  DesignMatrix d;
  d.X.resize(n, m);
  d.X.col(0).setOnes();
  d.column_terms.push_back(kInterceptName);
  d.column_names.push_back(kInterceptName);
  Eigen::Index c = 1;
  for (const auto& name : order) {
    const auto& b = blocks.at(name);
    for (Eigen::Index j = 0; j < b.cols.cols(); ++j, ++c) {
      const auto col = b.cols.col(j);
      if (col.maxCoeff() - col.minCoeff() == 0.0) {
        throw Error(ErrorKind::DegenerateDesign, "column '" + b.labels[j] + "' is constant");
      }
      d.X.col(c) = col;
      d.column_terms.push_back(name);
      d.column_names.push_back(b.labels[j]);
    }
  }
  d.terms = terms;
  return d;
}

Eigen::MatrixXd ContrastMatrix::matrix(Eigen::Index width) const {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(m1(), width);
  for (Eigen::Index r = 0; r < m1(); ++r) L(r, columns[static_cast<std::size_t>(r)]) = 1.0;
  return L;
}

ContrastMatrix contrast_for_terms(const DesignMatrix& design, const std::set<std::string>& tested) {
  if (tested.empty()) throw Error(ErrorKind::Lookup, "empty hypothesis: no tested terms");
  ContrastMatrix L;
  for (const auto& term : tested) {
    if (term == kInterceptName) throw Error(ErrorKind::Lookup, "the intercept is never tested");
    if (!design.has_term(term)) throw Error(ErrorKind::Lookup, "unknown term '" + term + "'");
  }
  for (std::size_t j = 0; j < design.column_terms.size(); ++j) {
    if (tested.contains(design.column_terms[j])) L.columns.push_back(static_cast<Eigen::Index>(j));
  }
  return L;
}

ContrastMatrix contrast_for_column(const DesignMatrix& design, Eigen::Index col) {
  if (col <= 0 || col >= design.m()) throw Error(ErrorKind::Lookup, "column index out of range");
  return ContrastMatrix{{col}};
}

}  // namespace resi

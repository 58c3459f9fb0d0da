#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace resi {

/// Column-oriented numeric table. Column order follows the CSV header.
class DataTable {
 public:
  DataTable() = default;

  void add_column(const std::string& name, std::vector<double> values);
  bool has_column(const std::string& name) const;
  /// Throws Schema when absent.
  const std::vector<double>& column(const std::string& name) const;
  const std::vector<std::string>& column_names() const { return order_; }
  std::size_t rows() const { return rows_; }

  /// Row subset, in the order given (duplicates allowed).
  DataTable select_rows(const std::vector<std::size_t>& rows) const;

  static DataTable read_csv(std::istream& in);
  static DataTable read_csv_file(const std::string& path);
  void write_csv(std::ostream& out) const;

 private:
  std::map<std::string, std::vector<double>> columns_;
  std::vector<std::string> order_;
  std::size_t rows_ = 0;
};

}  // namespace resi

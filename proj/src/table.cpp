#include "resi/table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "resi/error.hpp"

namespace resi {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void DataTable::add_column(const std::string& name, std::vector<double> values) {
  if (!order_.empty() && values.size() != rows_) {
    throw Error(ErrorKind::Schema, "column '" + name + "' has " + std::to_string(values.size()) +
                                       " rows, expected " + std::to_string(rows_));
  }
  if (columns_.contains(name)) throw Error(ErrorKind::Schema, "duplicate column '" + name + "'");
  rows_ = values.size();
  columns_.emplace(name, std::move(values));
  order_.push_back(name);
}

bool DataTable::has_column(const std::string& name) const { return columns_.contains(name); }

const std::vector<double>& DataTable::column(const std::string& name) const {
  const auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorKind::Schema, "missing column '" + name + "'");
  return it->second;
}

DataTable DataTable::select_rows(const std::vector<std::size_t>& rows) const {
  DataTable out;
  for (const auto& name : order_) {
    const auto& src = columns_.at(name);
    std::vector<double> v;
    v.reserve(rows.size());
    for (auto r : rows) v.push_back(src.at(r));
    out.add_column(name, std::move(v));
  }
  return out;
}

DataTable DataTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Schema, "empty CSV input");
  const auto header = split_line(line);
  std::vector<std::vector<double>> cols(header.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::Schema, "line " + std::to_string(lineno) + ": expected " +
                                         std::to_string(header.size()) + " fields");
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto& c = cells[j];
      double v = NAN;
      if (c.empty() || c == "NA" || c == "NaN") {
        v = NAN;
      } else {
        const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
        if (res.ec != std::errc{} || res.ptr != c.data() + c.size()) {
          throw Error(ErrorKind::Schema, "line " + std::to_string(lineno) + ", column '" +
                                             header[j] + "': non-numeric value '" + c + "'");
        }
      }
      cols[j].push_back(v);
    }
  }
  DataTable t;
  for (std::size_t j = 0; j < header.size(); ++j) t.add_column(header[j], std::move(cols[j]));
  return t;
}

DataTable DataTable::read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return read_csv(in);
}

void DataTable::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < order_.size(); ++j) out << (j ? "," : "") << order_[j];
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < order_.size(); ++j) {
      out << (j ? "," : "") << columns_.at(order_[j])[i];
    }
    out << '\n';
  }
}

}  // namespace resi

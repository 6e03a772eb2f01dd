#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "gcp/data.hpp"

namespace gcp::data {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, const std::filesystem::path& path, std::size_t line,
                  std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    std::ostringstream os;
    os << path.string() << ":" << line << ": column " << col + 1 << ": not a finite number: '"
       << cell << "'";
    throw ParseError(os.str());
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_row(line);
      break;
    }
  }
  if (header.empty()) throw ParseError(path.string() + ": empty file");

  const bool has_mask = header.size() >= 3 && header.back() == "is_outlier";
  const std::size_t value_cols = header.size() - (has_mask ? 1 : 0);
  if (value_cols < 2) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) +
                     ": need at least one feature column and a target column");
  }

  std::vector<std::vector<double>> rows;
  std::vector<bool> mask;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      std::ostringstream os;
      os << path.string() << ":" << line_no << ": expected " << header.size()
         << " columns, found " << cells.size();
      throw ParseError(os.str());
    }
    std::vector<double> row(value_cols);
    for (std::size_t c = 0; c < value_cols; ++c) row[c] = parse_cell(cells[c], path, line_no, c);
    if (has_mask) {
      const std::string& m = cells.back();
      if (m != "0" && m != "1") {
        throw ParseError(path.string() + ":" + std::to_string(line_no) +
                         ": is_outlier must be 0 or 1");
      }
      mask.push_back(m == "1");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");

  Dataset ds;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(value_cols - 1);
  ds.features.resize(n, d);
  ds.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < d; ++c) ds.features(i, c) = row[static_cast<std::size_t>(c)];
    ds.targets(i) = row.back();
  }
  ds.feature_names.assign(header.begin(), header.begin() + d);
  ds.target_name = header[value_cols - 1];
  if (has_mask) ds.outlier_mask = std::move(mask);
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << std::setprecision(17);
  for (int c = 0; c < ds.dim(); ++c) {
    out << (ds.feature_names.empty() ? "x" + std::to_string(c)
                                     : ds.feature_names[static_cast<std::size_t>(c)])
        << ",";
  }
  out << ds.target_name;
  if (ds.outlier_mask) out << ",is_outlier";
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < ds.dim(); ++c) out << ds.features(r, c) << ",";
    out << ds.targets(r);
    if (ds.outlier_mask) out << "," << ((*ds.outlier_mask)[i] ? 1 : 0);
    out << "\n";
  }
  if (!out) throw ParseError(path.string() + ": write failed");
}

}  // namespace gcp::data

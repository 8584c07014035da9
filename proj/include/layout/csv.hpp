#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace layout {

/// Minimal CSV writer with deterministic number formatting so that identical
/// runs produce byte-identical files.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  CsvWriter& field(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    sep();
    out_ << buf;
    return *this;
  }
  CsvWriter& field(long long v) {
    sep();
    out_ << v;
    return *this;
  }
  CsvWriter& field(const std::string& v) {
    sep();
    out_ << v;
    return *this;
  }
  void endRow() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ofstream out_;
  bool first_ = true;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int columnIndex(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw std::runtime_error("missing CSV column: " + name);
  }
};

inline CsvTable readCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (header) {
      while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
      header = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace layout

#include "gse/csv.hpp"

#include "gse/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gse::csv {

std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write(const std::string& path, const std::vector<std::string>& header, const Matrix& data) {
  if (data.size() > 0 && Index(header.size()) != data.cols()) {
    throw DimensionMismatch("CSV header has " + std::to_string(header.size()) +
                            " names for " + std::to_string(data.cols()) + " columns");
  }
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    for (size_t c = 0; c < header.size(); ++c) {
      if (c) out << ',';
      out << header[c];
    }
    out << '\n';
    for (Index r = 0; r < data.rows(); ++r) {
      for (Index c = 0; c < data.cols(); ++c) {
        if (c) out << ',';
        out << format(data(r, c));
      }
      out << '\n';
    }
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

Index Table::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return Index(i);
  }
  return -1;
}

std::vector<Index> Table::prefixed_columns(const std::string& prefix) const {
  std::vector<Index> cols;
  for (int k = 1;; ++k) {
    Index c = column(prefix + std::to_string(k));
    if (c < 0) break;
    cols.push_back(c);
  }
  return cols;
}

Table read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  if (t.header.empty()) throw IoError("'" + path + "' has an empty header row");

  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ls(line);
    size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw IoError("'" + path + "' row " + std::to_string(rows + 2) +
                      ": cannot parse '" + cell + "' as a number");
      }
      values.push_back(v);
      ++c;
    }
    if (c != t.header.size()) {
      throw IoError("'" + path + "' row " + std::to_string(rows + 2) + " has " +
                    std::to_string(c) + " cells, expected " + std::to_string(t.header.size()));
    }
    ++rows;
  }
  t.data.resize(rows, Index(t.header.size()));
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < t.data.cols(); ++c) {
      t.data(r, c) = values[size_t(r) * t.header.size() + size_t(c)];
    }
  }
  return t;
}

}  // namespace gse::csv

#pragma once

#include "gse/types.hpp"

#include <string>
#include <vector>

namespace gse::csv {

/// Shortest representation that round-trips a double exactly.
std::string format(double v);

/// Writes a UTF-8 CSV with a header row; numeric cells use format().
/// The file is written to a temporary name and renamed into place.
void write(const std::string& path, const std::vector<std::string>& header, const Matrix& data);

struct Table {
  std::vector<std::string> header;
  Matrix data;

  /// Index of a named column, or -1.
  Index column(const std::string& name) const;
  /// All columns whose names share a prefix followed by a 1-based index
  /// (x1, x2, ...), in index order.
  std::vector<Index> prefixed_columns(const std::string& prefix) const;
};

Table read(const std::string& path);

}  // namespace gse::csv

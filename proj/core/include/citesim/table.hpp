#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citesim/corpus.hpp"
#include "citesim/record.hpp"

namespace citesim {

// Column-major table of doubles with named columns; missing cells are NaN.
// The regression layer and the experiment pipelines consume this.
class DataTable {
 public:
  std::size_t num_rows() const { return rows_; }
  std::size_t num_columns() const { return names_.size(); }

  bool has_column(const std::string& name) const;
  std::span<const double> column(const std::string& name) const;  // throws if absent
  const std::vector<std::string>& column_names() const { return names_; }

  void add_column(std::string name, std::vector<double> values);

  static DataTable read_csv(const std::filesystem::path& path);
  void write_csv(const std::filesystem::path& path) const;

  // Row subset, same columns.
  DataTable select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::size_t column_index(const std::string& name) const;
};

// Flattens a network plus computed records into an analysis table with
// columns id, year, journal_id, team_size, group_label, r_p, Ni, Nj, Nk, CD,
// CDnok, Rk, c_cw (and normcd when supplied). Rows cover papers with a
// defined record; optional metadata becomes NaN.
DataTable make_analysis_table(const CitationNetwork& net,
                              std::span<const DisruptionRecord> records,
                              std::span<const std::optional<double>> normcd = {});

}  // namespace citesim

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "citesim/corpus.hpp"
#include "citesim/record.hpp"

namespace citesim {

struct MissingJournal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Disruption counts for focal paper p over citation window cw. The citing
// universe is every paper q with t_p < t_q <= t_p + cw:
//   i: citers of p citing no reference of p
//   j: citers of p citing at least one reference of p
//   k: papers citing at least one reference of p but not p (each once)
// Returns nothing when p receives no in-window citations (CD undefined).
std::optional<DisruptionRecord> compute_cd(const CitationNetwork& net, NodeId p, std::int32_t window);

// One record per paper with at least one in-window citation, ordered by
// paper id. Deterministic regardless of thread count (0 = hardware default).
std::vector<DisruptionRecord> compute_cd_all(const CitationNetwork& net, std::int32_t window,
                                             unsigned n_threads = 0);

// Dense by-paper index into a record list: by_paper[p] = index or -1.
std::vector<std::int64_t> index_records_by_paper(std::span<const DisruptionRecord> records,
                                                 std::size_t num_papers);

struct YearStat {
  double mean = 0.0;
  std::int64_t papers = 0;  // supporting count
};
using YearSeries = std::map<std::int32_t, YearStat>;

// Arithmetic mean per publication year over papers with a defined record;
// years without any defined value are omitted.
YearSeries mean_cd_by_year(std::span<const DisruptionRecord> records, const CitationNetwork& net);
YearSeries mean_rk_by_year(std::span<const DisruptionRecord> records, const CitationNetwork& net);

struct NormalizationCell {
  double mean = 0.0;
  double sd = 0.0;  // sample (n-1) standard deviation
  std::int64_t count = 0;
};

struct NormalizationTable {
  // (journal_id, year) -> cell; entries exist only for observed cells.
  std::map<std::pair<std::int32_t, std::int32_t>, NormalizationCell> cells;
  // Convention used for sd, recorded for downstream reporting.
  static constexpr const char* sd_convention = "sample";

  const NormalizationCell* find(std::int32_t journal, std::int32_t year) const;
};

struct NormalizeResult {
  // One entry per paper; absent for papers without a record or in degenerate
  // (count < 2 or sd == 0) cells.
  std::vector<std::optional<double>> normcd;
  NormalizationTable table;
};

// Journal-year z-score of CD. Requires journal_id on every paper that has a
// record (throws MissingJournal otherwise).
NormalizeResult normalize_cd(std::span<const DisruptionRecord> records, const CitationNetwork& net);

}  // namespace citesim

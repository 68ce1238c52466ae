#include "citesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace citesim {

namespace {

// Generation-stamped scratch shared across focal papers; avoids clearing
// full-size arrays per paper.
struct CdScratch {
  std::vector<std::uint32_t> is_reference;
  std::vector<std::uint32_t> cites_focal;
  std::vector<std::uint32_t> counted_k;
  std::uint32_t generation = 0;

  explicit CdScratch(std::size_t n)
      : is_reference(n, 0), cites_focal(n, 0), counted_k(n, 0) {}
};

// Sorted-citer slice of q's in-list restricted to the id window [lo, hi).
std::span<const NodeId> window_slice(std::span<const NodeId> sorted, NodeId lo, NodeId hi) {
  const auto begin = std::lower_bound(sorted.begin(), sorted.end(), lo);
  const auto end = std::lower_bound(begin, sorted.end(), hi);
  return {begin, end};
}

std::optional<DisruptionRecord> compute_cd_impl(const CitationNetwork& net, NodeId p,
                                                std::int32_t window, CdScratch& scratch) {
  const std::int32_t t_p = net.year(p);
  const auto [lo, hi] = net.id_range_for_years(t_p + 1, t_p + window);
  if (lo >= hi) return std::nullopt;

  const std::uint32_t gen = ++scratch.generation;
  const auto refs = net.references(p);
  for (const NodeId r : refs) scratch.is_reference[r] = gen;

  std::int64_t n_i = 0;
  std::int64_t n_j = 0;
  for (const NodeId q : window_slice(net.citers(p), lo, hi)) {
    bool closes_triangle = false;
    for (const NodeId target : net.references(q)) {
      if (scratch.is_reference[target] == gen) {
        closes_triangle = true;
        break;
      }
    }
    closes_triangle ? ++n_j : ++n_i;
    scratch.cites_focal[q] = gen;
  }
  if (n_i + n_j == 0) return std::nullopt;

  std::int64_t n_k = 0;
  for (const NodeId r : refs) {
    for (const NodeId x : window_slice(net.citers(r), lo, hi)) {
      if (scratch.cites_focal[x] == gen || scratch.counted_k[x] == gen) continue;
      scratch.counted_k[x] = gen;
      ++n_k;
    }
  }

  DisruptionRecord rec;
  rec.paper = p;
  rec.window = window;
  rec.n_i = n_i;
  rec.n_j = n_j;
  rec.n_k = n_k;
  const auto cited = static_cast<double>(n_i + n_j);
  rec.cd = static_cast<double>(n_i - n_j) / static_cast<double>(n_i + n_j + n_k);
  rec.cd_nok = static_cast<double>(n_i - n_j) / cited;
  rec.r_k = static_cast<double>(n_k) / cited;
  return rec;
}

}  // namespace

std::optional<DisruptionRecord> compute_cd(const CitationNetwork& net, NodeId p,
                                           std::int32_t window) {
  if (p >= net.num_papers()) throw std::out_of_range("paper id out of range");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  CdScratch scratch(net.num_papers());
  return compute_cd_impl(net, p, window, scratch);
}

std::vector<DisruptionRecord> compute_cd_all(const CitationNetwork& net, std::int32_t window,
                                             unsigned n_threads) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const std::size_t n = net.num_papers();
  if (n_threads == 0) {
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  }
  n_threads = std::min<unsigned>(n_threads, 64);

  std::vector<std::optional<DisruptionRecord>> by_paper(n);
  auto worker = [&](std::size_t begin, std::size_t end) {
    CdScratch scratch(n);
    for (std::size_t p = begin; p < end; ++p) {
      by_paper[p] = compute_cd_impl(net, static_cast<NodeId>(p), window, scratch);
    }
  };

  if (n_threads <= 1 || n < 1024) {
    worker(0, n);
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (unsigned i = 0; i < n_threads; ++i) {
      const std::size_t begin = i * chunk;
      if (begin >= n) break;
      threads.emplace_back(worker, begin, std::min(n, begin + chunk));
    }
    for (auto& t : threads) t.join();
  }

  std::vector<DisruptionRecord> records;
  for (auto& rec : by_paper) {
    if (rec) records.push_back(*rec);
  }
  return records;
}

std::vector<std::int64_t> index_records_by_paper(std::span<const DisruptionRecord> records,
                                                 std::size_t num_papers) {
  std::vector<std::int64_t> index(num_papers, -1);
  for (std::size_t i = 0; i < records.size(); ++i) index[records[i].paper] = static_cast<std::int64_t>(i);
  return index;
}

namespace {

template <typename Projection>
YearSeries mean_by_year(std::span<const DisruptionRecord> records, const CitationNetwork& net,
                        Projection proj) {
  std::map<std::int32_t, std::pair<double, std::int64_t>> sums;
  for (const DisruptionRecord& rec : records) {
    auto& [sum, count] = sums[net.year(rec.paper)];
    sum += proj(rec);
    ++count;
  }
  YearSeries series;
  for (const auto& [year, sc] : sums) {
    series[year] = {sc.first / static_cast<double>(sc.second), sc.second};
  }
  return series;
}

}  // namespace

YearSeries mean_cd_by_year(std::span<const DisruptionRecord> records, const CitationNetwork& net) {
  return mean_by_year(records, net, [](const DisruptionRecord& r) { return r.cd; });
}

YearSeries mean_rk_by_year(std::span<const DisruptionRecord> records, const CitationNetwork& net) {
  return mean_by_year(records, net, [](const DisruptionRecord& r) { return r.r_k; });
}

const NormalizationCell* NormalizationTable::find(std::int32_t journal, std::int32_t year) const {
  const auto it = cells.find({journal, year});
  return it == cells.end() ? nullptr : &it->second;
}

NormalizeResult normalize_cd(std::span<const DisruptionRecord> records,
                             const CitationNetwork& net) {
  NormalizeResult result;
  result.normcd.assign(net.num_papers(), std::nullopt);

  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<double>> cell_values;
  for (const DisruptionRecord& rec : records) {
    const PaperNode& node = net.paper(rec.paper);
    if (!node.journal_id) {
      throw MissingJournal("paper " + std::to_string(rec.paper) + " has no journal_id");
    }
    cell_values[{*node.journal_id, node.year}].push_back(rec.cd);
  }

  for (const auto& [key, values] : cell_values) {
    NormalizationCell cell;
    cell.count = static_cast<std::int64_t>(values.size());
    double sum = 0.0;
    for (const double v : values) sum += v;
    cell.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
      double ss = 0.0;
      for (const double v : values) ss += (v - cell.mean) * (v - cell.mean);
      cell.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    result.table.cells[key] = cell;
  }

  constexpr double kDegenerateSd = 1e-12;
  for (const DisruptionRecord& rec : records) {
    const PaperNode& node = net.paper(rec.paper);
    const NormalizationCell& cell = result.table.cells.at({*node.journal_id, node.year});
    if (cell.count < 2 || cell.sd <= kDegenerateSd) continue;
    result.normcd[rec.paper] = (rec.cd - cell.mean) / cell.sd;
  }
  return result;
}

}  // namespace citesim

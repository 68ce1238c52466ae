#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "citesim/record.hpp"

namespace citesim {

struct MalformedRow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownId : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct YearOrderViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateEdge : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingMetadata : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PaperNode {
  std::int32_t year = 0;
  std::optional<std::int32_t> journal_id;
  std::optional<std::int32_t> team_size;  // >= 1 when present
  std::optional<std::int32_t> group_label;

  bool operator==(const PaperNode&) const = default;
};

struct Edge {
  NodeId citing = 0;
  NodeId cited = 0;

  bool operator==(const Edge&) const = default;
};

// Immutable directed acyclic citation graph over papers 0..N-1, stored as a
// pair of mutually transposed CSR adjacencies. Ids are dense and sorted
// non-decreasing by year; every edge points strictly backward in time.
// Safe for concurrent read-only access once constructed.
class CitationNetwork {
 public:
  CitationNetwork() = default;

  // Validates and compacts. Throws UnknownId, YearOrderViolation (covers
  // self-loops and same-year edges) or DuplicateEdge; nodes must already be
  // sorted non-decreasing by year or std::invalid_argument is thrown.
  static CitationNetwork from_parts(std::vector<PaperNode> nodes, std::span<const Edge> edges);

  std::size_t num_papers() const { return nodes_.size(); }
  std::size_t num_edges() const { return out_targets_.size(); }

  const PaperNode& paper(NodeId p) const { return nodes_[p]; }
  std::int32_t year(NodeId p) const { return nodes_[p].year; }

  // References of p (out-neighbours), sorted by target id.
  std::span<const NodeId> references(NodeId p) const {
    return {out_targets_.data() + out_offsets_[p],
            out_targets_.data() + out_offsets_[p + 1]};
  }
  // Citers of p (in-neighbours), sorted by source id.
  std::span<const NodeId> citers(NodeId p) const {
    return {in_sources_.data() + in_offsets_[p],
            in_sources_.data() + in_offsets_[p + 1]};
  }

  std::size_t reference_count(NodeId p) const {
    return static_cast<std::size_t>(out_offsets_[p + 1] - out_offsets_[p]);
  }
  std::size_t citation_count(NodeId p) const {
    return static_cast<std::size_t>(in_offsets_[p + 1] - in_offsets_[p]);
  }

  // First id with year >= y. Valid because ids are sorted by year.
  NodeId first_id_at_or_after(std::int32_t y) const;
  // Half-open id range of papers published in [y_lo, y_hi].
  std::pair<NodeId, NodeId> id_range_for_years(std::int32_t y_lo, std::int32_t y_hi) const;

  std::int32_t min_year() const { return nodes_.empty() ? 0 : nodes_.front().year; }
  std::int32_t max_year() const { return nodes_.empty() ? 0 : nodes_.back().year; }

  // Flat edge list in canonical order (citing ascending, cited ascending).
  std::vector<Edge> edge_list() const;

  bool operator==(const CitationNetwork& other) const;

 private:
  std::vector<PaperNode> nodes_;
  std::vector<std::int64_t> out_offsets_;  // size N+1
  std::vector<NodeId> out_targets_;
  std::vector<std::int64_t> in_offsets_;  // size N+1
  std::vector<NodeId> in_sources_;
};

struct LoadOptions {
  bool strict = false;  // abort on year-order or duplicate violations instead of dropping
};

struct LoadStats {
  std::size_t node_rows = 0;
  std::size_t edge_rows = 0;
  std::size_t dropped_year_order = 0;
  std::size_t dropped_duplicate = 0;
  bool ids_remapped = false;  // input ids were sparse or unordered
};

struct LoadedCorpus {
  CitationNetwork net;
  LoadStats stats;
  // original_ids[new_id] = id as it appeared in the input file.
  std::vector<std::int64_t> original_ids;
};

// nodes file header: id,year,journal_id,team_size,group_label (last three may
// be empty); edges file header: citing_id,cited_id. Input ids may be sparse;
// papers are reordered by (year, input id) and re-indexed densely.
LoadedCorpus load_corpus(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path,
                         const LoadOptions& options = {});

// Inverse of load_corpus for dense networks: round-trip reproduces the
// network exactly and is byte-stable.
void write_corpus(const CitationNetwork& net,
                  const std::filesystem::path& nodes_path,
                  const std::filesystem::path& edges_path);

struct IntBounds {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

// Sample-selection thresholds. Reference-list bounds always apply; team-size
// and citation bounds apply when set. The normalized-disruption bound needs a
// prior normalization pass, so it is off by default and requires the
// per-paper values to be supplied alongside.
struct CorpusFilter {
  IntBounds refs{10, 200};
  std::optional<IntBounds> team{IntBounds{1, 25}};
  std::optional<IntBounds> citations{IntBounds{1, 1000}};
  std::optional<double> normcd_abs_max{};  // conventional choice: 5.0

  void validate() const;
};

struct FilterAudit {
  std::int64_t considered = 0;
  std::int64_t retained = 0;
  // Exclusion counts per criterion; a paper violating several bounds is
  // counted under each of them.
  std::int64_t excluded_refs = 0;
  std::int64_t excluded_team = 0;
  std::int64_t excluded_citations = 0;
  std::int64_t excluded_normcd = 0;
};

struct FilterResult {
  std::vector<NodeId> retained;  // ascending ids
  FilterAudit audit;
};

// records must be indexed by compute order (one record per cited paper);
// papers without a record have zero in-window citations. normcd, when
// non-empty, must have one entry per paper. Throws MissingMetadata when a
// team-size bound is set but a paper lacks team_size.
FilterResult filter_corpus(const CitationNetwork& net,
                           std::span<const DisruptionRecord> records,
                           std::span<const std::optional<double>> normcd,
                           const CorpusFilter& filter);

}  // namespace citesim

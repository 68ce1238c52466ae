#include "citesim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "citesim/csv.hpp"

namespace citesim {

namespace {

const std::vector<std::string> kNodeHeader = {"id", "year", "journal_id", "team_size",
                                              "group_label"};
const std::vector<std::string> kEdgeHeader = {"citing_id", "cited_id"};

std::int32_t narrow32(std::int64_t v, const std::string& what, std::size_t line) {
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
    throw MalformedRow(what + " out of 32-bit range at line " + std::to_string(line));
  }
  return static_cast<std::int32_t>(v);
}

}  // namespace

CitationNetwork CitationNetwork::from_parts(std::vector<PaperNode> nodes,
                                            std::span<const Edge> edges) {
  const std::size_t n = nodes.size();
  for (std::size_t p = 1; p < n; ++p) {
    if (nodes[p].year < nodes[p - 1].year) {
      throw std::invalid_argument("nodes must be sorted non-decreasing by year");
    }
  }
  for (const auto& node : nodes) {
    if (node.team_size && *node.team_size < 1) {
      throw std::invalid_argument("team_size must be >= 1 when present");
    }
  }

  CitationNetwork net;
  net.nodes_ = std::move(nodes);
  net.out_offsets_.assign(n + 1, 0);
  net.in_offsets_.assign(n + 1, 0);

  for (const Edge& e : edges) {
    if (e.citing >= n || e.cited >= n) {
      throw UnknownId("edge endpoint out of range: " + std::to_string(e.citing) + "->" +
                      std::to_string(e.cited));
    }
    if (net.nodes_[e.cited].year >= net.nodes_[e.citing].year) {
      throw YearOrderViolation("edge " + std::to_string(e.citing) + "->" +
                               std::to_string(e.cited) + " does not point strictly backward");
    }
    ++net.out_offsets_[e.citing + 1];
    ++net.in_offsets_[e.cited + 1];
  }
  std::partial_sum(net.out_offsets_.begin(), net.out_offsets_.end(), net.out_offsets_.begin());
  std::partial_sum(net.in_offsets_.begin(), net.in_offsets_.end(), net.in_offsets_.begin());

  net.out_targets_.resize(edges.size());
  std::vector<std::int64_t> cursor(net.out_offsets_.begin(), net.out_offsets_.end() - 1);
  for (const Edge& e : edges) net.out_targets_[cursor[e.citing]++] = e.cited;

  for (std::size_t p = 0; p < n; ++p) {
    const auto begin = net.out_targets_.begin() + net.out_offsets_[p];
    const auto end = net.out_targets_.begin() + net.out_offsets_[p + 1];
    std::sort(begin, end);
    if (std::adjacent_find(begin, end) != end) {
      throw DuplicateEdge("duplicate reference from paper " + std::to_string(p));
    }
  }

  // In-adjacency: walking sources in ascending id order keeps citer lists sorted.
  net.in_sources_.resize(edges.size());
  cursor.assign(net.in_offsets_.begin(), net.in_offsets_.end() - 1);
  for (std::size_t p = 0; p < n; ++p) {
    for (const NodeId target : net.references(static_cast<NodeId>(p))) {
      net.in_sources_[cursor[target]++] = static_cast<NodeId>(p);
    }
  }
  return net;
}

NodeId CitationNetwork::first_id_at_or_after(std::int32_t y) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), y,
                                   [](const PaperNode& node, std::int32_t year) {
                                     return node.year < year;
                                   });
  return static_cast<NodeId>(it - nodes_.begin());
}

std::pair<NodeId, NodeId> CitationNetwork::id_range_for_years(std::int32_t y_lo,
                                                              std::int32_t y_hi) const {
  return {first_id_at_or_after(y_lo), first_id_at_or_after(y_hi + 1)};
}

std::vector<Edge> CitationNetwork::edge_list() const {
  std::vector<Edge> edges;
  edges.reserve(num_edges());
  for (NodeId p = 0; p < num_papers(); ++p) {
    for (const NodeId target : references(p)) edges.push_back({p, target});
  }
  return edges;
}

bool CitationNetwork::operator==(const CitationNetwork& other) const {
  return nodes_ == other.nodes_ && out_offsets_ == other.out_offsets_ &&
         out_targets_ == other.out_targets_;
}

LoadedCorpus load_corpus(const std::filesystem::path& nodes_path,
                         const std::filesystem::path& edges_path, const LoadOptions& options) {
  struct RawNode {
    std::int64_t id;
    PaperNode node;
  };
  std::vector<RawNode> raw;
  {
    csv::Reader reader(nodes_path, kNodeHeader);
    while (reader.next()) {
      RawNode rn;
      rn.id = reader.int_field(0);
      if (rn.id < 0) {
        throw MalformedRow(nodes_path.string() + ":" + std::to_string(reader.line_number()) +
                           ": negative id");
      }
      rn.node.year = narrow32(reader.int_field(1), "year", reader.line_number());
      if (const auto j = reader.optional_int_field(2)) {
        rn.node.journal_id = narrow32(*j, "journal_id", reader.line_number());
      }
      if (const auto k = reader.optional_int_field(3)) {
        if (*k < 1) {
          throw MalformedRow(nodes_path.string() + ":" + std::to_string(reader.line_number()) +
                             ": team_size must be >= 1");
        }
        rn.node.team_size = narrow32(*k, "team_size", reader.line_number());
      }
      if (const auto g = reader.optional_int_field(4)) {
        rn.node.group_label = narrow32(*g, "group_label", reader.line_number());
      }
      raw.push_back(rn);
    }
  }

  LoadedCorpus result;
  result.stats.node_rows = raw.size();

  // Dense ids sorted by (year, input id); detect whether the input already
  // had this layout so callers know when a remap table matters.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (raw[a].node.year != raw[b].node.year) return raw[a].node.year < raw[b].node.year;
    return raw[a].id < raw[b].id;
  });

  std::unordered_map<std::int64_t, NodeId> id_map;
  id_map.reserve(raw.size() * 2);
  std::vector<PaperNode> nodes;
  nodes.reserve(raw.size());
  result.original_ids.reserve(raw.size());
  for (std::size_t new_id = 0; new_id < order.size(); ++new_id) {
    const RawNode& rn = raw[order[new_id]];
    if (!id_map.emplace(rn.id, static_cast<NodeId>(new_id)).second) {
      throw MalformedRow(nodes_path.string() + ": duplicate node id " + std::to_string(rn.id));
    }
    nodes.push_back(rn.node);
    result.original_ids.push_back(rn.id);
    if (rn.id != static_cast<std::int64_t>(new_id)) result.stats.ids_remapped = true;
  }

  std::vector<Edge> edges;
  {
    csv::Reader reader(edges_path, kEdgeHeader);
    while (reader.next()) {
      ++result.stats.edge_rows;
      const std::int64_t citing_raw = reader.int_field(0);
      const std::int64_t cited_raw = reader.int_field(1);
      const auto citing_it = id_map.find(citing_raw);
      const auto cited_it = id_map.find(cited_raw);
      if (citing_it == id_map.end() || cited_it == id_map.end()) {
        throw UnknownId(edges_path.string() + ":" + std::to_string(reader.line_number()) +
                        ": unknown id " +
                        std::to_string(citing_it == id_map.end() ? citing_raw : cited_raw));
      }
      const NodeId citing = citing_it->second;
      const NodeId cited = cited_it->second;
      if (nodes[cited].year >= nodes[citing].year) {
        if (options.strict) {
          throw YearOrderViolation(edges_path.string() + ":" +
                                   std::to_string(reader.line_number()) + ": cited year " +
                                   std::to_string(nodes[cited].year) + " >= citing year " +
                                   std::to_string(nodes[citing].year));
        }
        ++result.stats.dropped_year_order;
        continue;
      }
      edges.push_back({citing, cited});
    }
  }

  // Drop (or reject) duplicate edges before handing off to validation.
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.citing != b.citing ? a.citing < b.citing : a.cited < b.cited;
  });
  const auto dup_begin = std::unique(edges.begin(), edges.end());
  const auto duplicates = static_cast<std::size_t>(edges.end() - dup_begin);
  if (duplicates > 0) {
    if (options.strict) {
      throw DuplicateEdge(edges_path.string() + ": " + std::to_string(duplicates) +
                          " duplicate edge rows");
    }
    result.stats.dropped_duplicate = duplicates;
    edges.erase(dup_begin, edges.end());
  }

  result.net = CitationNetwork::from_parts(std::move(nodes), edges);
  return result;
}

void write_corpus(const CitationNetwork& net, const std::filesystem::path& nodes_path,
                  const std::filesystem::path& edges_path) {
  csv::Writer nodes_out(nodes_path, kNodeHeader);
  for (NodeId p = 0; p < net.num_papers(); ++p) {
    const PaperNode& node = net.paper(p);
    nodes_out.field(static_cast<std::int64_t>(p)).field(static_cast<std::int64_t>(node.year));
    node.journal_id ? nodes_out.field(static_cast<std::int64_t>(*node.journal_id))
                    : nodes_out.empty_field();
    node.team_size ? nodes_out.field(static_cast<std::int64_t>(*node.team_size))
                   : nodes_out.empty_field();
    node.group_label ? nodes_out.field(static_cast<std::int64_t>(*node.group_label))
                     : nodes_out.empty_field();
    nodes_out.end_row();
  }

  csv::Writer edges_out(edges_path, kEdgeHeader);
  for (NodeId p = 0; p < net.num_papers(); ++p) {
    for (const NodeId target : net.references(p)) {
      edges_out.field(static_cast<std::int64_t>(p)).field(static_cast<std::int64_t>(target));
      edges_out.end_row();
    }
  }
}

void CorpusFilter::validate() const {
  if (refs.lo > refs.hi) throw std::invalid_argument("refs bounds inverted");
  if (team && team->lo > team->hi) throw std::invalid_argument("team bounds inverted");
  if (citations && citations->lo > citations->hi) {
    throw std::invalid_argument("citation bounds inverted");
  }
  if (normcd_abs_max && *normcd_abs_max <= 0.0) {
    throw std::invalid_argument("normcd_abs_max must be > 0");
  }
}

FilterResult filter_corpus(const CitationNetwork& net, std::span<const DisruptionRecord> records,
                           std::span<const std::optional<double>> normcd,
                           const CorpusFilter& filter) {
  filter.validate();
  if (!normcd.empty() && normcd.size() != net.num_papers()) {
    throw std::invalid_argument("normcd must be empty or have one entry per paper");
  }
  if (filter.normcd_abs_max && normcd.empty()) {
    throw std::invalid_argument("normcd values required when normcd_abs_max is set");
  }

  std::vector<std::int64_t> citations_by_paper(net.num_papers(), 0);
  for (const DisruptionRecord& rec : records) citations_by_paper[rec.paper] = rec.citations();

  FilterResult result;
  result.audit.considered = static_cast<std::int64_t>(net.num_papers());
  for (NodeId p = 0; p < net.num_papers(); ++p) {
    bool keep = true;
    const auto r_p = static_cast<std::int64_t>(net.reference_count(p));
    if (r_p < filter.refs.lo || r_p > filter.refs.hi) {
      ++result.audit.excluded_refs;
      keep = false;
    }
    if (filter.team) {
      const auto& k_p = net.paper(p).team_size;
      if (!k_p) {
        throw MissingMetadata("paper " + std::to_string(p) +
                              " lacks team_size required by the filter");
      }
      if (*k_p < filter.team->lo || *k_p > filter.team->hi) {
        ++result.audit.excluded_team;
        keep = false;
      }
    }
    if (filter.citations) {
      const std::int64_t c = citations_by_paper[p];
      if (c < filter.citations->lo || c > filter.citations->hi) {
        ++result.audit.excluded_citations;
        keep = false;
      }
    }
    if (filter.normcd_abs_max && normcd[p] && std::abs(*normcd[p]) > *filter.normcd_abs_max) {
      ++result.audit.excluded_normcd;
      keep = false;
    }
    if (keep) result.retained.push_back(p);
  }
  result.audit.retained = static_cast<std::int64_t>(result.retained.size());
  return result;
}

}  // namespace citesim

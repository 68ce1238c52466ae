#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citesim/corpus.hpp"
#include "citesim/rng.hpp"

namespace citesim {

enum class Rounding { Floor, Round };

// Stochastic growth-and-redirection network generator with exponentially
// growing cohort sizes n(t) and reference-list lengths r(t).
struct GrowthConfig {
  std::int64_t n1 = 30;       // papers in period 1
  std::int64_t r1 = 5;        // references per paper in period 1
  double g_n = 0.033;         // annual publication growth rate
  double g_r = 0.018;         // annual reference-list growth rate
  std::int32_t periods = 150;                   // T
  std::optional<std::int32_t> quench_period;    // T*: freeze r(t) at r(T*) from T* on
  double beta = 0.3;          // redirection probability per reference slot
  double tau = 20.0;          // recency decay scale, in periods (may be +inf)
  double c0 = 20.0;           // attachment offset, in citations
  std::uint64_t seed = 0;
  Rounding rounding = Rounding::Floor;

  void validate() const;  // throws std::invalid_argument

  static GrowthConfig from_file(const std::filesystem::path& path);  // JSON or key=value
  static GrowthConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct GrowthSchedule {
  std::vector<std::int64_t> papers;  // n(t), index t-1
  std::vector<std::int64_t> refs;    // r(t)

  std::int64_t total_papers() const;
  // Total edges once per-period reference lists are capped by pool size.
  std::int64_t total_edges() const;
};

// Deterministic: n(t) = rounding(n1 * exp(g_n * (t-1))), r(t) likewise from
// r1 and g_r, with r(t) frozen at r(T*) for t >= T* when quenched.
GrowthSchedule build_schedule(const GrowthConfig& cfg);

// Attachment-weight snapshot over the pool of papers published before a given
// period. Weight of pool paper q: (indegree(q) + c0) * exp(-(t - t_q)/tau).
// Each reference slot is filled by direct citation with probability 1-beta
// (weighted draw over the pool) or by redirection with probability beta: a
// uniformly chosen already-selected target contributes one of its own
// references, falling back to direct citation when it has none left to give
// or when nothing has been selected yet. Selected targets are distinct.
class ReferenceSampler {
 public:
  ReferenceSampler(const GrowthConfig& cfg, std::int32_t period,
                   std::span<const std::int32_t> pool_period,
                   std::span<const std::int64_t> pool_indegree,
                   std::span<const std::int64_t> ref_offsets,
                   std::span<const NodeId> ref_targets);

  // Appends min(count, pool) distinct target ids to out.
  void pick(std::int64_t count, Rng& rng, std::vector<NodeId>& out);

  std::size_t pool_size() const { return cumulative_weight_.size(); }
  double total_weight() const { return cumulative_weight_.empty() ? 0.0 : cumulative_weight_.back(); }

 private:
  NodeId sample_direct(Rng& rng) const;
  bool is_selected(NodeId q) const { return selected_mark_[q] == generation_; }

  double beta_;
  std::vector<double> cumulative_weight_;
  std::span<const std::int64_t> ref_offsets_;
  std::span<const NodeId> ref_targets_;
  std::vector<std::uint32_t> selected_mark_;
  std::uint32_t generation_ = 0;
  std::vector<NodeId> selected_;
  std::vector<NodeId> candidates_;
};

// Convenience wrapper matching the sampler semantics for a standalone pool.
std::vector<NodeId> pick_references(const GrowthConfig& cfg, std::int32_t period,
                                    std::int64_t count,
                                    std::span<const std::int32_t> pool_period,
                                    std::span<const std::int64_t> pool_indegree,
                                    std::span<const std::int64_t> ref_offsets,
                                    std::span<const NodeId> ref_targets, Rng& rng);

// Grows the full network. Period t adds n(t) nodes, each drawing
// min(r(t), pool) distinct references from strictly earlier nodes; the
// period-1 cohort has empty reference lists. Attachment weights are frozen at
// the start of each period. Bit-for-bit reproducible for a given config.
CitationNetwork grow(const GrowthConfig& cfg);

}  // namespace citesim

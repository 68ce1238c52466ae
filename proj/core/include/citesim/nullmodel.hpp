#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "citesim/corpus.hpp"
#include "citesim/record.hpp"

namespace citesim {

struct RewireConfig {
  // Total double-edge-swap proposals; 0 means 10x the edge count.
  std::int64_t swap_attempts = 0;
  std::uint64_t seed = 0;

  std::int64_t attempts_for(std::size_t num_edges) const {
    return swap_attempts > 0 ? swap_attempts : static_cast<std::int64_t>(10 * num_edges);
  }
};

struct RewireResult {
  CitationNetwork net;
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  // Edges of the rewired network absent from the original (mixing measure).
  std::int64_t hamming_from_original = 0;
};

// Degree-preserving, time-respecting randomization by repeated double-edge
// swaps (a->b, c->d) => (a->d, c->b). A proposal is accepted only when both
// new edges still point strictly backward in time and neither already exists;
// rejected proposals are skipped. In- and out-degree of every node are
// preserved exactly.
RewireResult rewire(const CitationNetwork& net, const RewireConfig& cfg);

// Expected disruption of a degree-preserving randomization that destroys all
// triadic closure: 1 / (1 + R_k). Strictly positive, decreasing in R_k.
double expected_cd_rand(const DisruptionRecord& record);

struct ZScoreResult {
  NodeId paper = 0;
  double cd = 0.0;
  double mean_rand = 0.0;
  double sd_rand = 0.0;
  // Absent when sd_rand == 0 or fewer than two replicas define CD for p.
  std::optional<double> z;
  std::int32_t defined_replicas = 0;
};

// Recomputes CD for p on n_rewires independently rewired replicas and scores
// the observed value against their sample mean/sd. Replica seeds derive from
// cfg.seed + replica index.
ZScoreResult z_score(const CitationNetwork& net, NodeId p, std::int32_t window,
                     std::int32_t n_rewires, const RewireConfig& cfg);

// Mixing diagnostics of one rewired replica.
struct ReplicaStats {
  std::uint64_t seed = 0;
  std::int64_t proposed = 0;
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t hamming_from_original = 0;
};

// Batch variant sharing the rewired replicas across all papers with a defined
// CD in the original network. Per-replica mixing stats are collected when a
// sink is supplied.
std::vector<ZScoreResult> z_scores_all(const CitationNetwork& net, std::int32_t window,
                                       std::int32_t n_rewires, const RewireConfig& cfg,
                                       std::vector<ReplicaStats>* replica_stats = nullptr);

}  // namespace citesim

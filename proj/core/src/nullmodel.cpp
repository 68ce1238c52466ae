#include "citesim/nullmodel.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "citesim/metrics.hpp"
#include "citesim/rng.hpp"

namespace citesim {

namespace {

std::uint64_t pack(NodeId citing, NodeId cited) {
  return (static_cast<std::uint64_t>(citing) << 32) | cited;
}

}  // namespace

RewireResult rewire(const CitationNetwork& net, const RewireConfig& cfg) {
  std::vector<Edge> edges = net.edge_list();
  const std::size_t m = edges.size();

  RewireResult result;
  if (m < 2) {
    result.net = net;
    return result;
  }

  std::unordered_set<std::uint64_t> present;
  present.reserve(m * 2);
  for (const Edge& e : edges) present.insert(pack(e.citing, e.cited));

  Rng rng(cfg.seed);
  const std::int64_t attempts = cfg.attempts_for(m);
  for (std::int64_t attempt = 0; attempt < attempts; ++attempt) {
    ++result.proposed;
    const auto e1 = static_cast<std::size_t>(rng.next_index(m));
    const auto e2 = static_cast<std::size_t>(rng.next_index(m));
    Edge& first = edges[e1];
    Edge& second = edges[e2];
    // (a->b, c->d) => (a->d, c->b); sources keep their out-degree, targets
    // keep their in-degree.
    const NodeId a = first.citing, b = first.cited;
    const NodeId c = second.citing, d = second.cited;
    if (e1 == e2 || a == c || b == d ||
        net.year(d) >= net.year(a) || net.year(b) >= net.year(c) ||
        present.contains(pack(a, d)) || present.contains(pack(c, b))) {
      ++result.rejected;
      continue;
    }
    present.erase(pack(a, b));
    present.erase(pack(c, d));
    present.insert(pack(a, d));
    present.insert(pack(c, b));
    first.cited = d;
    second.cited = b;
    ++result.accepted;
  }

  std::int64_t unchanged = 0;
  for (const Edge& e : net.edge_list()) {
    if (present.contains(pack(e.citing, e.cited))) ++unchanged;
  }
  result.hamming_from_original = static_cast<std::int64_t>(m) - unchanged;

  std::vector<PaperNode> nodes;
  nodes.reserve(net.num_papers());
  for (NodeId p = 0; p < net.num_papers(); ++p) nodes.push_back(net.paper(p));
  result.net = CitationNetwork::from_parts(std::move(nodes), edges);
  return result;
}

double expected_cd_rand(const DisruptionRecord& record) {
  return 1.0 / (1.0 + record.r_k);
}

namespace {

ZScoreResult score_from_samples(NodeId p, double observed_cd, std::span<const double> samples) {
  ZScoreResult result;
  result.paper = p;
  result.cd = observed_cd;
  result.defined_replicas = static_cast<std::int32_t>(samples.size());
  if (samples.empty()) return result;

  double sum = 0.0;
  for (const double v : samples) sum += v;
  result.mean_rand = sum / static_cast<double>(samples.size());
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (const double v : samples) {
      ss += (v - result.mean_rand) * (v - result.mean_rand);
    }
    result.sd_rand = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  if (samples.size() >= 2 && result.sd_rand > 0.0) {
    result.z = (observed_cd - result.mean_rand) / result.sd_rand;
  }
  return result;
}

}  // namespace

ZScoreResult z_score(const CitationNetwork& net, NodeId p, std::int32_t window,
                     std::int32_t n_rewires, const RewireConfig& cfg) {
  const auto observed = compute_cd(net, p, window);
  if (!observed) throw std::invalid_argument("CD undefined for paper " + std::to_string(p));

  std::vector<double> samples;
  samples.reserve(n_rewires);
  for (std::int32_t i = 0; i < n_rewires; ++i) {
    RewireConfig replica_cfg = cfg;
    replica_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
    const RewireResult replica = rewire(net, replica_cfg);
    if (const auto rec = compute_cd(replica.net, p, window)) samples.push_back(rec->cd);
  }
  return score_from_samples(p, observed->cd, samples);
}

std::vector<ZScoreResult> z_scores_all(const CitationNetwork& net, std::int32_t window,
                                       std::int32_t n_rewires, const RewireConfig& cfg,
                                       std::vector<ReplicaStats>* replica_stats) {
  const std::vector<DisruptionRecord> observed = compute_cd_all(net, window);

  // One batch of replicas shared across all focal papers.
  std::vector<std::vector<std::optional<DisruptionRecord>>> replica_records;
  replica_records.reserve(n_rewires);
  for (std::int32_t i = 0; i < n_rewires; ++i) {
    RewireConfig replica_cfg = cfg;
    replica_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
    const RewireResult replica = rewire(net, replica_cfg);
    if (replica_stats) {
      replica_stats->push_back({replica_cfg.seed, replica.proposed, replica.accepted,
                                replica.rejected, replica.hamming_from_original});
    }
    const auto records = compute_cd_all(replica.net, window);
    std::vector<std::optional<DisruptionRecord>> by_paper(net.num_papers());
    for (const auto& rec : records) by_paper[rec.paper] = rec;
    replica_records.push_back(std::move(by_paper));
  }

  std::vector<ZScoreResult> results;
  results.reserve(observed.size());
  std::vector<double> samples;
  for (const DisruptionRecord& rec : observed) {
    samples.clear();
    for (const auto& replica : replica_records) {
      if (replica[rec.paper]) samples.push_back(replica[rec.paper]->cd);
    }
    results.push_back(score_from_samples(rec.paper, rec.cd, samples));
  }
  return results;
}

}  // namespace citesim

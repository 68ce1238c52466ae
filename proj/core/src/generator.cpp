#include "citesim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace citesim {

namespace {

std::int64_t apply_rounding(double v, Rounding rounding) {
  const double rounded = rounding == Rounding::Floor ? std::floor(v) : std::round(v);
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

void GrowthConfig::validate() const {
  if (n1 < 1) throw std::invalid_argument("n1 must be >= 1");
  if (r1 < 1) throw std::invalid_argument("r1 must be >= 1");
  if (periods < 1) throw std::invalid_argument("periods must be >= 1");
  if (quench_period && (*quench_period < 1 || *quench_period > periods)) {
    throw std::invalid_argument("quench_period must lie in [1, periods]");
  }
  if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("beta must lie in [0, 1]");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (!(c0 > 0.0)) throw std::invalid_argument("c0 must be > 0");
}

GrowthConfig GrowthConfig::from_json_text(const std::string& text) {
  GrowthConfig cfg;
  nlohmann::json j;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    j = nlohmann::json::parse(text);
  } else {
    // key = value lines, '#' comments
    j = nlohmann::json::object();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) continue;
      if (key == "rounding") {
        j[key] = value;
      } else {
        j[key] = nlohmann::json::parse(value);
      }
    }
  }

  if (j.contains("n1")) cfg.n1 = j["n1"].get<std::int64_t>();
  if (j.contains("r1")) cfg.r1 = j["r1"].get<std::int64_t>();
  if (j.contains("g_n")) cfg.g_n = j["g_n"].get<double>();
  if (j.contains("g_r")) cfg.g_r = j["g_r"].get<double>();
  if (j.contains("T")) cfg.periods = j["T"].get<std::int32_t>();
  if (j.contains("T_star") && !j["T_star"].is_null()) {
    cfg.quench_period = j["T_star"].get<std::int32_t>();
  }
  if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
  if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
  if (j.contains("c0")) cfg.c0 = j["c0"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("rounding")) {
    const auto mode = j["rounding"].get<std::string>();
    if (mode == "floor") {
      cfg.rounding = Rounding::Floor;
    } else if (mode == "round") {
      cfg.rounding = Rounding::Round;
    } else {
      throw std::invalid_argument("rounding must be 'floor' or 'round'");
    }
  }
  cfg.validate();
  return cfg;
}

GrowthConfig GrowthConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string GrowthConfig::to_json_text() const {
  nlohmann::json j;
  j["n1"] = n1;
  j["r1"] = r1;
  j["g_n"] = g_n;
  j["g_r"] = g_r;
  j["T"] = periods;
  if (quench_period) {
    j["T_star"] = *quench_period;
  } else {
    j["T_star"] = nullptr;
  }
  j["beta"] = beta;
  j["tau"] = tau;
  j["c0"] = c0;
  j["seed"] = seed;
  j["rounding"] = rounding == Rounding::Floor ? "floor" : "round";
  return j.dump(2);
}

std::int64_t GrowthSchedule::total_papers() const {
  std::int64_t total = 0;
  for (const auto n : papers) total += n;
  return total;
}

std::int64_t GrowthSchedule::total_edges() const {
  std::int64_t total = 0;
  std::int64_t pool = 0;
  for (std::size_t t = 0; t < papers.size(); ++t) {
    total += papers[t] * std::min(refs[t], pool);
    pool += papers[t];
  }
  return total;
}

GrowthSchedule build_schedule(const GrowthConfig& cfg) {
  cfg.validate();
  GrowthSchedule schedule;
  schedule.papers.resize(cfg.periods);
  schedule.refs.resize(cfg.periods);
  for (std::int32_t t = 1; t <= cfg.periods; ++t) {
    const double age = static_cast<double>(t - 1);
    schedule.papers[t - 1] =
        std::max<std::int64_t>(1, apply_rounding(cfg.n1 * std::exp(cfg.g_n * age), cfg.rounding));
    schedule.refs[t - 1] =
        std::max<std::int64_t>(1, apply_rounding(cfg.r1 * std::exp(cfg.g_r * age), cfg.rounding));
  }
  if (cfg.quench_period) {
    const std::int64_t frozen = schedule.refs[*cfg.quench_period - 1];
    for (std::int32_t t = *cfg.quench_period; t <= cfg.periods; ++t) {
      schedule.refs[t - 1] = frozen;
    }
  }
  return schedule;
}

ReferenceSampler::ReferenceSampler(const GrowthConfig& cfg, std::int32_t period,
                                   std::span<const std::int32_t> pool_period,
                                   std::span<const std::int64_t> pool_indegree,
                                   std::span<const std::int64_t> ref_offsets,
                                   std::span<const NodeId> ref_targets)
    : beta_(cfg.beta), ref_offsets_(ref_offsets), ref_targets_(ref_targets) {
  if (pool_period.size() != pool_indegree.size()) {
    throw std::invalid_argument("pool arrays must have equal size");
  }
  cumulative_weight_.resize(pool_period.size());
  double total = 0.0;
  for (std::size_t q = 0; q < pool_period.size(); ++q) {
    if (pool_period[q] >= period) {
      throw std::invalid_argument("pool must contain strictly earlier papers only");
    }
    const double age = static_cast<double>(period - pool_period[q]);
    total += (static_cast<double>(pool_indegree[q]) + cfg.c0) * std::exp(-age / cfg.tau);
    cumulative_weight_[q] = total;
  }
  selected_mark_.assign(pool_period.size(), 0);
}

NodeId ReferenceSampler::sample_direct(Rng& rng) const {
  const double total = cumulative_weight_.back();
  // Rejection against already-selected targets; equivalent to renormalizing
  // over the complement, which the bounded fallback below computes directly.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double u = rng.next_double() * total;
    const auto it = std::upper_bound(cumulative_weight_.begin(), cumulative_weight_.end(), u);
    const auto q = static_cast<NodeId>(std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative_weight_.begin()), cumulative_weight_.size() - 1));
    if (!is_selected(q)) return q;
  }
  double remaining = total;
  for (const NodeId q : selected_) {
    const double w = cumulative_weight_[q] - (q == 0 ? 0.0 : cumulative_weight_[q - 1]);
    remaining -= w;
  }
  double u = rng.next_double() * remaining;
  NodeId last_unselected = 0;
  for (std::size_t q = 0; q < cumulative_weight_.size(); ++q) {
    if (is_selected(static_cast<NodeId>(q))) continue;
    last_unselected = static_cast<NodeId>(q);
    const double w = cumulative_weight_[q] - (q == 0 ? 0.0 : cumulative_weight_[q - 1]);
    u -= w;
    if (u <= 0.0) return static_cast<NodeId>(q);
  }
  return last_unselected;
}

void ReferenceSampler::pick(std::int64_t count, Rng& rng, std::vector<NodeId>& out) {
  const auto pool = static_cast<std::int64_t>(cumulative_weight_.size());
  const std::int64_t want = std::min(count, pool);
  ++generation_;
  selected_.clear();
  for (std::int64_t slot = 0; slot < want; ++slot) {
    NodeId target = 0;
    bool have_target = false;
    const bool redirect = rng.next_double() < beta_;
    if (redirect && !selected_.empty()) {
      const NodeId via = selected_[rng.next_index(selected_.size())];
      candidates_.clear();
      for (std::int64_t i = ref_offsets_[via]; i < ref_offsets_[via + 1]; ++i) {
        const NodeId r = ref_targets_[i];
        if (!is_selected(r)) candidates_.push_back(r);
      }
      if (!candidates_.empty()) {
        target = candidates_[rng.next_index(candidates_.size())];
        have_target = true;
      }
    }
    if (!have_target) target = sample_direct(rng);
    selected_.push_back(target);
    selected_mark_[target] = generation_;
  }
  out.insert(out.end(), selected_.begin(), selected_.end());
}

std::vector<NodeId> pick_references(const GrowthConfig& cfg, std::int32_t period,
                                    std::int64_t count,
                                    std::span<const std::int32_t> pool_period,
                                    std::span<const std::int64_t> pool_indegree,
                                    std::span<const std::int64_t> ref_offsets,
                                    std::span<const NodeId> ref_targets, Rng& rng) {
  ReferenceSampler sampler(cfg, period, pool_period, pool_indegree, ref_offsets, ref_targets);
  std::vector<NodeId> out;
  sampler.pick(count, rng, out);
  return out;
}

CitationNetwork grow(const GrowthConfig& cfg) {
  cfg.validate();
  const GrowthSchedule schedule = build_schedule(cfg);
  const std::int64_t total_nodes = schedule.total_papers();
  const std::int64_t total_edges = schedule.total_edges();

  std::vector<std::int32_t> period_by_node;
  std::vector<std::int64_t> indegree;
  std::vector<std::int64_t> ref_offsets;
  std::vector<NodeId> ref_targets;
  // Exact capacities: the sampler holds spans into these vectors while the
  // period loop appends to them, so they must never reallocate.
  period_by_node.reserve(total_nodes);
  indegree.reserve(total_nodes);
  ref_offsets.reserve(total_nodes + 1);
  ref_targets.reserve(total_edges);
  ref_offsets.push_back(0);

  Rng rng(cfg.seed);

  std::int64_t pool = 0;
  for (std::int32_t t = 1; t <= cfg.periods; ++t) {
    const std::int64_t cohort = schedule.papers[t - 1];
    const std::int64_t refs = std::min(schedule.refs[t - 1], pool);
    const std::int64_t first_new_edge = static_cast<std::int64_t>(ref_targets.size());

    if (refs > 0) {
      // Attachment weights frozen at the start of the period: in-degrees
      // reflect periods < t only, so papers within a cohort do not reweight
      // one another.
      ReferenceSampler sampler(
          cfg, t, std::span(period_by_node).first(pool), std::span(indegree).first(pool),
          std::span(ref_offsets).first(pool + 1), std::span(ref_targets));
      for (std::int64_t i = 0; i < cohort; ++i) {
        sampler.pick(refs, rng, ref_targets);
        ref_offsets.push_back(static_cast<std::int64_t>(ref_targets.size()));
        period_by_node.push_back(t);
        indegree.push_back(0);
      }
    } else {
      for (std::int64_t i = 0; i < cohort; ++i) {
        ref_offsets.push_back(static_cast<std::int64_t>(ref_targets.size()));
        period_by_node.push_back(t);
        indegree.push_back(0);
      }
    }

    for (std::int64_t e = first_new_edge; e < static_cast<std::int64_t>(ref_targets.size()); ++e) {
      ++indegree[ref_targets[e]];
    }
    pool += cohort;
  }

  std::vector<PaperNode> nodes(period_by_node.size());
  for (std::size_t p = 0; p < nodes.size(); ++p) nodes[p].year = period_by_node[p];

  std::vector<Edge> edges;
  edges.reserve(ref_targets.size());
  for (std::size_t p = 0; p + 1 < ref_offsets.size(); ++p) {
    for (std::int64_t i = ref_offsets[p]; i < ref_offsets[p + 1]; ++i) {
      edges.push_back({static_cast<NodeId>(p), ref_targets[i]});
    }
  }
  return CitationNetwork::from_parts(std::move(nodes), edges);
}

}  // namespace citesim

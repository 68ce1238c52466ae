#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "citesim/generator.hpp"
#include "citesim/metrics.hpp"

using namespace citesim;

namespace {

GrowthConfig paper_config() {
  GrowthConfig cfg;  // defaults already carry the published rates
  cfg.quench_period = 108;
  return cfg;
}

// N_j share over all defined records: fraction of in-window citations that
// close a triangle with a reference of the cited paper.
double triadic_share(const CitationNetwork& net, std::int32_t window) {
  const auto records = compute_cd_all(net, window);
  std::int64_t nj = 0, cited = 0;
  for (const auto& rec : records) {
    nj += rec.n_j;
    cited += rec.citations();
  }
  return cited == 0 ? 0.0 : static_cast<double>(nj) / static_cast<double>(cited);
}

}  // namespace

TEST_SUITE("generator") {

TEST_CASE("schedule matches published anchor values") {
  auto cfg = paper_config();
  const auto schedule = build_schedule(cfg);
  CHECK(schedule.papers[0] == 30);
  CHECK(schedule.refs[107] == 34);   // r(108), quenched from here on
  CHECK(schedule.refs[149] == 34);   // r(150) under the quench

  cfg.quench_period.reset();
  const auto unquenched = build_schedule(cfg);
  CHECK(unquenched.refs[149] == 73);  // r(150) with growth intact
  CHECK(unquenched.total_papers() == 125270);
  CHECK(unquenched.total_edges() == 5948492);
}

TEST_CASE("rounding mode changes the schedule") {
  GrowthConfig cfg;
  cfg.rounding = Rounding::Round;
  const auto schedule = build_schedule(cfg);
  GrowthConfig floored;
  const auto base = build_schedule(floored);
  CHECK(schedule.total_papers() > base.total_papers());
}

TEST_CASE("single period network has no edges") {
  GrowthConfig cfg;
  cfg.periods = 1;
  const auto net = grow(cfg);
  CHECK(net.num_papers() == 30);
  CHECK(net.num_edges() == 0);
}

TEST_CASE("growth is deterministic and structurally valid") {
  GrowthConfig cfg;
  cfg.periods = 40;
  cfg.seed = 1234;
  const auto a = grow(cfg);
  const auto b = grow(cfg);
  CHECK(a == b);

  cfg.seed = 1235;
  const auto c = grow(cfg);
  CHECK_FALSE(a == c);

  const auto schedule = build_schedule(cfg);
  CHECK(static_cast<std::int64_t>(a.num_papers()) == schedule.total_papers());
  CHECK(static_cast<std::int64_t>(a.num_edges()) == schedule.total_edges());

  // Per-node out-degree equals min(r(t), pool at t); construction already
  // rejected duplicates and forward references.
  std::int64_t pool = 0;
  NodeId p = 0;
  for (std::int32_t t = 1; t <= cfg.periods; ++t) {
    const std::int64_t expected = std::min(schedule.refs[t - 1], pool);
    for (std::int64_t i = 0; i < schedule.papers[t - 1]; ++i, ++p) {
      CHECK(static_cast<std::int64_t>(a.reference_count(p)) == expected);
      CHECK(a.year(p) == t);
    }
    pool += schedule.papers[t - 1];
  }
}

TEST_CASE("matched seeds coincide until reference lists diverge") {
  GrowthConfig quench_cfg;
  quench_cfg.periods = 40;
  quench_cfg.quench_period = 25;
  quench_cfg.seed = 77;
  GrowthConfig ci_cfg = quench_cfg;
  ci_cfg.quench_period.reset();

  const auto sq = build_schedule(quench_cfg);
  const auto sc = build_schedule(ci_cfg);
  std::int32_t diverge = quench_cfg.periods + 1;
  for (std::int32_t t = 1; t <= quench_cfg.periods; ++t) {
    if (sq.refs[t - 1] != sc.refs[t - 1]) {
      diverge = t;
      break;
    }
  }
  REQUIRE(diverge > *quench_cfg.quench_period);  // identity extends past T*

  const auto a = grow(quench_cfg);
  const auto b = grow(ci_cfg);
  for (NodeId p = 0; p < a.num_papers(); ++p) {
    if (a.year(p) >= diverge) break;
    const auto ra = a.references(p);
    const auto rb = b.references(p);
    REQUIRE(std::equal(ra.begin(), ra.end(), rb.begin(), rb.end()));
  }
}

TEST_CASE("pick_references single prior node is deterministic") {
  GrowthConfig cfg;
  cfg.beta = 0.0;
  const std::vector<std::int32_t> period = {1};
  const std::vector<std::int64_t> indeg = {0};
  const std::vector<std::int64_t> offsets = {0, 0};
  Rng rng(5);
  const auto picked = pick_references(cfg, 2, 1, period, indeg, offsets, {}, rng);
  CHECK(picked == std::vector<NodeId>{0});
}

TEST_CASE("pick_references redirection closes triangles through the hub") {
  // Pool: hub 0 (no refs) plus leaves 1..4 each citing the hub.
  GrowthConfig cfg;
  cfg.beta = 1.0;
  const std::vector<std::int32_t> period = {1, 2, 2, 2, 2};
  const std::vector<std::int64_t> indeg = {4, 0, 0, 0, 0};
  const std::vector<std::int64_t> offsets = {0, 0, 1, 2, 3, 4};
  const std::vector<NodeId> targets = {0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const auto picked = pick_references(cfg, 3, 2, period, indeg, offsets, targets, rng);
    REQUIRE(picked.size() == 2);
    if (picked[0] != 0) {
      // First slot fell back to a direct draw and landed on a leaf; the
      // redirection slot must copy that leaf's only reference, the hub.
      CHECK(picked[1] == 0);
    }
  }
}

TEST_CASE("pick_references attachment weights are proportional to indegree plus offset") {
  // Two-node pool with in-degrees 3 and 0, c0 = 1, no recency decay:
  // weights 4/5 and 1/5.
  GrowthConfig cfg;
  cfg.beta = 0.0;
  cfg.c0 = 1.0;
  cfg.tau = std::numeric_limits<double>::infinity();
  const std::vector<std::int32_t> period = {1, 1};
  const std::vector<std::int64_t> indeg = {3, 0};
  const std::vector<std::int64_t> offsets = {0, 0, 0};
  Rng rng(99);
  const int draws = 100000;
  int first = 0;
  for (int i = 0; i < draws; ++i) {
    const auto picked = pick_references(cfg, 2, 1, period, indeg, offsets, {}, rng);
    if (picked[0] == 0) ++first;
  }
  const double expected = 0.8;
  const double sd = std::sqrt(expected * (1 - expected) * draws);
  CHECK(std::abs(first - expected * draws) <= 3 * sd);
}

TEST_CASE("recency decay shifts mass to recent papers") {
  GrowthConfig cfg;
  cfg.beta = 0.0;
  cfg.c0 = 1.0;
  cfg.tau = 2.0;
  // Equal in-degree, different ages: weight ratio exp(-1/2)/exp(-9/2).
  const std::vector<std::int32_t> period = {1, 9};
  const std::vector<std::int64_t> indeg = {0, 0};
  const std::vector<std::int64_t> offsets = {0, 0, 0};
  Rng rng(7);
  const int draws = 20000;
  int recent = 0;
  for (int i = 0; i < draws; ++i) {
    const auto picked = pick_references(cfg, 10, 1, period, indeg, offsets, {}, rng);
    if (picked[0] == 1) ++recent;
  }
  const double p_recent = std::exp(-0.5) / (std::exp(-0.5) + std::exp(-4.5));
  const double sd = std::sqrt(p_recent * (1 - p_recent) * draws);
  CHECK(std::abs(recent - p_recent * draws) <= 3 * sd);
}

TEST_CASE("redirection raises the triadic closure rate") {
  const int runs = 10;
  double with_redirect = 0.0;
  double without = 0.0;
  for (int k = 0; k < runs; ++k) {
    GrowthConfig cfg;
    cfg.periods = 35;
    cfg.seed = 900 + static_cast<std::uint64_t>(k);
    cfg.beta = 0.4;
    with_redirect += triadic_share(grow(cfg), 5);
    cfg.beta = 0.0;
    without += triadic_share(grow(cfg), 5);
  }
  CHECK(with_redirect / runs > without / runs);
}

TEST_CASE("config validation") {
  GrowthConfig cfg;
  cfg.beta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = GrowthConfig{};
  cfg.quench_period = 200;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = GrowthConfig{};
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config round trips through json and key-value text") {
  GrowthConfig cfg;
  cfg.n1 = 12;
  cfg.periods = 80;
  cfg.quench_period = 60;
  cfg.beta = 0.35;
  cfg.seed = 424242;
  const auto parsed = GrowthConfig::from_json_text(cfg.to_json_text());
  CHECK(parsed.n1 == cfg.n1);
  CHECK(parsed.periods == cfg.periods);
  CHECK(parsed.quench_period == cfg.quench_period);
  CHECK(parsed.beta == doctest::Approx(cfg.beta));
  CHECK(parsed.seed == cfg.seed);

  const auto kv = GrowthConfig::from_json_text(
      "n1 = 12\nr1 = 5\ng_n = 0.033\ng_r = 0.018\nT = 80\nT_star = 60  # freeze here\n"
      "beta = 0.35\nseed = 424242\nrounding = floor\n");
  CHECK(kv.n1 == 12);
  CHECK(kv.quench_period == 60);
  CHECK(kv.beta == doctest::Approx(0.35));
}

}  // TEST_SUITE

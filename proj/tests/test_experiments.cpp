#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "citesim/experiments.hpp"
#include "citesim/rng.hpp"

using namespace citesim;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("citesim_exp_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

QuenchOptions tiny_quench() {
  QuenchOptions options;
  options.base.periods = 40;
  options.base.quench_period = 25;
  options.base.seed = 500;
  options.realizations = 3;
  options.windows = {5};
  options.burn_in = 10;
  return options;
}

// Synthetic analysis table with controllable per-year and per-team effects.
struct PlantedTable {
  std::vector<double> year_effects;       // index = year - 2000
  std::vector<double> team_effects;       // index = team size - 1, on normcd
  std::size_t rows = 20000;
  double noise_sd = 0.005;
  std::uint64_t seed = 0;

  DataTable build() const {
    Rng rng(seed);
    std::vector<double> cd, normcd, r, c, k, year, journal;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto y_idx = static_cast<std::size_t>(rng.next_index(year_effects.size()));
      const auto team = 1 + rng.next_index(team_effects.size());
      const double rv = 10.0 + static_cast<double>(rng.next_index(90));
      const double cv = 1.0 + static_cast<double>(rng.next_index(99));
      const double jv = static_cast<double>(rng.next_index(4));
      const double base = -0.004 * std::log(rv) + 0.002 * std::log(cv) + 0.001 * jv;
      cd.push_back(base + year_effects[y_idx] + noise_sd * rng.next_normal());
      normcd.push_back(team_effects[team - 1] - 0.1 * std::log(rv) + 0.05 * std::log(cv) +
                       40.0 * noise_sd * rng.next_normal());
      r.push_back(rv);
      c.push_back(cv);
      k.push_back(static_cast<double>(team));
      year.push_back(2000.0 + static_cast<double>(y_idx));
      journal.push_back(jv);
    }
    DataTable table;
    table.add_column("CD", cd);
    table.add_column("normcd", normcd);
    table.add_column("r_p", r);
    table.add_column("c_cw", c);
    table.add_column("team_size", k);
    table.add_column("year", year);
    table.add_column("journal_id", journal);
    return table;
  }
};

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("quench pipeline emits matched ensembles and a checksummed manifest") {
  const auto dir = temp_dir("quench");
  const auto options = tiny_quench();
  const auto result = run_quench(options, dir);

  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "cd_series_cw5.csv"));
  CHECK(fs::exists(dir / "cd_ensemble_cw5.csv"));
  CHECK(fs::exists(dir / "rk_series_cw5.csv"));
  CHECK(fs::exists(dir / "rk_ensemble_cw5.csv"));

  // Checksums recorded in the manifest match the files on disk.
  REQUIRE(result.manifest.outputs.size() == 4);
  for (const auto& output : result.manifest.outputs) {
    CHECK(output.checksum == checksum_file(dir / output.file));
    CHECK(output.bytes == fs::file_size(dir / output.file));
  }

  // Matched seeds: the scenario pair shares networks until reference lists
  // diverge, so early ensemble means agree exactly.
  const auto& ci = result.cd[0].at(5);
  const auto& quench = result.cd[1].at(5);
  const auto sched_q = build_schedule(options.base);
  GrowthConfig ci_cfg = options.base;
  ci_cfg.quench_period.reset();
  const auto sched_c = build_schedule(ci_cfg);
  std::int32_t diverge = options.base.periods + 1;
  for (std::int32_t t = 1; t <= options.base.periods; ++t) {
    if (sched_q.refs[t - 1] != sched_c.refs[t - 1]) {
      diverge = t;
      break;
    }
  }
  int compared = 0;
  for (std::int32_t t = options.burn_in; t + 5 < diverge; ++t) {
    REQUIRE(ci.contains(t));
    REQUIRE(quench.contains(t));
    CHECK(ci.at(t).mean == quench.at(t).mean);
    ++compared;
  }
  CHECK(compared > 5);

  // Series stop where the window would be right-censored.
  CHECK(ci.rbegin()->first == options.base.periods - 5);
  // Every point carries its support.
  for (const auto& [t, point] : ci) {
    CHECK(point.realizations == options.realizations);
    CHECK(point.mean_papers > 0.0);
  }
}

TEST_CASE("freezing reference growth turns the extraneous rate around") {
  QuenchOptions options;
  options.base.periods = 60;
  options.base.quench_period = 35;
  options.base.seed = 640;
  options.realizations = 5;
  options.windows = {5};
  options.burn_in = 10;
  const auto dir = temp_dir("quench_rk");
  const auto result = run_quench(options, dir);

  // Scenario with growth intact: R_k keeps climbing. Quenched scenario: the
  // rate falls back after the freeze (negative slope over [T*, T*+20]).
  auto slope = [](const EnsembleSeries& series, std::int32_t lo, std::int32_t hi) {
    double sx = 0, sy = 0, sxy = 0, sxx = 0;
    int n = 0;
    for (std::int32_t t = lo; t <= hi; ++t) {
      if (!series.contains(t)) continue;
      sx += t;
      sy += series.at(t).mean;
      ++n;
    }
    const double mx = sx / n, my = sy / n;
    for (std::int32_t t = lo; t <= hi; ++t) {
      if (!series.contains(t)) continue;
      sxy += (t - mx) * (series.at(t).mean - my);
      sxx += (t - mx) * (t - mx);
    }
    return sxy / sxx;
  };
  const std::int32_t t_star = *options.base.quench_period;
  CHECK(slope(result.rk[1].at(5), t_star, t_star + 20) < 0.0);
  CHECK(slope(result.rk[0].at(5), t_star, t_star + 20) > 0.0);
}

TEST_CASE("quench pipeline reruns byte-identically") {
  const auto dir_a = temp_dir("quench_a");
  const auto dir_b = temp_dir("quench_b");
  const auto options = tiny_quench();
  run_quench(options, dir_a);
  run_quench(options, dir_b);
  for (const char* name : {"cd_series_cw5.csv", "cd_ensemble_cw5.csv", "rk_series_cw5.csv",
                           "rk_ensemble_cw5.csv"}) {
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));
  }
}

TEST_CASE("trend analysis flags planted year effects and ignores null ones") {
  SUBCASE("null year effects stay near the nominal false-positive rate") {
    PlantedTable planted;
    planted.year_effects.assign(20, 0.0);
    planted.team_effects.assign(10, 0.0);
    planted.seed = 42;
    const auto dir = temp_dir("trend_null");
    planted.build().write_csv(dir / "table.csv");
    const auto result = run_trend_analysis({.table_path = dir / "table.csv"}, dir / "out");
    int significant = 0;
    for (const auto& effect : result.year_effects) {
      if (!effect.is_baseline && effect.significant) ++significant;
    }
    CHECK(significant <= 4);  // 19 levels at the 5% level
    CHECK(fs::exists(dir / "out" / "gamma_year.csv"));
    CHECK(fs::exists(dir / "out" / "fit.json"));
  }

  SUBCASE("stepwise shift is recovered within four standard errors") {
    PlantedTable planted;
    planted.year_effects.assign(20, 0.0);
    for (std::size_t y = 15; y < 20; ++y) planted.year_effects[y] = 0.0005;
    planted.team_effects.assign(10, 0.0);
    planted.seed = 43;
    const auto dir = temp_dir("trend_step");
    planted.build().write_csv(dir / "table.csv");
    const auto result = run_trend_analysis({.table_path = dir / "table.csv"}, dir / "out");
    for (const auto& effect : result.year_effects) {
      if (effect.is_baseline) continue;
      const double truth = effect.level >= 2015 ? 0.0005 : 0.0;
      CHECK(std::abs(effect.estimate - truth) <= 4.0 * effect.se);
    }
  }
}

TEST_CASE("team-size analysis stays quiet on a planted null") {
  PlantedTable planted;
  planted.year_effects.assign(8, 0.0);
  planted.team_effects.assign(25, 0.0);
  planted.rows = 30000;
  planted.seed = 45;
  const auto dir = temp_dir("teamsize_null");
  planted.build().write_csv(dir / "table.csv");
  const auto result = run_teamsize_analysis({.table_path = dir / "table.csv"}, dir / "out");
  int significant = 0;
  for (const auto& effect : result.team_effects) {
    if (!effect.is_baseline && effect.significant) ++significant;
  }
  CHECK(significant <= 5);  // 24 levels at the 5% level
}

TEST_CASE("team-size analysis recovers a planted sign flip") {
  PlantedTable planted;
  planted.year_effects.assign(10, 0.0);
  planted.team_effects.resize(25);
  for (std::size_t k = 0; k < 25; ++k) {
    // Shift vs the solo baseline: negative below eight coauthors, positive from there on.
    planted.team_effects[k] = k == 0 ? 0.0 : 0.05 * (static_cast<double>(k + 1) - 7.5);
  }
  planted.rows = 60000;
  planted.seed = 44;
  const auto dir = temp_dir("teamsize");
  planted.build().write_csv(dir / "table.csv");
  const auto result = run_teamsize_analysis({.table_path = dir / "table.csv"}, dir / "out");

  std::int64_t first_positive = 0;
  for (const auto& effect : result.team_effects) {
    if (effect.is_baseline) continue;
    if (effect.estimate > 0.0) {
      first_positive = effect.level;
      break;
    }
  }
  CHECK(first_positive >= 7);
  CHECK(first_positive <= 9);
  CHECK(fs::exists(dir / "out" / "gamma_teamsize.csv"));
}

TEST_CASE("two-group corpus stretches group B reference lists") {
  TwoGroupCorpusConfig cfg;
  cfg.growth.periods = 30;
  cfg.growth.seed = 9;
  cfg.seed = 10;
  const auto net = build_two_group_corpus(cfg);

  std::map<std::int32_t, std::array<double, 2>> ref_sums;
  std::map<std::int32_t, std::array<double, 2>> counts;
  for (NodeId p = 0; p < net.num_papers(); ++p) {
    const auto g = static_cast<std::size_t>(*net.paper(p).group_label);
    ref_sums[net.year(p)][g] += static_cast<double>(net.reference_count(p));
    counts[net.year(p)][g] += 1.0;
  }
  int years_checked = 0;
  for (const auto& [year, sums] : ref_sums) {
    if (year < 10) continue;
    const auto& n = counts[year];
    if (n[0] < 1 || n[1] < 1) continue;
    const double mean_a = sums[0] / n[0];
    const double mean_b = sums[1] / n[1];
    CHECK(mean_b == doctest::Approx(2.0 * mean_a).epsilon(0.01));
    ++years_checked;
  }
  CHECK(years_checked > 10);
  for (NodeId p = 0; p < net.num_papers(); ++p) {
    CHECK(net.paper(p).journal_id == 0);
    CHECK(net.paper(p).team_size.has_value());
  }
}

TEST_CASE("quasi experiment separates groups through reference lists alone") {
  TwoGroupCorpusConfig cfg;
  cfg.growth.periods = 45;
  cfg.growth.seed = 21;
  cfg.seed = 22;
  const auto dir = temp_dir("quasi");
  const auto table = build_quasi_table(cfg, 5, 10);
  table.write_csv(dir / "table.csv");
  const auto result = run_quasi_experiment({.table_path = dir / "table.csv"}, dir / "out");

  REQUIRE(result.groups.size() == 2);
  const auto& group_a = result.groups[0];
  const auto& group_b = result.groups[1];
  CHECK(group_b.mean_refs > 1.5 * group_a.mean_refs);
  CHECK(group_b.mean_abs_cd < group_a.mean_abs_cd);
  CHECK(result.model_ladder.size() == 6);
  CHECK(fs::exists(dir / "out" / "group_summary.csv"));
  CHECK(fs::exists(dir / "out" / "model_ladder.csv"));
  CHECK(fs::exists(dir / "out" / "decomposition.json"));
}

TEST_CASE("identical groups leave the gap unexplained and delta near zero") {
  // Keep the within-year reference-list variation (long and short lists both
  // exist) but shuffle the labels so the two groups have identical mixtures.
  TwoGroupCorpusConfig cfg;
  cfg.growth.periods = 40;
  cfg.growth.seed = 31;
  cfg.seed = 32;
  const auto labeled = build_quasi_table(cfg, 5, 10);
  DataTable table;
  for (const auto& name : labeled.column_names()) {
    if (name == "group_label") continue;
    const auto col = labeled.column(name);
    table.add_column(name, std::vector<double>(col.begin(), col.end()));
  }
  Rng rng(5);
  std::vector<double> shuffled(labeled.num_rows());
  for (auto& g : shuffled) g = static_cast<double>(rng.next_index(2));
  table.add_column("group_label", std::move(shuffled));

  const auto dir = temp_dir("quasi_null");
  table.write_csv(dir / "table.csv");
  const auto result = run_quasi_experiment({.table_path = dir / "table.csv"}, dir / "out");
  CHECK_FALSE(result.decomposition.fraction_explained.has_value());
  CHECK(std::abs(result.decomposition.delta_indicator) <=
        3.0 * std::max(1e-12, result.decomposition.raw_gap_se));
  CHECK(std::abs(result.decomposition.covariate_explained) <=
        3.0 * std::max(1e-12, result.decomposition.raw_gap_se));
}

TEST_CASE("manifest hash is stable for identical configs") {
  const auto options = tiny_quench();
  CHECK(fnv1a64(options.to_json_text()) == fnv1a64(options.to_json_text()));
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

}  // TEST_SUITE

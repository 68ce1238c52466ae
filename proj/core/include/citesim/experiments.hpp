#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citesim/corpus.hpp"
#include "citesim/econometrics.hpp"
#include "citesim/generator.hpp"
#include "citesim/metrics.hpp"
#include "citesim/table.hpp"

namespace citesim {

// Reproducibility sidecar written before any output and finalized with
// per-file checksums afterwards. The recorded config and base seed are
// sufficient to re-run a pipeline byte-identically.
struct ExperimentManifest {
  std::string experiment;
  std::string config_json;
  std::uint64_t config_hash = 0;  // fnv1a-64 of config_json
  std::uint64_t base_seed = 0;
  std::int32_t realizations = 0;
  std::string version;
  struct Output {
    std::string file;
    std::uint64_t checksum = 0;  // fnv1a-64 of file bytes
    std::uint64_t bytes = 0;
  };
  std::vector<Output> outputs;
  double wall_clock_seconds = 0.0;

  void write(const std::filesystem::path& path) const;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t checksum_file(const std::filesystem::path& path);

struct EnsemblePoint {
  double mean = 0.0;
  double sd = 0.0;   // sample sd across realizations
  double se = 0.0;
  std::int32_t realizations = 0;
  double mean_papers = 0.0;  // average supporting paper count
};
using EnsembleSeries = std::map<std::int32_t, EnsemblePoint>;

struct QuenchOptions {
  GrowthConfig base;              // quench_period must be set
  std::int32_t realizations = 10;
  std::vector<std::int32_t> windows = {5, 10};
  std::int32_t burn_in = 10;      // discard years below this in emitted series
  unsigned n_threads = 0;

  static QuenchOptions from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct QuenchResult {
  // scenario -> window -> series. Scenario 0: reference growth held at g_r
  // all T periods; scenario 1: g_r quenched to zero at T*.
  std::vector<std::map<std::int32_t, EnsembleSeries>> cd;  // index by scenario
  std::vector<std::map<std::int32_t, EnsembleSeries>> rk;
  ExperimentManifest manifest;
};

// Runs the two matched-seed ensembles (realization k of both scenarios uses
// seed base+k, so trajectories coincide until reference lists diverge) and
// emits per-realization and ensemble series for CD_cw(t) and R_k(t).
// Reporting stops at t = T - cw so every point has a fully observed window.
QuenchResult run_quench(const QuenchOptions& options, const std::filesystem::path& out_dir);

struct TrendOptions {
  std::filesystem::path table_path;  // analysis table CSV
  std::optional<std::int64_t> baseline_year;  // default: earliest year
};

struct TrendResult {
  FitResult fit;
  std::vector<LevelEffect> year_effects;
  ExperimentManifest manifest;
};

// Year-trend model on CD: logs and squared logs of r_p, c_cw and team size,
// a team-size-by-year interaction, year factor levels, journal fixed effects.
TrendResult run_trend_analysis(const TrendOptions& options, const std::filesystem::path& out_dir);

struct TeamSizeOptions {
  std::filesystem::path table_path;
  std::int64_t baseline_team_size = 1;
};

struct TeamSizeResult {
  FitResult fit;
  std::vector<LevelEffect> team_effects;  // in units of journal-year sd of CD
  ExperimentManifest manifest;
};

// Team-size model on the journal-year normalized disruption index with year
// fixed effects; baseline level is solo-authored papers.
TeamSizeResult run_teamsize_analysis(const TeamSizeOptions& options,
                                     const std::filesystem::path& out_dir);

struct QuasiOptions {
  std::filesystem::path table_path;  // must carry a group_label column with two values
};

struct GroupSummary {
  std::int64_t group = 0;
  std::int64_t papers = 0;
  double mean_abs_cd = 0.0;
  double sd_abs_cd = 0.0;
  double mean_refs = 0.0;
  double mean_team = 0.0;
  double mean_citations = 0.0;
};

struct QuasiResult {
  std::vector<GroupSummary> groups;
  std::vector<FitResult> model_ladder;  // partial models 1..6
  GroupGapDecomposition decomposition;
  ExperimentManifest manifest;
};

// Two-group comparison: per-group summary statistics, the six-model ladder
// (indicator only; each covariate alone; full; indicator substituting the
// reference-list term), and the gap decomposition.
QuasiResult run_quasi_experiment(const QuasiOptions& options, const std::filesystem::path& out_dir);

struct TwoGroupCorpusConfig {
  GrowthConfig growth;
  double group_b_fraction = 0.5;   // probability a new paper lands in group B
  double ref_multiplier = 2.0;     // group B draws multiplier * r(t) references
  std::int32_t team_size_max = 10; // team sizes uniform in [1, max], matched across groups
  std::uint64_t seed = 1;          // for group/team assignment (growth uses growth.seed)
};

// Constructed counterfactual: identical growth dynamics except that group B
// papers draw longer reference lists. All papers share journal 0 so that the
// normalization and regression layers apply.
CitationNetwork build_two_group_corpus(const TwoGroupCorpusConfig& cfg);

// Analysis table for such a corpus over one window, keeping post-burn-in
// years with a fully observed window.
DataTable build_quasi_table(const TwoGroupCorpusConfig& cfg, std::int32_t window,
                            std::int32_t burn_in);

}  // namespace citesim

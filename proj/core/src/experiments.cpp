#include "citesim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "citesim/csv.hpp"
#include "citesim/version.hpp"

namespace citesim {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t checksum_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return fnv1a64(buffer.str());
}

void ExperimentManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["config"] = nlohmann::json::parse(config_json);
  j["config_hash"] = config_hash;
  j["base_seed"] = base_seed;
  j["realizations"] = realizations;
  j["version"] = version;
  j["outputs"] = nlohmann::json::array();
  for (const Output& o : outputs) {
    j["outputs"].push_back({{"file", o.file}, {"checksum", o.checksum}, {"bytes", o.bytes}});
  }
  j["wall_clock_seconds"] = wall_clock_seconds;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

namespace {

// Shared manifest-first, checksums-last bookkeeping for all pipelines.
class PipelineRun {
 public:
  PipelineRun(std::filesystem::path dir, std::string name, std::string config_json,
              std::uint64_t base_seed, std::int32_t realizations)
      : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(dir_);
    manifest_.experiment = std::move(name);
    manifest_.config_json = std::move(config_json);
    manifest_.config_hash = fnv1a64(manifest_.config_json);
    manifest_.base_seed = base_seed;
    manifest_.realizations = realizations;
    manifest_.version = kVersion;
    manifest_.write(dir_ / "manifest.json");
  }

  const std::filesystem::path& dir() const { return dir_; }

  void add_output(const std::string& file) { files_.push_back(file); }

  ExperimentManifest finish() {
    for (const std::string& file : files_) {
      ExperimentManifest::Output o;
      o.file = file;
      o.checksum = checksum_file(dir_ / file);
      o.bytes = std::filesystem::file_size(dir_ / file);
      manifest_.outputs.push_back(o);
    }
    manifest_.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest_.write(dir_ / "manifest.json");
    return manifest_;
  }

 private:
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  ExperimentManifest manifest_;
  std::vector<std::string> files_;
};

EnsembleSeries combine(const std::vector<YearSeries>& realizations) {
  std::map<std::int32_t, std::vector<const YearStat*>> by_year;
  for (const YearSeries& series : realizations) {
    for (const auto& [year, stat] : series) by_year[year].push_back(&stat);
  }
  EnsembleSeries out;
  for (const auto& [year, stats] : by_year) {
    EnsemblePoint point;
    point.realizations = static_cast<std::int32_t>(stats.size());
    double sum = 0.0, papers = 0.0;
    for (const YearStat* s : stats) {
      sum += s->mean;
      papers += static_cast<double>(s->papers);
    }
    point.mean = sum / static_cast<double>(stats.size());
    point.mean_papers = papers / static_cast<double>(stats.size());
    if (stats.size() >= 2) {
      double ss = 0.0;
      for (const YearStat* s : stats) ss += (s->mean - point.mean) * (s->mean - point.mean);
      point.sd = std::sqrt(ss / static_cast<double>(stats.size() - 1));
      point.se = point.sd / std::sqrt(static_cast<double>(stats.size()));
    }
    out[year] = point;
  }
  return out;
}

YearSeries truncate_series(const YearSeries& series, std::int32_t t_min, std::int32_t t_max) {
  YearSeries out;
  for (const auto& [year, stat] : series) {
    if (year >= t_min && year <= t_max) out[year] = stat;
  }
  return out;
}

void write_level_effects(const std::filesystem::path& path,
                         const std::vector<LevelEffect>& effects, const std::string& level_name) {
  csv::Writer out(path, {level_name, "estimate", "se", "ci_lo", "ci_hi", "p_value", "significant",
                         "baseline"});
  for (const LevelEffect& e : effects) {
    out.field(e.level);
    if (e.is_baseline) {
      out.field(0.0).empty_field().empty_field().empty_field().empty_field();
    } else {
      out.field(e.estimate).field(e.se).field(e.ci_lo).field(e.ci_hi).field(e.p_value);
    }
    out.field(static_cast<std::int64_t>(e.significant ? 1 : 0));
    out.field(static_cast<std::int64_t>(e.is_baseline ? 1 : 0));
    out.end_row();
  }
}

}  // namespace

QuenchOptions QuenchOptions::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  QuenchOptions options;
  options.base = GrowthConfig::from_json_text(j.at("growth").dump());
  if (j.contains("realizations")) options.realizations = j["realizations"].get<std::int32_t>();
  if (j.contains("windows")) options.windows = j["windows"].get<std::vector<std::int32_t>>();
  if (j.contains("burn_in")) options.burn_in = j["burn_in"].get<std::int32_t>();
  return options;
}

std::string QuenchOptions::to_json_text() const {
  nlohmann::json j;
  j["growth"] = nlohmann::json::parse(base.to_json_text());
  j["realizations"] = realizations;
  j["windows"] = windows;
  j["burn_in"] = burn_in;
  return j.dump(2);
}

QuenchResult run_quench(const QuenchOptions& options, const std::filesystem::path& out_dir) {
  if (!options.base.quench_period) {
    throw std::invalid_argument("quench experiment requires T_star in the growth config");
  }
  if (options.realizations < 1) throw std::invalid_argument("need at least one realization");

  PipelineRun run(out_dir, "quench", options.to_json_text(), options.base.seed,
                  options.realizations);

  const std::vector<std::string> scenario_names = {"ci", "quench"};
  QuenchResult result;
  result.cd.resize(2);
  result.rk.resize(2);

  // scenario -> window -> realization -> series
  std::vector<std::map<std::int32_t, std::vector<YearSeries>>> cd_series(2);
  std::vector<std::map<std::int32_t, std::vector<YearSeries>>> rk_series(2);

  for (int scenario = 0; scenario < 2; ++scenario) {
    for (std::int32_t k = 0; k < options.realizations; ++k) {
      GrowthConfig cfg = options.base;
      cfg.seed = options.base.seed + static_cast<std::uint64_t>(k);
      if (scenario == 0) cfg.quench_period.reset();  // reference growth continues
      const CitationNetwork net = grow(cfg);
      for (const std::int32_t window : options.windows) {
        const auto records = compute_cd_all(net, window, options.n_threads);
        const std::int32_t t_max = cfg.periods - window;
        cd_series[scenario][window].push_back(
            truncate_series(mean_cd_by_year(records, net), options.burn_in, t_max));
        rk_series[scenario][window].push_back(
            truncate_series(mean_rk_by_year(records, net), options.burn_in, t_max));
      }
    }
  }

  for (const std::int32_t window : options.windows) {
    const std::string suffix = "cw" + std::to_string(window) + ".csv";
    const std::string cd_series_file = "cd_series_" + suffix;
    const std::string rk_series_file = "rk_series_" + suffix;
    const std::string cd_ensemble_file = "cd_ensemble_" + suffix;
    const std::string rk_ensemble_file = "rk_ensemble_" + suffix;

    {
      csv::Writer out(run.dir() / cd_series_file,
                      {"scenario", "realization", "t", "mean_cd", "papers"});
      for (int scenario = 0; scenario < 2; ++scenario) {
        const auto& all = cd_series[scenario][window];
        for (std::size_t k = 0; k < all.size(); ++k) {
          for (const auto& [year, stat] : all[k]) {
            out.field(scenario_names[scenario])
                .field(static_cast<std::int64_t>(k))
                .field(static_cast<std::int64_t>(year))
                .field(stat.mean)
                .field(stat.papers);
            out.end_row();
          }
        }
      }
    }
    {
      csv::Writer out(run.dir() / rk_series_file,
                      {"scenario", "realization", "t", "mean_rk", "papers"});
      for (int scenario = 0; scenario < 2; ++scenario) {
        const auto& all = rk_series[scenario][window];
        for (std::size_t k = 0; k < all.size(); ++k) {
          for (const auto& [year, stat] : all[k]) {
            out.field(scenario_names[scenario])
                .field(static_cast<std::int64_t>(k))
                .field(static_cast<std::int64_t>(year))
                .field(stat.mean)
                .field(stat.papers);
            out.end_row();
          }
        }
      }
    }

    for (int scenario = 0; scenario < 2; ++scenario) {
      result.cd[scenario][window] = combine(cd_series[scenario][window]);
      result.rk[scenario][window] = combine(rk_series[scenario][window]);
    }
    {
      csv::Writer out(run.dir() / cd_ensemble_file,
                      {"scenario", "t", "mean", "sd", "se", "realizations", "mean_papers"});
      for (int scenario = 0; scenario < 2; ++scenario) {
        for (const auto& [year, point] : result.cd[scenario][window]) {
          out.field(scenario_names[scenario])
              .field(static_cast<std::int64_t>(year))
              .field(point.mean)
              .field(point.sd)
              .field(point.se)
              .field(static_cast<std::int64_t>(point.realizations))
              .field(point.mean_papers);
          out.end_row();
        }
      }
    }
    {
      csv::Writer out(run.dir() / rk_ensemble_file,
                      {"scenario", "t", "mean", "sd", "se", "realizations", "mean_papers"});
      for (int scenario = 0; scenario < 2; ++scenario) {
        for (const auto& [year, point] : result.rk[scenario][window]) {
          out.field(scenario_names[scenario])
              .field(static_cast<std::int64_t>(year))
              .field(point.mean)
              .field(point.sd)
              .field(point.se)
              .field(static_cast<std::int64_t>(point.realizations))
              .field(point.mean_papers);
          out.end_row();
        }
      }
    }
    run.add_output(cd_series_file);
    run.add_output(rk_series_file);
    run.add_output(cd_ensemble_file);
    run.add_output(rk_ensemble_file);
  }

  result.manifest = run.finish();
  return result;
}

TrendResult run_trend_analysis(const TrendOptions& options,
                               const std::filesystem::path& out_dir) {
  const DataTable table = DataTable::read_csv(options.table_path);

  RegressionSpec spec;
  spec.dependent = "CD";
  spec.dep_transform = DepTransform::Identity;
  spec.terms = {
      {"r_p", TermTransform::Log, InteractWith::None},
      {"r_p", TermTransform::LogSquared, InteractWith::None},
      {"c_cw", TermTransform::Log, InteractWith::None},
      {"c_cw", TermTransform::LogSquared, InteractWith::None},
      {"team_size", TermTransform::Log, InteractWith::None},
      {"team_size", TermTransform::LogSquared, InteractWith::None},
      {"team_size", TermTransform::Log, InteractWith::Year},
  };
  std::int64_t baseline = options.baseline_year.value_or(0);
  if (!options.baseline_year) {
    const auto years = table.column("year");
    baseline = static_cast<std::int64_t>(*std::min_element(years.begin(), years.end()));
  }
  spec.factors = {{"year", baseline}};
  spec.fixed_effects = FeGroup::Journal;

  nlohmann::json config;
  config["table"] = options.table_path.string();
  config["spec"] = nlohmann::json::parse(spec.to_json_text());
  PipelineRun run(out_dir, "trend", config.dump(2), 0, 0);

  TrendResult result;
  result.fit = fit_table(table, spec);
  result.year_effects = marginal_effects(result.fit, "year");

  result.fit.write_json(run.dir() / "fit.json");
  write_level_effects(run.dir() / "gamma_year.csv", result.year_effects, "year");
  run.add_output("fit.json");
  run.add_output("gamma_year.csv");
  result.manifest = run.finish();
  return result;
}

TeamSizeResult run_teamsize_analysis(const TeamSizeOptions& options,
                                     const std::filesystem::path& out_dir) {
  const DataTable table = DataTable::read_csv(options.table_path);

  RegressionSpec spec;
  spec.dependent = "CD";
  spec.dep_transform = DepTransform::NormCd;
  spec.terms = {
      {"r_p", TermTransform::Log, InteractWith::None},
      {"r_p", TermTransform::LogSquared, InteractWith::None},
      {"c_cw", TermTransform::Log, InteractWith::None},
      {"c_cw", TermTransform::LogSquared, InteractWith::None},
  };
  spec.factors = {{"team_size", options.baseline_team_size}};
  spec.fixed_effects = FeGroup::Year;

  nlohmann::json config;
  config["table"] = options.table_path.string();
  config["spec"] = nlohmann::json::parse(spec.to_json_text());
  PipelineRun run(out_dir, "teamsize", config.dump(2), 0, 0);

  TeamSizeResult result;
  result.fit = fit_table(table, spec);
  result.team_effects = marginal_effects(result.fit, "team_size");

  result.fit.write_json(run.dir() / "fit.json");
  write_level_effects(run.dir() / "gamma_teamsize.csv", result.team_effects, "team_size");
  run.add_output("fit.json");
  run.add_output("gamma_teamsize.csv");
  result.manifest = run.finish();
  return result;
}

QuasiResult run_quasi_experiment(const QuasiOptions& options,
                                 const std::filesystem::path& out_dir) {
  DataTable table = DataTable::read_csv(options.table_path);

  const auto groups = table.column("group_label");
  std::set<std::int64_t> distinct;
  for (const double g : groups) {
    if (!std::isnan(g)) distinct.insert(static_cast<std::int64_t>(std::llround(g)));
  }
  if (distinct.size() != 2) {
    throw SingleGroup("quasi experiment requires exactly two group labels, found " +
                      std::to_string(distinct.size()));
  }
  const std::int64_t g1 = *std::next(distinct.begin());

  nlohmann::json config;
  config["table"] = options.table_path.string();
  PipelineRun run(out_dir, "quasi", config.dump(2), 0, 0);

  QuasiResult result;

  // Per-group summary of the quantities the disruption ratio depends on.
  const auto cd_col = table.column("CD");
  const auto r_col = table.column("r_p");
  const auto k_col = table.column("team_size");
  const auto c_col = table.column("c_cw");
  for (const std::int64_t g : distinct) {
    GroupSummary summary;
    summary.group = g;
    double sum_cd = 0.0, sum_r = 0.0, sum_k = 0.0, sum_c = 0.0;
    for (std::size_t i = 0; i < table.num_rows(); ++i) {
      if (static_cast<std::int64_t>(std::llround(groups[i])) != g) continue;
      ++summary.papers;
      sum_cd += std::abs(cd_col[i]);
      sum_r += r_col[i];
      sum_k += k_col[i];
      sum_c += c_col[i];
    }
    const auto n = static_cast<double>(summary.papers);
    summary.mean_abs_cd = sum_cd / n;
    summary.mean_refs = sum_r / n;
    summary.mean_team = sum_k / n;
    summary.mean_citations = sum_c / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < table.num_rows(); ++i) {
      if (static_cast<std::int64_t>(std::llround(groups[i])) != g) continue;
      const double d = std::abs(cd_col[i]) - summary.mean_abs_cd;
      ss += d * d;
    }
    summary.sd_abs_cd = summary.papers > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    result.groups.push_back(summary);
  }

  // Indicator column for the ladder models that use it.
  {
    std::vector<double> indicator(table.num_rows(), 0.0);
    for (std::size_t i = 0; i < table.num_rows(); ++i) {
      indicator[i] = static_cast<std::int64_t>(std::llround(groups[i])) == g1 ? 1.0 : 0.0;
    }
    table.add_column("group_indicator", std::move(indicator));
  }

  const Term t_ind{"group_indicator", TermTransform::Identity, InteractWith::None};
  const Term t_r{"r_p", TermTransform::Log, InteractWith::None};
  const Term t_k{"team_size", TermTransform::Log, InteractWith::None};
  const Term t_c{"c_cw", TermTransform::Log, InteractWith::None};
  const std::vector<std::vector<Term>> ladder = {
      {t_ind},           // (1) indicator only
      {t_r},             // (2) reference-list length only
      {t_k},             // (3) team size only
      {t_c},             // (4) citation impact only
      {t_r, t_k, t_c},   // (5) full
      {t_ind, t_k, t_c}  // (6) indicator substituting the reference term
  };
  RegressionSpec base_spec;
  base_spec.dependent = "CD";
  base_spec.dep_transform = DepTransform::Abs;
  base_spec.fixed_effects = FeGroup::Year;
  for (const auto& terms : ladder) {
    RegressionSpec spec = base_spec;
    spec.terms = terms;
    result.model_ladder.push_back(fit_table(table, spec));
  }

  {
    csv::Writer out(run.dir() / "model_ladder.csv",
                    {"model", "term", "estimate", "se", "ci_lo", "ci_hi", "p_value"});
    for (std::size_t m = 0; m < result.model_ladder.size(); ++m) {
      for (const Coefficient& c : result.model_ladder[m].coefficients) {
        out.field(static_cast<std::int64_t>(m + 1))
            .field(c.name)
            .field(c.estimate)
            .field(c.se)
            .field(c.ci_lo)
            .field(c.ci_hi)
            .field(c.p_value);
        out.end_row();
      }
    }
  }
  {
    csv::Writer out(run.dir() / "group_summary.csv",
                    {"group", "papers", "mean_abs_cd", "sd_abs_cd", "mean_refs", "mean_team",
                     "mean_citations"});
    for (const GroupSummary& s : result.groups) {
      out.field(s.group)
          .field(s.papers)
          .field(s.mean_abs_cd)
          .field(s.sd_abs_cd)
          .field(s.mean_refs)
          .field(s.mean_team)
          .field(s.mean_citations);
      out.end_row();
    }
  }

  RegressionSpec full_spec = base_spec;
  full_spec.terms = {t_r, t_k, t_c};
  result.decomposition = decompose_group_gap(table, full_spec, "group_label", "r_p");
  {
    std::ofstream out(run.dir() / "decomposition.json", std::ios::binary);
    out << result.decomposition.to_json_text() << '\n';
  }

  run.add_output("group_summary.csv");
  run.add_output("model_ladder.csv");
  run.add_output("decomposition.json");
  result.manifest = run.finish();
  return result;
}

CitationNetwork build_two_group_corpus(const TwoGroupCorpusConfig& cfg) {
  cfg.growth.validate();
  if (cfg.ref_multiplier < 1.0) throw std::invalid_argument("ref_multiplier must be >= 1");
  if (cfg.group_b_fraction < 0.0 || cfg.group_b_fraction > 1.0) {
    throw std::invalid_argument("group_b_fraction must lie in [0, 1]");
  }
  if (cfg.team_size_max < 1) throw std::invalid_argument("team_size_max must be >= 1");

  const GrowthSchedule schedule = build_schedule(cfg.growth);
  const std::int64_t total_nodes = schedule.total_papers();

  std::vector<std::int32_t> period_by_node;
  std::vector<std::int64_t> indegree;
  std::vector<std::int64_t> ref_offsets;
  std::vector<NodeId> ref_targets;
  std::vector<std::int32_t> group_by_node;
  std::vector<std::int32_t> team_by_node;
  period_by_node.reserve(total_nodes);
  indegree.reserve(total_nodes);
  group_by_node.reserve(total_nodes);
  team_by_node.reserve(total_nodes);
  ref_offsets.reserve(total_nodes + 1);
  ref_offsets.push_back(0);
  // Upper bound: group-B lists are stretched by the multiplier.
  ref_targets.reserve(static_cast<std::size_t>(
      static_cast<double>(schedule.total_edges()) * cfg.ref_multiplier) + 64);

  Rng growth_rng(cfg.growth.seed);
  Rng label_rng(cfg.seed);

  std::int64_t pool = 0;
  for (std::int32_t t = 1; t <= cfg.growth.periods; ++t) {
    const std::int64_t cohort = schedule.papers[t - 1];
    const std::int64_t base_refs = schedule.refs[t - 1];
    const auto long_refs = static_cast<std::int64_t>(
        std::floor(static_cast<double>(base_refs) * cfg.ref_multiplier));
    const std::int64_t first_new_edge = static_cast<std::int64_t>(ref_targets.size());

    if (pool > 0) {
      ReferenceSampler sampler(
          cfg.growth, t, std::span(period_by_node).first(pool), std::span(indegree).first(pool),
          std::span(ref_offsets).first(pool + 1), std::span(ref_targets));
      for (std::int64_t i = 0; i < cohort; ++i) {
        const bool in_group_b = label_rng.next_double() < cfg.group_b_fraction;
        const std::int64_t want = in_group_b ? long_refs : base_refs;
        sampler.pick(want, growth_rng, ref_targets);
        ref_offsets.push_back(static_cast<std::int64_t>(ref_targets.size()));
        period_by_node.push_back(t);
        indegree.push_back(0);
        group_by_node.push_back(in_group_b ? 1 : 0);
        team_by_node.push_back(
            static_cast<std::int32_t>(1 + label_rng.next_index(cfg.team_size_max)));
      }
    } else {
      for (std::int64_t i = 0; i < cohort; ++i) {
        const bool in_group_b = label_rng.next_double() < cfg.group_b_fraction;
        ref_offsets.push_back(static_cast<std::int64_t>(ref_targets.size()));
        period_by_node.push_back(t);
        indegree.push_back(0);
        group_by_node.push_back(in_group_b ? 1 : 0);
        team_by_node.push_back(
            static_cast<std::int32_t>(1 + label_rng.next_index(cfg.team_size_max)));
      }
    }

    for (std::int64_t e = first_new_edge; e < static_cast<std::int64_t>(ref_targets.size()); ++e) {
      ++indegree[ref_targets[e]];
    }
    pool += cohort;
  }

  std::vector<PaperNode> nodes(period_by_node.size());
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    nodes[p].year = period_by_node[p];
    nodes[p].journal_id = 0;
    nodes[p].team_size = team_by_node[p];
    nodes[p].group_label = group_by_node[p];
  }

  std::vector<Edge> edges;
  edges.reserve(ref_targets.size());
  for (std::size_t p = 0; p + 1 < ref_offsets.size(); ++p) {
    for (std::int64_t i = ref_offsets[p]; i < ref_offsets[p + 1]; ++i) {
      edges.push_back({static_cast<NodeId>(p), ref_targets[i]});
    }
  }
  return CitationNetwork::from_parts(std::move(nodes), edges);
}

DataTable build_quasi_table(const TwoGroupCorpusConfig& cfg, std::int32_t window,
                            std::int32_t burn_in) {
  const CitationNetwork net = build_two_group_corpus(cfg);
  const auto records = compute_cd_all(net, window);
  const auto normalized = normalize_cd(records, net);

  std::vector<DisruptionRecord> kept;
  const std::int32_t t_max = cfg.growth.periods - window;
  for (const DisruptionRecord& rec : records) {
    const std::int32_t t = net.year(rec.paper);
    if (t >= burn_in && t <= t_max) kept.push_back(rec);
  }
  return make_analysis_table(net, kept, normalized.normcd);
}

}  // namespace citesim

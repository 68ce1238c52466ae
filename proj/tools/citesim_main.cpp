// citesim command line: network generation, disruption metrics, null-model
// scoring, regressions, and the canned experiment pipelines.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "citesim/csv.hpp"
#include "citesim/econometrics.hpp"
#include "citesim/experiments.hpp"
#include "citesim/generator.hpp"
#include "citesim/metrics.hpp"
#include "citesim/nullmodel.hpp"
#include "citesim/version.hpp"

namespace fs = std::filesystem;
using namespace citesim;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

LoadedCorpus load_dir(const fs::path& dir, bool strict, const fs::path& idmap_dir) {
  LoadedCorpus corpus = load_corpus(dir / "nodes.csv", dir / "edges.csv", {.strict = strict});
  if (corpus.stats.dropped_year_order + corpus.stats.dropped_duplicate > 0) {
    std::cerr << "warning: dropped " << corpus.stats.dropped_year_order
              << " year-order and " << corpus.stats.dropped_duplicate
              << " duplicate edge rows" << std::endl;
  }
  if (corpus.stats.ids_remapped) {
    // Dense ids differ from the input file; record the correspondence.
    const fs::path map_path = idmap_dir / "idmap.csv";
    csv::Writer out(map_path, {"id", "original_id"});
    for (std::size_t p = 0; p < corpus.original_ids.size(); ++p) {
      out.field(static_cast<std::int64_t>(p)).field(corpus.original_ids[p]);
      out.end_row();
    }
    std::cerr << "note: input ids were sparse or unordered; wrote " << map_path.string()
              << std::endl;
  }
  return corpus;
}

int cmd_generate(const fs::path& config_path, const fs::path& out_dir, int realizations) {
  const GrowthConfig base = GrowthConfig::from_file(config_path);
  fs::create_directories(out_dir);

  nlohmann::json manifest;
  manifest["config"] = nlohmann::json::parse(base.to_json_text());
  manifest["config_hash"] = fnv1a64(base.to_json_text());
  manifest["version"] = kVersion;
  manifest["realizations"] = nlohmann::json::array();

  for (int k = 0; k < realizations; ++k) {
    GrowthConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(k);
    const fs::path dir = out_dir / ("real_" + std::to_string(k));
    fs::create_directories(dir);
    const CitationNetwork net = grow(cfg);
    write_corpus(net, dir / "nodes.csv", dir / "edges.csv");
    nlohmann::json entry;
    entry["index"] = k;
    entry["seed"] = cfg.seed;
    entry["dir"] = dir.filename().string();
    entry["nodes"] = net.num_papers();
    entry["edges"] = net.num_edges();
    entry["nodes_checksum"] = checksum_file(dir / "nodes.csv");
    entry["edges_checksum"] = checksum_file(dir / "edges.csv");
    manifest["realizations"].push_back(entry);
    std::cout << "realization " << k << ": " << net.num_papers() << " nodes, "
              << net.num_edges() << " edges" << std::endl;
  }
  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << '\n';
  return 0;
}

int cmd_metrics(const fs::path& in_dir, const fs::path& out_path, int window, bool normalize,
                bool strict, unsigned threads) {
  const auto corpus = load_dir(in_dir, strict, out_path.parent_path());
  const auto records = compute_cd_all(corpus.net, window, threads);

  std::vector<std::optional<double>> normcd;
  if (normalize) {
    auto result = normalize_cd(records, corpus.net);
    normcd = std::move(result.normcd);
    const fs::path table_path = out_path.parent_path() / "normtable.csv";
    csv::Writer table(table_path, {"journal_id", "year", "mean_cd", "sd_cd", "count"});
    for (const auto& [key, cell] : result.table.cells) {
      table.field(static_cast<std::int64_t>(key.first))
          .field(static_cast<std::int64_t>(key.second))
          .field(cell.mean)
          .field(cell.sd)
          .field(cell.count);
      table.end_row();
    }
    std::cout << "wrote " << table_path.string() << " (" << result.table.cells.size()
              << " journal-year cells, " << NormalizationTable::sd_convention << " sd)"
              << std::endl;
  }

  std::vector<std::string> header = {"id", "year", "Ni", "Nj", "Nk", "CD", "CDnok", "Rk", "c_cw"};
  if (normalize) header.push_back("normcd");
  csv::Writer out(out_path, header);
  for (const auto& rec : records) {
    out.field(static_cast<std::int64_t>(rec.paper))
        .field(static_cast<std::int64_t>(corpus.net.year(rec.paper)))
        .field(rec.n_i)
        .field(rec.n_j)
        .field(rec.n_k)
        .field(rec.cd)
        .field(rec.cd_nok)
        .field(rec.r_k)
        .field(rec.citations());
    if (normalize) {
      normcd[rec.paper] ? out.field(*normcd[rec.paper]) : out.empty_field();
    }
    out.end_row();
  }
  std::cout << "wrote " << out_path.string() << " (" << records.size() << " records, cw="
            << window << ")" << std::endl;
  return 0;
}

int cmd_nullmodel(const fs::path& in_dir, const fs::path& out_path, int window, int rewires,
                  int swaps_per_edge, std::uint64_t seed, bool strict) {
  const auto corpus = load_dir(in_dir, strict, out_path.parent_path());
  RewireConfig cfg;
  cfg.seed = seed;
  cfg.swap_attempts =
      static_cast<std::int64_t>(swaps_per_edge) * static_cast<std::int64_t>(corpus.net.num_edges());
  std::vector<ReplicaStats> replicas;
  const auto scores = z_scores_all(corpus.net, window, rewires, cfg, &replicas);

  {
    csv::Writer out(out_path, {"id", "cd", "mean_rand", "sd_rand", "z"});
    for (const auto& score : scores) {
      out.field(static_cast<std::int64_t>(score.paper))
          .field(score.cd)
          .field(score.mean_rand)
          .field(score.sd_rand);
      score.z ? out.field(*score.z) : out.empty_field();
      out.end_row();
    }
  }

  // Mixing diagnostics per replica, next to the scores.
  nlohmann::json manifest;
  manifest["edges"] = corpus.net.num_edges();
  manifest["window"] = window;
  manifest["swap_attempts_per_replica"] = cfg.swap_attempts;
  manifest["replicas"] = nlohmann::json::array();
  for (const auto& r : replicas) {
    manifest["replicas"].push_back({{"seed", r.seed},
                                    {"proposed", r.proposed},
                                    {"accepted", r.accepted},
                                    {"rejected", r.rejected},
                                    {"hamming_from_original", r.hamming_from_original}});
  }
  manifest["zscores_checksum"] = checksum_file(out_path);
  const fs::path manifest_path = out_path.parent_path() / "nullmodel_manifest.json";
  std::ofstream manifest_out(manifest_path, std::ios::binary);
  manifest_out << manifest.dump(2) << '\n';

  std::cout << "wrote " << out_path.string() << " (" << scores.size() << " papers, " << rewires
            << " rewired replicas; mixing stats in " << manifest_path.string() << ")"
            << std::endl;
  return 0;
}

int cmd_regress(const fs::path& spec_path, const fs::path& data_path, const fs::path& out_path) {
  const RegressionSpec spec = RegressionSpec::from_file(spec_path);
  const DataTable table = DataTable::read_csv(data_path);
  const FitResult result = fit_table(table, spec);
  result.write_json(out_path);
  std::cout << "wrote " << out_path.string() << " (" << result.coefficients.size()
            << " coefficients, N=" << result.n_obs << ")" << std::endl;
  return 0;
}

int cmd_experiment(const std::string& kind, const fs::path& config_path, const fs::path& out_dir) {
  const std::string text = read_text(config_path);
  if (kind == "quench") {
    const auto options = QuenchOptions::from_json_text(text);
    run_quench(options, out_dir);
  } else if (kind == "trend") {
    const auto j = nlohmann::json::parse(text);
    TrendOptions options;
    options.table_path = j.at("table").get<std::string>();
    if (j.contains("baseline_year")) options.baseline_year = j["baseline_year"].get<std::int64_t>();
    run_trend_analysis(options, out_dir);
  } else if (kind == "teamsize") {
    const auto j = nlohmann::json::parse(text);
    TeamSizeOptions options;
    options.table_path = j.at("table").get<std::string>();
    if (j.contains("baseline_team_size")) {
      options.baseline_team_size = j["baseline_team_size"].get<std::int64_t>();
    }
    run_teamsize_analysis(options, out_dir);
  } else if (kind == "quasi") {
    const auto j = nlohmann::json::parse(text);
    QuasiOptions options;
    if (j.contains("synthetic")) {
      const auto& s = j["synthetic"];
      TwoGroupCorpusConfig cfg;
      cfg.growth = GrowthConfig::from_json_text(s.at("growth").dump());
      if (s.contains("group_b_fraction")) cfg.group_b_fraction = s["group_b_fraction"].get<double>();
      if (s.contains("ref_multiplier")) cfg.ref_multiplier = s["ref_multiplier"].get<double>();
      if (s.contains("team_size_max")) cfg.team_size_max = s["team_size_max"].get<std::int32_t>();
      if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
      const std::int32_t window = s.value("window", 5);
      const std::int32_t burn_in = s.value("burn_in", 10);
      fs::create_directories(out_dir);
      const auto table = build_quasi_table(cfg, window, burn_in);
      table.write_csv(out_dir / "table.csv");
      options.table_path = out_dir / "table.csv";
    } else {
      options.table_path = j.at("table").get<std::string>();
    }
    run_quasi_experiment(options, out_dir);
  } else {
    std::cerr << "unknown experiment: " << kind << std::endl;
    return 2;
  }
  std::cout << "experiment '" << kind << "' written to " << out_dir.string() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citation network growth, disruption metrics, and regression toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // generate
  std::string gen_config, gen_out;
  int gen_realizations = 1;
  auto* generate = app.add_subcommand("generate", "grow synthetic citation networks");
  generate->add_option("--config", gen_config, "growth config (JSON or key=value)")->required();
  generate->add_option("--out-dir", gen_out, "output directory")->required();
  generate->add_option("--realizations", gen_realizations, "number of realizations")
      ->check(CLI::PositiveNumber);

  // metrics
  std::string met_in, met_out = "records.csv";
  int met_cw = 5;
  bool met_normalize = false;
  bool met_strict = false;
  unsigned met_threads = 0;
  auto* metrics = app.add_subcommand("metrics", "compute per-paper disruption records");
  metrics->add_option("--in-dir", met_in, "directory with nodes.csv and edges.csv")->required();
  metrics->add_option("--out", met_out, "output records CSV");
  metrics->add_option("--cw", met_cw, "citation window in years")->check(CLI::PositiveNumber);
  metrics->add_flag("--normalize", met_normalize,
                    "emit journal-year normalized values and normtable.csv");
  metrics->add_flag("--strict", met_strict, "abort on any input violation");
  metrics->add_option("--threads", met_threads, "worker threads (0 = auto)");

  // nullmodel
  std::string null_in, null_out = "zscores.csv";
  int null_cw = 5, null_rewires = 20, null_swaps = 10;
  std::uint64_t null_seed = 0;
  bool null_strict = false;
  auto* nullmodel = app.add_subcommand("nullmodel", "degree-preserving rewiring z-scores");
  nullmodel->add_option("--in-dir", null_in, "directory with nodes.csv and edges.csv")->required();
  nullmodel->add_option("--out", null_out, "output z-score CSV");
  nullmodel->add_option("--cw", null_cw, "citation window in years")->check(CLI::PositiveNumber);
  nullmodel->add_option("--rewires", null_rewires, "number of rewired replicas")
      ->check(CLI::PositiveNumber);
  nullmodel->add_option("--swaps-per-edge", null_swaps, "swap proposals per edge")
      ->check(CLI::PositiveNumber);
  nullmodel->add_option("--seed", null_seed, "replica seed base");
  nullmodel->add_flag("--strict", null_strict, "abort on any input violation");

  // regress
  std::string reg_spec, reg_data, reg_out = "fit.json";
  auto* regress = app.add_subcommand("regress", "fixed-effects least squares on a table");
  regress->add_option("--spec", reg_spec, "regression spec JSON")->required();
  regress->add_option("--data", reg_data, "data table CSV")->required();
  regress->add_option("--out", reg_out, "output fit JSON");

  // experiment
  std::string exp_kind, exp_config, exp_out;
  auto* experiment = app.add_subcommand("experiment", "run a canned analysis pipeline");
  experiment->add_option("kind", exp_kind, "quench | trend | teamsize | quasi")
      ->required()
      ->check(CLI::IsMember({"quench", "trend", "teamsize", "quasi"}));
  experiment->add_option("--config", exp_config, "experiment config JSON")->required();
  experiment->add_option("--out-dir", exp_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(gen_config, gen_out, gen_realizations);
    if (metrics->parsed()) {
      return cmd_metrics(met_in, met_out, met_cw, met_normalize, met_strict, met_threads);
    }
    if (nullmodel->parsed()) {
      return cmd_nullmodel(null_in, null_out, null_cw, null_rewires, null_swaps, null_seed,
                           null_strict);
    }
    if (regress->parsed()) return cmd_regress(reg_spec, reg_data, reg_out);
    if (experiment->parsed()) return cmd_experiment(exp_kind, exp_config, exp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}

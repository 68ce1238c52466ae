#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "citesim/corpus.hpp"
#include "citesim/experiments.hpp"

using namespace citesim;
namespace fs = std::filesystem;

namespace {

const char* cli = CITESIM_CLI_PATH;

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("citesim_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string command = std::string(cli) + " " + args + " > /dev/null 2>&1";
  return std::system(command.c_str());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate, metrics, nullmodel, regress round trip") {
  const auto dir = temp_dir("pipeline");
  write_file(dir / "growth.json",
             R"({"n1": 20, "r1": 4, "g_n": 0.033, "g_r": 0.018, "T": 30, "seed": 3})");

  REQUIRE(run("generate --config " + (dir / "growth.json").string() + " --out-dir " +
              (dir / "nets").string() + " --realizations 2") == 0);
  CHECK(fs::exists(dir / "nets" / "manifest.json"));
  CHECK(fs::exists(dir / "nets" / "real_0" / "nodes.csv"));
  CHECK(fs::exists(dir / "nets" / "real_1" / "edges.csv"));

  SUBCASE("generation is reproducible") {
    REQUIRE(run("generate --config " + (dir / "growth.json").string() + " --out-dir " +
                (dir / "nets2").string() + " --realizations 1") == 0);
    CHECK(read_file(dir / "nets" / "real_0" / "edges.csv") ==
          read_file(dir / "nets2" / "real_0" / "edges.csv"));
  }

  SUBCASE("metrics emits the pinned record columns") {
    REQUIRE(run("metrics --in-dir " + (dir / "nets" / "real_0").string() + " --cw 5 --out " +
                (dir / "records.csv").string()) == 0);
    CHECK(first_line(dir / "records.csv") == "id,year,Ni,Nj,Nk,CD,CDnok,Rk,c_cw");
  }

  SUBCASE("nullmodel emits z-scores and mixing diagnostics") {
    REQUIRE(run("nullmodel --in-dir " + (dir / "nets" / "real_0").string() +
                " --cw 5 --rewires 3 --swaps-per-edge 2 --seed 1 --out " +
                (dir / "zscores.csv").string()) == 0);
    CHECK(first_line(dir / "zscores.csv") == "id,cd,mean_rand,sd_rand,z");
    const std::string manifest = read_file(dir / "nullmodel_manifest.json");
    CHECK(manifest.find("hamming_from_original") != std::string::npos);
    CHECK(manifest.find("accepted") != std::string::npos);
  }

  SUBCASE("regress fits a declared model on a table") {
    // Table from a synthetic two-group corpus gives realistic columns.
    TwoGroupCorpusConfig cfg;
    cfg.growth.periods = 30;
    cfg.growth.seed = 8;
    build_quasi_table(cfg, 5, 10).write_csv(dir / "table.csv");
    write_file(dir / "spec.json", R"({
      "dependent": {"variable": "CD", "transform": "abs"},
      "terms": [{"variable": "r_p", "transform": "log"},
                {"variable": "c_cw", "transform": "log"}],
      "factors": [],
      "fixed_effects_group": "year",
      "se_type": "classical"
    })");
    REQUIRE(run("regress --spec " + (dir / "spec.json").string() + " --data " +
                (dir / "table.csv").string() + " --out " + (dir / "fit.json").string()) == 0);
    const std::string fit = read_file(dir / "fit.json");
    CHECK(fit.find("log(r_p)") != std::string::npos);
    CHECK(fit.find("coefficients") != std::string::npos);
  }
}

TEST_CASE("strict mode aborts on violations") {
  const auto dir = temp_dir("strict");
  write_file(dir / "nodes.csv", "id,year,journal_id,team_size,group_label\n0,1,,,\n1,1,,,\n");
  write_file(dir / "edges.csv", "citing_id,cited_id\n1,0\n");
  CHECK(run("metrics --in-dir " + dir.string() + " --out " + (dir / "r.csv").string() +
            " --strict") != 0);
  // Default mode drops the offending row and proceeds.
  CHECK(run("metrics --in-dir " + dir.string() + " --out " + (dir / "r.csv").string()) == 0);
}

TEST_CASE("sparse input ids produce an idmap") {
  const auto dir = temp_dir("idmap");
  write_file(dir / "nodes.csv",
             "id,year,journal_id,team_size,group_label\n7,1,,,\n99,2,,,\n");
  write_file(dir / "edges.csv", "citing_id,cited_id\n99,7\n");
  REQUIRE(run("metrics --in-dir " + dir.string() + " --out " + (dir / "records.csv").string()) ==
          0);
  REQUIRE(fs::exists(dir / "idmap.csv"));
  CHECK(read_file(dir / "idmap.csv") == "id,original_id\n0,7\n1,99\n");
}

TEST_CASE("experiment subcommands run from config files") {
  const auto dir = temp_dir("experiment");

  SUBCASE("quench") {
    write_file(dir / "quench.json", R"({
      "growth": {"n1": 20, "r1": 4, "g_n": 0.033, "g_r": 0.018, "T": 35, "T_star": 22, "seed": 5},
      "realizations": 2,
      "windows": [5],
      "burn_in": 8
    })");
    REQUIRE(run("experiment quench --config " + (dir / "quench.json").string() + " --out-dir " +
                (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
    CHECK(fs::exists(dir / "out" / "cd_ensemble_cw5.csv"));
  }

  SUBCASE("quasi with a synthetic corpus") {
    write_file(dir / "quasi.json", R"({
      "synthetic": {
        "growth": {"n1": 20, "r1": 4, "T": 40, "seed": 6},
        "group_b_fraction": 0.5,
        "ref_multiplier": 2.0,
        "team_size_max": 8,
        "seed": 7,
        "window": 5,
        "burn_in": 10
      }
    })");
    REQUIRE(run("experiment quasi --config " + (dir / "quasi.json").string() + " --out-dir " +
                (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "table.csv"));
    CHECK(fs::exists(dir / "out" / "group_summary.csv"));
    CHECK(fs::exists(dir / "out" / "decomposition.json"));
  }
}

}  // TEST_SUITE

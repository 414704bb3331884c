// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "run_config.hpp"
#include "vaxbayes/error.hpp"
#include "vaxbayes/summary.hpp"

using namespace vaxbayes;
using namespace vaxbayes::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vaxbayes");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vaxbayes_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string without_comments(const std::string& text) {
  std::istringstream in(text);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (!line.starts_with("#")) kept += line + "\n";
  }
  return kept;
}

const char* kTruth =
    "# reference estimates\n"
    "beta0 = -0.74\nbeta1 = 0.45\nbeta2 = 1.24\nbeta3 = 1.79\nbeta4 = 0.39\nbeta5 = 0.91\n"
    "beta6 = -0.3\nbeta7 = 0.25\nbeta8 = 0.43\nbeta9 = 0.77\nbeta10 = 0.04\nsigma_alpha = 0.3\n";

fs::path county_file(const fs::path& dir) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 1.5);
  std::ostringstream text;
  text << "state,county,rate_percent\n";
  const std::vector<std::string> states{"AL", "AR", "CA", "CO", "CT", "GA", "MA", "MS",
                                        "NJ", "NY", "OR", "TX", "VT", "WA", "WV"};
  for (std::size_t s = 0; s < states.size(); ++s) {
    const double level = 50.0 + 20.0 * static_cast<double>(s % 3);
    for (int c = 0; c < 20; ++c) text << states[s] << ",c" << c << "," << level + noise(rng) << "\n";
  }
  const auto path = dir / "county.csv";
  spit(path, text.str());
  return path;
}

}  // namespace

TEST_CASE("RunConfig: flags override the file, which overrides defaults") {
  const auto dir = scratch("precedence");
  spit(dir / "run.cfg", "# settings\nseed = 5\nhmc.chains = 3   # trailing comment\ncluster.linkage = average\n");
  RunConfig config;
  CHECK(config.hmc.chains == 2);
  CHECK(config.hmc.iterations == 10000);
  apply_config_file(config, dir / "run.cfg");
  config.set("seed", "9");
  CHECK(config.seed == 9);
  CHECK(config.hmc.chains == 3);
  CHECK(config.linkage == Linkage::Average);
  CHECK(config.hmc.iterations == 10000);
}

TEST_CASE("RunConfig rejects unknown keys, bad values, and unreadable files") {
  RunConfig config;
  CHECK_THROWS_AS(config.set("hmc.chain", "2"), InputError);
  CHECK_THROWS_AS(config.set("seed", "-1"), InputError);
  CHECK_THROWS_AS(config.set("hmc.iterations", "12x"), InputError);
  CHECK_THROWS_AS(config.set("cluster.linkage", "single"), InputError);
  CHECK_THROWS_AS(config.set("column.zipcode", "ZIP"), InputError);
  CHECK_THROWS_AS(apply_config_file(config, "/nonexistent/run.cfg"), InputError);

  const auto dir = scratch("badcfg");
  spit(dir / "bad.cfg", "seed = 1\nno equals sign\n");
  CHECK_THROWS_WITH_AS(apply_config_file(config, dir / "bad.cfg"), doctest::Contains("bad.cfg:2"), InputError);
}

TEST_CASE("RunConfig digest tracks results-relevant settings only") {
  RunConfig a, b;
  CHECK(a.digest() == b.digest());
  CHECK(a.digest().size() == 16);
  b.set("workers", "7");
  b.set("out_dir", "elsewhere");
  CHECK(a.digest() == b.digest());
  b.set("seed", "1");
  CHECK(a.digest() != b.digest());
}

TEST_CASE("RunConfig schema entries map columns and spellings") {
  RunConfig config;
  config.set("column.state", "EST_ST");
  config.set("level.gender.2", "Female");
  const auto schema = config.schema();
  CHECK(schema.columns.at(SurveyField::State) == "EST_ST");
  CHECK(schema.gender_levels.at("2") == Gender::Female);
  config.set("level.race.x", "Martian");
  CHECK_THROWS_AS(config.schema(), InputError);
}

TEST_CASE("cli: a missing input file exits 2 and names the path") {
  const auto result = invoke({"cluster", "--county", "/nonexistent/county.csv"});
  CHECK(result.code == 2);
  CHECK(result.err.find("/nonexistent/county.csv") != std::string::npos);
  CHECK(invoke({"fit", "--survey", "/nonexistent/s.csv"}).code == 2);
  CHECK(invoke({"fit", "--bogus"}).code == 2);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"fit", "--config", "/nonexistent/run.cfg"}).code == 2);
}

TEST_CASE("cli cluster writes three artifacts, byte-identical on rerun") {
  const auto dir = scratch("cluster");
  const auto county = county_file(dir);
  const std::vector<std::string> args{"cluster", "--county", county.string(), "--kmax", "6", "--gap-refs", "30",
                                      "--seed", "11", "--out-dir", (dir / "a").string()};
  REQUIRE(invoke(args).code == 0);
  auto again = args;
  again.back() = (dir / "b").string();
  again.insert(again.end(), {"--workers", "3"});
  REQUIRE(invoke(again).code == 0);
  for (const char* name : {"gap_curve.tsv", "cluster_assignments.tsv", "cluster_summary.txt"}) {
    REQUIRE(fs::exists(dir / "a" / name));
    const auto text = slurp(dir / "a" / name);
    CHECK(text == slurp(dir / "b" / name));
    CHECK(text.find("# seed=11 config_digest=") == 0);
  }
  // Labels ascend with the pooled rate: AL sits at 50%, AR at 70%, CA at 90%.
  std::istringstream assignments(without_comments(slurp(dir / "a" / "cluster_assignments.tsv")));
  std::map<std::string, int> label;
  std::string state;
  int cluster = 0;
  std::getline(assignments, state);
  while (assignments >> state >> cluster) label[state] = cluster;
  CHECK(label.size() == 15);
  CHECK(label["AL"] == 1);
  CHECK(label["AL"] < label["AR"]);
  CHECK(label["AR"] < label["CA"]);
}

TEST_CASE("cli simulate: round trip, n = 0, and invalid truth files") {
  const auto dir = scratch("simulate");
  spit(dir / "truth.txt", kTruth);
  REQUIRE(invoke({"simulate", "--truth", (dir / "truth.txt").string(), "--records", "1234", "--out-dir",
                  dir.string()})
              .code == 0);
  std::ifstream in(dir / "survey.csv");
  const auto data = parse_survey(in, SurveySchema::defaults());
  CHECK(data.records.size() == 1234);
  CHECK(data.dropped_count == 0);
  CHECK(data.states.size() == 49);

  CHECK(invoke({"simulate", "--truth", (dir / "truth.txt").string(), "--records", "0", "--out-dir",
                dir.string()})
            .code == 2);
  spit(dir / "short.txt", "beta0 = 1\n");
  CHECK(invoke({"simulate", "--truth", (dir / "short.txt").string(), "--out-dir", dir.string()}).code == 2);
  spit(dir / "extra.txt", std::string(kTruth) + "gamma = 1\n");
  CHECK(invoke({"simulate", "--truth", (dir / "extra.txt").string(), "--out-dir", dir.string()}).code == 2);
  spit(dir / "nan.txt", std::string(kTruth) + "alpha.TX = abc\n");
  CHECK(invoke({"simulate", "--truth", (dir / "nan.txt").string(), "--out-dir", dir.string()}).code == 2);
}

TEST_CASE("cli fit: artifacts, parameter count, manifest, reruns, and diagnose") {
  const auto dir = scratch("fit");
  spit(dir / "truth.txt", kTruth);
  REQUIRE(invoke({"simulate", "--truth", (dir / "truth.txt").string(), "--records", "5000", "--seed", "3",
                  "--out-dir", dir.string()})
              .code == 0);
  const std::vector<std::string> args{"fit",           "--survey", (dir / "survey.csv").string(),
                                      "--iterations",  "600",      "--seed",
                                      "3",             "--out-dir", (dir / "a").string()};
  const auto first = invoke(args);
  REQUIRE_MESSAGE(first.code == 0, first.err);
  auto again = args;
  again.back() = (dir / "b").string();
  REQUIRE(invoke(again).code == 0);

  for (const char* name : {"posterior_summary.tsv", "posterior_summary.txt", "random_intercepts.tsv",
                           "draws.tsv", "manifest.json", "diagnostics/beta2.txt", "diagnostics/sigma_alpha.txt"}) {
    REQUIRE(fs::exists(dir / "a" / name));
    CHECK(slurp(dir / "a" / name) == slurp(dir / "b" / name));
  }
  const auto summary = without_comments(slurp(dir / "a" / "posterior_summary.tsv"));
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 11 + 49 + 1);

  const auto manifest = slurp(dir / "a" / "manifest.json");
  CHECK(manifest.find("\"max_rhat\"") != std::string::npos);
  CHECK(manifest.find("\"divergences\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 3") != std::string::npos);

  REQUIRE(invoke({"diagnose", "--draws", (dir / "a" / "draws.tsv").string(), "--out-dir", (dir / "d").string()})
              .code == 0);
  CHECK(without_comments(slurp(dir / "d" / "posterior_summary.tsv")) == summary);
}

TEST_CASE("cli fit: a constant response exits 1 with a diagnosis") {
  const auto dir = scratch("degenerate");
  std::string text = "gender,race,education,income,state,vaccinated\n";
  for (int i = 0; i < 40; ++i) text += "Female,White,Graduate,Over150k,MA,1\nMale,Black,Associate,Under35k,TX,1\n";
  spit(dir / "all.csv", text);
  const auto result = invoke({"fit", "--survey", (dir / "all.csv").string(), "--iterations", "400", "--out-dir",
                              dir.string()});
  CHECK(result.code == 1);
  CHECK(result.err.find("separation/degenerate response") != std::string::npos);
}

TEST_CASE("cli: simulate then fit covers the true beta2 in at least 9 of 10 seeds") {
  const auto dir = scratch("recovery");
  spit(dir / "truth.txt", kTruth);
  int covered = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto run_dir = dir / std::to_string(seed);
    const std::string s = std::to_string(seed);
    REQUIRE(invoke({"simulate", "--truth", (dir / "truth.txt").string(), "--records", "3000", "--seed", s,
                    "--out-dir", run_dir.string()})
                .code == 0);
    REQUIRE(invoke({"fit", "--survey", (run_dir / "survey.csv").string(), "--iterations", "1000", "--seed", s,
                    "--out-dir", run_dir.string()})
                .code == 0);
    std::ifstream draws(run_dir / "draws.tsv");
    const auto file = read_draws(draws);
    std::vector<ParameterLabel> labels;
    for (const auto& name : file.names) labels.push_back(label_from_name(name));
    const auto* beta2 = summarize_posterior(file.chains, labels).find("beta2");
    REQUIRE(beta2 != nullptr);
    covered += (beta2->q025 <= 1.24 && 1.24 <= beta2->q975) ? 1 : 0;
  }
  CHECK(covered >= 9);
}

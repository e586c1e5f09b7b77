#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "offpolicy/core.hpp"
#include "offpolicy/data_gen.hpp"
#include "offpolicy/io.hpp"
#include "offpolicy/selection.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "offpolicy_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

fs::path scratch(const std::string& name) {
  fs::path p = scratch_root() / name;
  fs::create_directories(p);
  return p;
}

// Runs the CLI binary with stdout/stderr captured; returns the exit code.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(OFFPOLICY_CLI_PATH) + " " + args +
                          " > " + (dir / "cli.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

std::string fixture(const std::string& name) {
  return std::string(OFFPOLICY_FIXTURES_DIR) + "/" + name;
}

// Converts the tiny multiclass fixture into a labeled bandit CSV at
// dir/bandit.csv and returns the CSV path.
std::string converted_dataset(const fs::path& dir) {
  const int rc = run_cli("convert " + fixture("multiclass_tiny.csv") +
                             " --epsilon 0.1 --seed 7 --name bandit.csv" +
                             " --out " + dir.string(),
                         dir);
  REQUIRE(rc == 0);
  return (dir / "bandit.csv").string();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

TEST_CASE("convert produces a loadable bandit dataset plus manifest") {
  const fs::path dir = scratch("convert");
  const std::string csv = converted_dataset(dir);

  const offpolicy::LoggedDataset data = offpolicy::load_logged_dataset(csv);
  CHECK(data.size() == 150);
  CHECK(data.action_count() == 3);
  CHECK(data.feature_dim() == 4);
  for (const auto& rec : data.records()) {
    CHECK(rec.context.label >= 0);  // labels survive the conversion
    CHECK(rec.propensity > 0.0);
    CHECK(rec.propensity <= 1.0);
    CHECK((rec.cost == 0.0 || rec.cost == -1.0));
  }

  const nlohmann::json manifest = read_json(dir / "manifest.json");
  CHECK(manifest.at("command") == "convert");
  CHECK(manifest.at("config").at("epsilon") == 0.1);
  CHECK(manifest.at("config").at("seed") == 7);
}

TEST_CASE("evaluate writes bound reports with LS at or below IX") {
  const fs::path dir = scratch("evaluate");
  const std::string csv = converted_dataset(dir);

  const int rc = run_cli("evaluate " + csv +
                             " --bounds LS,IX --delta 0.05 --out " +
                             dir.string(),
                         dir);
  CHECK(rc == 0);

  const nlohmann::json reports = read_json(dir / "reports.json");
  REQUIRE(reports.is_array());
  REQUIRE(reports.size() == 2);
  REQUIRE(reports[0].at("name") == "LS");
  REQUIRE(reports[1].at("name") == "IX");
  const double ls_upper = reports[0].at("upper").get<double>();
  const double ix_upper = reports[1].at("upper").get<double>();
  CHECK(std::isfinite(ls_upper));
  CHECK(std::isfinite(ix_upper));
  CHECK(ls_upper <= ix_upper);
  for (const auto& r : reports) {
    CHECK(r.at("delta") == 0.05);
    CHECK(r.at("lambda").get<double>() ==
          doctest::Approx(1.0 / std::sqrt(150.0)));
    CHECK(r.at("estimate").get<double>() <= 0.0);
    CHECK(r.at("upper").get<double>() >= r.at("estimate").get<double>());
  }
  CHECK(read_json(dir / "manifest.json").at("command") == "evaluate");
}

TEST_CASE("bad inputs exit with code 2") {
  const fs::path dir = scratch("badinput");
  const std::string csv = converted_dataset(dir);

  CHECK(run_cli("evaluate " + (dir / "no_such_file.csv").string(), dir) == 2);
  CHECK(run_cli("evaluate " + csv + " --delta 0", dir) == 2);
  CHECK(run_cli("evaluate " + csv + " --delta 1.5", dir) == 2);
  CHECK(run_cli("evaluate " + csv + " --bounds bogus", dir) == 2);
  CHECK(run_cli("evaluate " + csv + " --policy nonsense:1", dir) == 2);
  CHECK(run_cli("evaluate", dir) == 2);   // missing required argument
  CHECK(run_cli("frobnicate", dir) == 2); // unknown subcommand
  CHECK(run_cli("select " + csv, dir) == 2);  // no candidates
  CHECK(run_cli("study --preset bogus", dir) == 2);
  CHECK(run_cli("--help", dir) == 0);
}

TEST_CASE("select with a single candidate returns it") {
  const fs::path dir = scratch("select_solo");
  const std::string csv = converted_dataset(dir);

  const int rc = run_cli("select " + csv + " --candidate uniform" +
                             " --method ls --out " + dir.string(),
                         dir);
  CHECK(rc == 0);
  const nlohmann::json sel = read_json(dir / "selection.json");
  CHECK(sel.at("chosen") == "uniform");
  CHECK(sel.at("chosen_index") == 0);
  CHECK(sel.at("method") == "LS");
  CHECK(sel.at("scores").size() == 1);
  CHECK(sel.count("outcome") == 0);  // no behavior flag, no outcome
}

TEST_CASE("select matches the library run on identical inputs") {
  const fs::path dir = scratch("select_wiring");
  const std::string csv = converted_dataset(dir);

  const int rc = run_cli(
      "select " + csv +
          " --candidate uniform,ideal:0.1,faulty:0.3,faulty:0.25" +
          " --method ls --delta 0.05 --behavior faulty:0.25 --out " +
          dir.string(),
      dir);
  CHECK(rc == 0);
  const nlohmann::json sel = read_json(dir / "selection.json");
  REQUIRE(sel.at("scores").size() == 4);

  const offpolicy::LoggedDataset data = offpolicy::load_logged_dataset(csv);
  offpolicy::CandidateSet candidates;
  candidates.push_back(
      {"uniform", std::make_shared<offpolicy::UniformPolicy>(3)});
  candidates.push_back({"ideal:0.1", offpolicy::ideal_policy(3, 0.1)});
  candidates.push_back({"faulty:0.3", offpolicy::default_faulty_policy(3, 0.3)});
  candidates.push_back(
      {"faulty:0.25", offpolicy::default_faulty_policy(3, 0.25)});
  const offpolicy::SelectionResult res = offpolicy::select_with_method(
      data, candidates, offpolicy::SelectionMethod::Ls, 0.05, 0.0);

  CHECK(sel.at("chosen") == res.chosen);
  CHECK(sel.at("lambda").get<double>() == res.lambda_used);
  for (const auto& [name, score] : res.scores)
    CHECK(sel.at("scores").at(name).get<double>() ==
          doctest::Approx(score).epsilon(1e-12));
  const std::string outcome = sel.at("outcome").get<std::string>();
  CHECK((outcome == "Worse" || outcome == "Better" || outcome == "Best"));
}

TEST_CASE("ips chases a high-variance impostor that ls rejects") {
  const fs::path dir = scratch("select_impostor");

  // One lucky low-propensity record makes the always-act-1 policy look best
  // in raw importance weighting; the smoothed estimate discounts it.
  {
    std::ofstream csv(dir / "logged.csv");
    csv << "feature_0,action,cost,propensity\n";
    for (int i = 0; i < 40; ++i) csv << "1,0,-1,0.5\n";
    for (int i = 0; i < 9; ++i) csv << "1,0,0,0.5\n";
    csv << "1,1,-1,0.01\n";
  }
  {
    std::ofstream js(dir / "impostor.json");
    js << R"({"action_count":2,"feature_dim":1,"scale":1.0,)"
       << R"("theta":[-20.0,20.0]})";
  }
  const std::string csv = (dir / "logged.csv").string();
  const std::string impostor = "softmax:" + (dir / "impostor.json").string();
  const std::string flags =
      " --candidate uniform --candidate " + impostor + " --out " + dir.string();

  REQUIRE(run_cli("select " + csv + flags + " --method ips", dir) == 0);
  CHECK(read_json(dir / "selection.json").at("chosen") == impostor);

  REQUIRE(run_cli("select " + csv + flags + " --method ls", dir) == 0);
  CHECK(read_json(dir / "selection.json").at("chosen") == "uniform");
}

TEST_CASE("learn writes trace and checkpoint and resume continues epochs") {
  const fs::path dir = scratch("learn");
  const std::string csv = converted_dataset(dir);
  const fs::path d1 = dir / "run1";
  const fs::path d2 = dir / "run2";

  const int rc1 = run_cli("learn " + csv +
                              " --epochs 5 --lr 0.01 --mc-samples 8" +
                              " --grid-size 8 --seed 3 --out " + d1.string(),
                          dir);
  REQUIRE(rc1 == 0);

  const auto trace1 = read_csv(d1 / "trace.csv");
  REQUIRE(trace1.size() == 6);  // header + 5 epochs
  CHECK(trace1[0] ==
        std::vector<std::string>{"epoch", "lambda", "objective", "bound"});
  for (int e = 0; e < 5; ++e) CHECK(trace1[e + 1][0] == std::to_string(e));

  const nlohmann::json ckpt = read_json(d1 / "checkpoint.json");
  CHECK(ckpt.at("epoch") == 5);
  CHECK(ckpt.at("seed") == 3);
  CHECK(ckpt.at("objective") == "LS-LIN");
  CHECK(ckpt.at("action_count") == 3);
  CHECK(ckpt.at("feature_dim") == 4);

  const nlohmann::json learn1 = read_json(d1 / "learn.json");
  CHECK(learn1.at("epochs_completed") == 5);
  CHECK(std::isfinite(learn1.at("guaranteed_risk").get<double>()));
  CHECK(learn1.at("best_lambda").get<double>() > 0.0);

  const int rc2 = run_cli("learn " + csv + " --resume " +
                              (d1 / "checkpoint.json").string() +
                              " --epochs 3 --lr 0.01 --mc-samples 8" +
                              " --grid-size 8 --out " + d2.string(),
                          dir);
  REQUIRE(rc2 == 0);

  const auto trace2 = read_csv(d2 / "trace.csv");
  REQUIRE(trace2.size() == 4);  // header + epochs 5..7
  for (int e = 0; e < 3; ++e) CHECK(trace2[e + 1][0] == std::to_string(5 + e));
  CHECK(read_json(d2 / "checkpoint.json").at("epoch") == 8);
  CHECK(read_json(d2 / "learn.json").at("epochs_completed") == 8);
}

TEST_CASE("study coverage preset emits one coverage rate per bound") {
  const fs::path dir = scratch("study_coverage");
  const int rc = run_cli(
      "study --preset coverage --reps 20 --threads 2 --seed 99 --out " +
          dir.string(),
      dir);
  REQUIRE(rc == 0);

  const auto rows = read_csv(dir / "metrics.csv");
  REQUIRE(rows.size() == 6);  // header + 5 bounds
  CHECK(rows[0] == std::vector<std::string>{"scenario_id", "dataset", "method",
                                            "metric", "value", "stderr"});
  std::set<std::string> methods;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    methods.insert(rows[i][2]);
    CHECK(rows[i][3] == "coverage_rate");
    const double rate = std::stod(rows[i][4]);
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
  CHECK(methods == std::set<std::string>{"LS", "IX", "cIPS-L=1", "cIPS-EB",
                                         "subgaussian"});

  const nlohmann::json summary = read_json(dir / "summary.json");
  CHECK(summary.at("failures").empty());
  CHECK(summary.at("methods").size() == 5);
}

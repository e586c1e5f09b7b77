#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "offpolicy/bounds.hpp"
#include "offpolicy/core.hpp"
#include "offpolicy/data_gen.hpp"
#include "offpolicy/experiments.hpp"
#include "offpolicy/io.hpp"
#include "offpolicy/pac_learn.hpp"
#include "offpolicy/selection.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;
using offpolicy::LoggedDataset;
using offpolicy::Policy;

struct NamedPolicy {
  std::string name;
  std::shared_ptr<const Policy> policy;
};

std::shared_ptr<const Policy> load_softmax_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("missing file: " + path);
  nlohmann::json j;
  in >> j;
  const int k = j.at("action_count").get<int>();
  const int p = j.at("feature_dim").get<int>();
  const double scale = j.value("scale", 1.0);
  std::vector<double> theta = j.at("theta").get<std::vector<double>>();
  return offpolicy::linear_softmax_policy(std::move(theta), k, p, scale);
}

// Specs: uniform | ideal:TAU | faulty:TAU | softmax:FILE | lgp:CHECKPOINT
NamedPolicy make_policy(const std::string& spec, int action_count) {
  if (spec == "uniform")
    return {spec, std::make_shared<offpolicy::UniformPolicy>(action_count)};
  const auto colon = spec.find(':');
  if (colon != std::string::npos) {
    const std::string kind = spec.substr(0, colon);
    const std::string arg = spec.substr(colon + 1);
    if (kind == "ideal")
      return {spec, offpolicy::ideal_policy(action_count, std::stod(arg))};
    if (kind == "faulty")
      return {spec,
              offpolicy::default_faulty_policy(action_count, std::stod(arg))};
    if (kind == "softmax") return {spec, load_softmax_policy(arg)};
    if (kind == "lgp") {
      if (!fs::exists(arg)) throw std::invalid_argument("missing file: " + arg);
      const offpolicy::Checkpoint ckpt = offpolicy::load_checkpoint(arg);
      return {spec, std::make_shared<offpolicy::LgpPolicy>(
                        ckpt.posterior, offpolicy::PropensityMode::Quadrature)};
    }
  }
  throw std::invalid_argument("unknown policy spec: " + spec);
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory: " + out);
}

void write_manifest(const std::string& out, const std::string& command,
                    const nlohmann::json& config) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["config"] = config;
  offpolicy::write_text_file(out + "/manifest.json", j.dump(2) + "\n");
}

LoggedDataset load_dataset_checked(const std::string& path) {
  if (!fs::exists(path)) throw std::invalid_argument("missing file: " + path);
  return offpolicy::load_logged_dataset(path);
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("delta must lie in (0, 1]");
}

struct EvaluateOpts {
  std::string dataset;
  std::string policy = "uniform";
  std::vector<std::string> bounds = {"LS", "IX", "cIPS-L=1", "cIPS-EB"};
  double delta = 0.05;
  double lambda = 0.0;  // 0 = 1/sqrt(n)
  std::string out = "out";
};

int cmd_evaluate(const EvaluateOpts& o) {
  check_delta(o.delta);
  const LoggedDataset data = load_dataset_checked(o.dataset);
  const NamedPolicy target = make_policy(o.policy, data.action_count());
  const double lambda =
      o.lambda > 0.0 ? o.lambda
                     : 1.0 / std::sqrt(static_cast<double>(data.size()));
  const offpolicy::BoundConfig cfg{lambda, o.delta, 1};

  std::vector<offpolicy::BoundReport> reports;
  for (const std::string& b : o.bounds) {
    if (b == "LS")
      reports.push_back(offpolicy::ls_bound(data, *target.policy, cfg));
    else if (b == "IX")
      reports.push_back(offpolicy::ix_bound(data, *target.policy, cfg));
    else if (b == "cIPS-L=1")
      reports.push_back(
          offpolicy::second_moment_bound(data, *target.policy, cfg));
    else if (b == "cIPS-EB")
      reports.push_back(offpolicy::empirical_bernstein_bound(
          data, *target.policy, 1.0 / lambda, o.delta));
    else
      throw std::invalid_argument("unknown bound method: " + b);
  }

  std::printf("%-10s %12s %12s %12s %12s\n", "bound", "lambda", "estimate",
              "conf_term", "upper");
  for (const auto& r : reports)
    std::printf("%-10s %12.6g %12.6g %12.6g %12.6g\n", r.name.c_str(),
                r.lambda, r.estimate, r.confidence_term, r.upper);

  ensure_out_dir(o.out);
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json e;
    e["name"] = r.name;
    e["lambda"] = r.lambda;
    e["delta"] = r.delta;
    e["moment_order"] = r.moment_order;
    e["estimate"] = r.estimate;
    e["confidence_term"] = r.confidence_term;
    e["upper"] = r.upper;
    if (!std::isnan(r.clip_m)) e["clip_m"] = r.clip_m;
    jr.push_back(std::move(e));
  }
  offpolicy::write_text_file(o.out + "/reports.json", jr.dump(2) + "\n");
  write_manifest(o.out, "evaluate",
                 {{"dataset", o.dataset},
                  {"policy", o.policy},
                  {"bounds", o.bounds},
                  {"delta", o.delta},
                  {"lambda", lambda}});
  return 0;
}

struct SelectOpts {
  std::string dataset;
  std::vector<std::string> candidates;
  std::string method = "ls";
  std::string behavior;  // candidate name for outcome classification
  double delta = 0.05;
  double lambda = 0.0;
  bool sqrt_n_lambda = false;
  std::string out = "out";
};

offpolicy::SelectionMethod parse_method_flag(const std::string& s) {
  if (s == "ips") return offpolicy::SelectionMethod::Ips;
  if (s == "sn") return offpolicy::SelectionMethod::Sn;
  if (s == "cips-eb") return offpolicy::SelectionMethod::CipsEb;
  if (s == "ix") return offpolicy::SelectionMethod::Ix;
  if (s == "cips-l1") return offpolicy::SelectionMethod::CipsL1;
  if (s == "ls") return offpolicy::SelectionMethod::Ls;
  throw std::invalid_argument("unknown selection method: " + s);
}

int cmd_select(const SelectOpts& o) {
  check_delta(o.delta);
  if (o.candidates.empty())
    throw std::invalid_argument("select needs at least one --candidate");
  const LoggedDataset data = load_dataset_checked(o.dataset);

  offpolicy::CandidateSet candidates;
  for (const std::string& spec : o.candidates) {
    NamedPolicy np = make_policy(spec, data.action_count());
    for (const auto& c : candidates)
      if (c.name == np.name)
        throw std::invalid_argument("duplicate candidate: " + np.name);
    candidates.push_back({np.name, np.policy});
  }

  double lambda_override = o.lambda;
  if (o.sqrt_n_lambda && lambda_override <= 0.0)
    lambda_override = 1.0 / std::sqrt(static_cast<double>(data.size()));
  const offpolicy::SelectionResult res = offpolicy::select_with_method(
      data, candidates, parse_method_flag(o.method), o.delta, lambda_override);

  std::printf("chosen: %s (method %s, lambda %.6g)\n", res.chosen.c_str(),
              offpolicy::method_name(res.method), res.lambda_used);
  for (const auto& [name, score] : res.scores)
    std::printf("  %-24s %12.6g\n", name.c_str(), score);

  nlohmann::json js;
  js["chosen"] = res.chosen;
  js["chosen_index"] = res.chosen_index;
  js["method"] = offpolicy::method_name(res.method);
  js["lambda"] = res.lambda_used;
  js["delta"] = res.delta;
  js["scores"] = res.scores;

  // Outcome classification needs oracle labels on every record.
  bool labeled = true;
  for (const auto& rec : data.records())
    if (rec.context.label < 0) labeled = false;
  if (labeled && !o.behavior.empty()) {
    std::vector<offpolicy::Context> contexts;
    contexts.reserve(data.size());
    for (const auto& rec : data.records()) contexts.push_back(rec.context);
    const offpolicy::Environment env(std::move(contexts), data.action_count(),
                                     0.0);
    const offpolicy::SelectionOutcome oc =
        offpolicy::classify_outcome(res, candidates, env, o.behavior);
    std::printf("outcome: %s\n", offpolicy::outcome_name(oc));
    js["outcome"] = offpolicy::outcome_name(oc);
  }

  ensure_out_dir(o.out);
  offpolicy::write_text_file(o.out + "/selection.json", js.dump(2) + "\n");
  write_manifest(o.out, "select",
                 {{"dataset", o.dataset},
                  {"candidates", o.candidates},
                  {"method", o.method},
                  {"delta", o.delta},
                  {"lambda", res.lambda_used},
                  {"behavior", o.behavior}});
  return 0;
}

struct LearnOpts {
  std::string dataset;
  std::string objective = "ls-lin";
  double prior_sigma = 1.0;
  double delta = 0.05;
  double lr = 1e-3;
  int epochs = 100;
  int mc_samples = 32;
  int grid_size = 100;
  int minibatch = 0;
  std::uint64_t seed = 0;
  std::string resume;
  std::string out = "out";
};

int cmd_learn(const LearnOpts& o) {
  check_delta(o.delta);
  if (o.delta == 1.0)
    throw std::invalid_argument("delta must lie in (0, 1) for learning");
  const LoggedDataset data = load_dataset_checked(o.dataset);

  offpolicy::LearnConfig cfg;
  cfg.delta = o.delta;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.mc_samples = o.mc_samples;
  cfg.minibatch = o.minibatch;
  cfg.seed = o.seed;
  if (o.grid_size == 100)
    cfg.lambda_grid = offpolicy::default_lambda_grid();
  else {
    if (o.grid_size < 1)
      throw std::invalid_argument("grid size must be >= 1");
    cfg.lambda_grid.resize(o.grid_size);
    for (int i = 0; i < o.grid_size; ++i)
      cfg.lambda_grid[i] =
          o.grid_size == 1
              ? 1e-2
              : std::pow(10.0, -4.0 + 4.0 * i / (o.grid_size - 1.0));
  }
  if (o.objective == "ls-lin")
    cfg.objective = offpolicy::LearnObjective::LsLin;
  else if (o.objective == "ix")
    cfg.objective = offpolicy::LearnObjective::Ix;
  else
    throw std::invalid_argument("unknown objective: " + o.objective);

  std::string objective_name = o.objective == "ix" ? "IX" : "LS-LIN";
  if (!o.resume.empty()) {
    if (!fs::exists(o.resume))
      throw std::invalid_argument("missing file: " + o.resume);
    const offpolicy::Checkpoint ckpt = offpolicy::load_checkpoint(o.resume);
    cfg.prior = ckpt.prior;
    cfg.init = ckpt.posterior;
    cfg.start_epoch = ckpt.epoch;
    cfg.seed = ckpt.seed;
    objective_name = ckpt.objective;
    cfg.objective = ckpt.objective == "IX" ? offpolicy::LearnObjective::Ix
                                           : offpolicy::LearnObjective::LsLin;
  } else {
    cfg.prior = offpolicy::GaussianPosterior::centered(
        data.action_count(), data.feature_dim(), o.prior_sigma);
  }

  const offpolicy::LearnResult res = offpolicy::learn(data, cfg);
  std::printf("guaranteed risk: %.6g (lambda %.6g, %zu trace rows)\n",
              res.guaranteed_risk, res.best_lambda, res.trace.size());

  ensure_out_dir(o.out);
  offpolicy::Checkpoint ckpt;
  ckpt.posterior = res.posterior;
  ckpt.prior = cfg.prior;
  ckpt.seed = cfg.seed;
  ckpt.epoch = cfg.start_epoch + cfg.epochs;
  ckpt.objective = objective_name;
  offpolicy::save_checkpoint(ckpt, o.out + "/checkpoint.json");
  offpolicy::write_trace_csv(res.trace, o.out + "/trace.csv");
  nlohmann::json js;
  js["guaranteed_risk"] = res.guaranteed_risk;
  js["best_lambda"] = res.best_lambda;
  js["epochs_completed"] = ckpt.epoch;
  offpolicy::write_text_file(o.out + "/learn.json", js.dump(2) + "\n");
  write_manifest(o.out, "learn",
                 {{"dataset", o.dataset},
                  {"objective", objective_name},
                  {"delta", o.delta},
                  {"lr", o.lr},
                  {"epochs", o.epochs},
                  {"mc_samples", o.mc_samples},
                  {"grid_size", o.grid_size},
                  {"seed", cfg.seed},
                  {"resume", o.resume}});
  return 0;
}

struct StudyOpts {
  std::string preset;
  int threads = 1;
  int reps = 200;
  std::optional<std::uint64_t> seed;
  double delta = 0.05;
  std::string fixtures = "fixtures";
  std::string out = "out";
};

int cmd_study(const StudyOpts& o) {
  check_delta(o.delta);
  ensure_out_dir(o.out);
  offpolicy::StudyResult result;

  if (o.preset == "tightness-desk" || o.preset == "ops-desk" ||
      o.preset == "learning-desk") {
    offpolicy::ScenarioMatrix m;
    if (o.preset == "tightness-desk")
      m = offpolicy::tightness_desk_matrix();
    else if (o.preset == "ops-desk")
      m = offpolicy::ops_desk_matrix();
    else
      m = offpolicy::learning_desk_matrix(o.fixtures);
    m.threads = o.threads;
    m.delta = o.delta;
    if (o.seed) m.seed = *o.seed;
    if (o.preset == "tightness-desk")
      result = offpolicy::run_tightness(m);
    else if (o.preset == "ops-desk")
      result = offpolicy::run_selection_study(m);
    else
      result = offpolicy::run_learning_study(m);
  } else if (o.preset == "coverage") {
    if (o.reps < 1) throw std::invalid_argument("reps must be >= 1");
    const std::uint64_t seed = o.seed.value_or(0x636f76ull);
    const auto pool = offpolicy::make_blobs(50, 10, 8, 1.5, seed);
    const auto behavior = offpolicy::default_faulty_policy(10, 0.3);
    const auto env = offpolicy::make_environment(pool, 0.2, behavior);
    const auto target = offpolicy::ideal_policy(10, 0.15);
    result = offpolicy::run_coverage(
        env, *target, {"LS", "IX", "cIPS-L=1", "cIPS-EB", "subgaussian"},
        1000, o.reps, o.delta, seed, o.threads);
  } else {
    throw std::invalid_argument("unknown preset: " + o.preset);
  }

  offpolicy::write_metric_csv(result.rows, o.out + "/metrics.csv");
  offpolicy::write_text_file(o.out + "/summary.json",
                             offpolicy::summary_json(result));
  write_manifest(o.out, "study",
                 {{"preset", o.preset},
                  {"threads", o.threads},
                  {"reps", o.reps},
                  {"delta", o.delta},
                  {"seed", o.seed ? nlohmann::json(*o.seed)
                                  : nlohmann::json(nullptr)},
                  {"fixtures", o.fixtures}});
  if (!result.ok()) {
    for (const std::string& f : result.failures)
      std::fprintf(stderr, "cell failed: %s\n", f.c_str());
    return 1;
  }
  std::printf("%zu metric rows -> %s\n", result.rows.size(),
              (o.out + "/metrics.csv").c_str());
  return 0;
}

struct ConvertOpts {
  std::string input;
  std::string label_column = "label";
  std::string policy = "faulty:0.25";
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  std::string name = "bandit.csv";
  std::string out = "out";
};

int cmd_convert(const ConvertOpts& o) {
  if (!fs::exists(o.input))
    throw std::invalid_argument("missing file: " + o.input);
  if (!(o.epsilon >= 0.0 && o.epsilon <= 0.5))
    throw std::invalid_argument("epsilon must lie in [0, 0.5]");
  const offpolicy::MulticlassDataset mc =
      offpolicy::load_multiclass_csv(o.input, o.label_column);
  const NamedPolicy behavior = make_policy(o.policy, mc.class_count);
  const LoggedDataset data =
      offpolicy::bandit_feedback(mc, *behavior.policy, o.epsilon, o.seed);

  ensure_out_dir(o.out);
  offpolicy::DatasetMeta meta;
  meta.action_count = mc.class_count;
  meta.feature_dim = mc.feature_dim;
  meta.seed = o.seed;
  meta.scenario = "convert|" + o.input + "|policy=" + o.policy +
                  "|eps=" + std::to_string(o.epsilon);
  const std::string out_path = o.out + "/" + o.name;
  offpolicy::save_logged_dataset(data, out_path, meta);
  std::printf("wrote %zu records -> %s\n", data.size(), out_path.c_str());
  write_manifest(o.out, "convert",
                 {{"input", o.input},
                  {"label_column", o.label_column},
                  {"policy", o.policy},
                  {"epsilon", o.epsilon},
                  {"seed", o.seed},
                  {"name", o.name}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pessimistic off-policy evaluation, selection, and learning "
               "for offline contextual bandits"};
  app.set_config("--config")->envname("OFFPOLICY_CONFIG");
  app.require_subcommand(1);

  EvaluateOpts ev;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "Risk bounds for one policy");
  evaluate->add_option("dataset", ev.dataset, "Logged dataset CSV")
      ->required();
  evaluate->add_option("--policy", ev.policy,
                       "uniform | ideal:TAU | faulty:TAU | softmax:FILE | "
                       "lgp:CHECKPOINT");
  evaluate->add_option("--bounds", ev.bounds,
                       "Subset of LS, IX, cIPS-L=1, cIPS-EB")
      ->delimiter(',');
  evaluate->add_option("--delta", ev.delta, "Confidence level");
  evaluate->add_option("--lambda", ev.lambda,
                       "Smoothing rate (default 1/sqrt(n))");
  evaluate->add_option("--out", ev.out, "Output directory");

  SelectOpts se;
  CLI::App* select =
      app.add_subcommand("select", "Pessimistic policy selection");
  select->add_option("dataset", se.dataset, "Logged dataset CSV")->required();
  select->add_option("--candidate", se.candidates,
                     "Policy spec, repeatable (or comma separated)")
      ->delimiter(',');
  select->add_option("--method", se.method,
                     "ips | sn | cips-eb | ix | cips-l1 | ls");
  select->add_option("--behavior", se.behavior,
                     "Candidate name treated as the behavior policy");
  select->add_option("--delta", se.delta, "Confidence level");
  select->add_option("--lambda", se.lambda, "Smoothing rate override");
  select->add_flag("--sqrt-n-lambda", se.sqrt_n_lambda,
                   "Use 1/sqrt(n) instead of the calibrated default");
  select->add_option("--out", se.out, "Output directory");

  LearnOpts le;
  CLI::App* learn =
      app.add_subcommand("learn", "PAC-Bayes bound-minimization learning");
  learn->add_option("dataset", le.dataset, "Logged dataset CSV")->required();
  learn->add_option("--objective", le.objective, "ls-lin | ix");
  learn->add_option("--prior-sigma", le.prior_sigma,
                    "Scale of the centered Gaussian prior");
  learn->add_option("--delta", le.delta, "Confidence level");
  learn->add_option("--lr", le.lr, "Adam learning rate");
  learn->add_option("--epochs", le.epochs, "Training epochs");
  learn->add_option("--mc-samples", le.mc_samples,
                    "Monte-Carlo draws per propensity");
  learn->add_option("--grid-size", le.grid_size, "Lambda grid size");
  learn->add_option("--minibatch", le.minibatch,
                    "Records per step (0 = full batch)");
  learn->add_option("--seed", le.seed, "RNG seed");
  learn->add_option("--resume", le.resume, "Checkpoint to continue from");
  learn->add_option("--out", le.out, "Output directory");

  StudyOpts st;
  CLI::App* study = app.add_subcommand("study", "Experiment matrices");
  study
      ->add_option("--preset", st.preset,
                   "tightness-desk | coverage | ops-desk | learning-desk")
      ->required();
  study->add_option("--threads", st.threads, "Worker threads")
      ->envname("OFFPOLICY_THREADS");
  study->add_option("--reps", st.reps, "Coverage replications");
  study->add_option("--seed", st.seed, "Matrix seed override");
  study->add_option("--delta", st.delta, "Confidence level");
  study->add_option("--fixtures", st.fixtures, "Fixture directory");
  study->add_option("--out", st.out, "Output directory");

  ConvertOpts co;
  CLI::App* convert =
      app.add_subcommand("convert", "Multiclass CSV to bandit feedback");
  convert->add_option("input", co.input, "Multiclass CSV")->required();
  convert->add_option("--label-column", co.label_column, "Label column name");
  convert->add_option("--policy", co.policy, "Behavior policy spec");
  convert->add_option("--epsilon", co.epsilon, "Reward flip noise");
  convert->add_option("--seed", co.seed, "RNG seed");
  convert->add_option("--name", co.name, "Output CSV filename");
  convert->add_option("--out", co.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(ev);
    if (select->parsed()) return cmd_select(se);
    if (learn->parsed()) return cmd_learn(le);
    if (study->parsed()) return cmd_study(st);
    if (convert->parsed()) return cmd_convert(co);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

#include "offpolicy/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace offpolicy {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_double(const std::string& s, std::size_t row,
                    const std::string& column) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("non-numeric field '" + s + "' at row " +
                             std::to_string(row) + ", column " + column);
  }
}

}  // namespace

void save_logged_dataset(const LoggedDataset& data, const std::string& path,
                         const DatasetMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  const int p = data.feature_dim();
  bool has_labels = false;
  for (const LoggedRecord& r : data.records())
    if (r.context.label >= 0) has_labels = true;

  for (int j = 0; j < p; ++j) out << "feature_" << j << ',';
  out << "action,cost,propensity";
  if (has_labels) out << ",label";
  out << '\n';
  for (const LoggedRecord& r : data.records()) {
    for (int j = 0; j < p; ++j) out << fmt17(r.context.features[j]) << ',';
    out << r.action << ',' << fmt17(r.cost) << ',' << fmt17(r.propensity);
    if (has_labels) out << ',' << r.context.label;
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failure: " + path);

  nlohmann::json j;
  j["action_count"] = meta.action_count > 0 ? meta.action_count
                                            : data.action_count();
  j["feature_dim"] = p;
  j["seed"] = meta.seed;
  j["scenario"] = meta.scenario;
  write_text_file(meta_path(path), j.dump(2) + "\n");
}

bool dataset_meta_exists(const std::string& path) {
  return std::filesystem::exists(meta_path(path));
}

DatasetMeta load_dataset_meta(const std::string& path) {
  std::ifstream in(meta_path(path));
  if (!in) throw std::runtime_error("cannot open file: " + meta_path(path));
  nlohmann::json j;
  in >> j;
  DatasetMeta meta;
  meta.action_count = j.at("action_count").get<int>();
  meta.feature_dim = j.at("feature_dim").get<int>();
  meta.seed = j.value("seed", std::uint64_t{0});
  meta.scenario = j.value("scenario", std::string{});
  return meta;
}

LoggedDataset load_logged_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("csv parse failure at row 0: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);

  // Feature columns must be feature_0..feature_{p-1} in order.
  int p = 0;
  while (p < static_cast<int>(header.size()) &&
         header[p] == "feature_" + std::to_string(p))
    ++p;
  if (p == 0)
    throw std::runtime_error("csv parse failure at row 0: no feature columns");
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("missing column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t action_col = column("action");
  const std::size_t cost_col = column("cost");
  const std::size_t prop_col = column("propensity");
  const auto label_it = std::find(header.begin(), header.end(), "label");
  const bool has_label = label_it != header.end();
  const std::size_t label_col =
      has_label ? static_cast<std::size_t>(label_it - header.begin()) : 0;

  std::vector<LoggedRecord> records;
  std::size_t row = 1;  // file line number; the header is line 1
  int max_action = -1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("csv parse failure at row " +
                               std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    LoggedRecord rec;
    rec.context.features.resize(p);
    for (int j = 0; j < p; ++j)
      rec.context.features[j] =
          parse_double(fields[j], row, "feature_" + std::to_string(j));
    rec.action = static_cast<int>(parse_double(fields[action_col], row,
                                               "action"));
    rec.cost = parse_double(fields[cost_col], row, "cost");
    rec.propensity = parse_double(fields[prop_col], row, "propensity");
    if (has_label)
      rec.context.label =
          static_cast<int>(parse_double(fields[label_col], row, "label"));
    max_action = std::max(max_action, rec.action);
    records.push_back(std::move(rec));
  }

  int action_count = max_action + 1;
  if (dataset_meta_exists(path))
    action_count = load_dataset_meta(path).action_count;
  return LoggedDataset(std::move(records), action_count);
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["version"] = ckpt.version;
  j["action_count"] = ckpt.posterior.action_count;
  j["feature_dim"] = ckpt.posterior.feature_dim;
  j["mu"] = ckpt.posterior.mu;
  j["rho"] = ckpt.posterior.rho;
  j["prior_mu"] = ckpt.prior.mu;
  j["prior_rho"] = ckpt.prior.rho;
  j["seed"] = ckpt.seed;
  j["epoch"] = ckpt.epoch;
  j["objective"] = ckpt.objective;
  write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint parse failure: " +
                             std::string(e.what()));
  }
  Checkpoint ckpt;
  ckpt.version = j.at("version").get<int>();
  if (ckpt.version != 1)
    throw std::runtime_error("unsupported checkpoint version: " +
                             std::to_string(ckpt.version));
  const int k = j.at("action_count").get<int>();
  const int p = j.at("feature_dim").get<int>();
  ckpt.posterior.action_count = k;
  ckpt.posterior.feature_dim = p;
  ckpt.posterior.mu = j.at("mu").get<std::vector<double>>();
  ckpt.posterior.rho = j.at("rho").get<double>();
  ckpt.prior.action_count = k;
  ckpt.prior.feature_dim = p;
  ckpt.prior.mu = j.at("prior_mu").get<std::vector<double>>();
  ckpt.prior.rho = j.at("prior_rho").get<double>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.epoch = j.at("epoch").get<int>();
  ckpt.objective = j.value("objective", std::string{"LS-LIN"});
  const std::size_t want = static_cast<std::size_t>(k) * p;
  if (ckpt.posterior.mu.size() != want || ckpt.prior.mu.size() != want)
    throw std::runtime_error("checkpoint mu size mismatch");
  return ckpt;
}

void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "epoch,lambda,objective,bound\n";
  for (const TraceRow& t : trace)
    out << t.epoch << ',' << fmt17(t.lambda) << ',' << fmt17(t.objective)
        << ',' << fmt17(t.bound) << '\n';
  if (!out) throw std::runtime_error("write failure: " + path);
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failure: " + path);
}

}  // namespace offpolicy

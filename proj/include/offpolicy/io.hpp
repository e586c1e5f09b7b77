#pragma once

#include <string>
#include <vector>

#include "offpolicy/core.hpp"
#include "offpolicy/pac_learn.hpp"

namespace offpolicy {

// Sidecar metadata written next to a logged-dataset CSV as
// <path>.meta.json.
struct DatasetMeta {
  int action_count = 0;
  int feature_dim = 0;
  std::uint64_t seed = 0;
  std::string scenario;
};

// CSV columns: feature_0..feature_{p-1}, action, cost, propensity, plus a
// trailing label column when the records carry oracle labels (so selection
// outcomes stay classifiable after a round trip). Doubles use %.17g.
void save_logged_dataset(const LoggedDataset& data, const std::string& path,
                         const DatasetMeta& meta);

// Reads the CSV; the sidecar (when present) supplies the action count,
// otherwise max logged action + 1 is used.
LoggedDataset load_logged_dataset(const std::string& path);

bool dataset_meta_exists(const std::string& path);
DatasetMeta load_dataset_meta(const std::string& path);

// Versioned learning state: posterior + prior + enough bookkeeping to
// resume epoch numbering.
struct Checkpoint {
  int version = 1;
  GaussianPosterior posterior;
  GaussianPosterior prior;
  std::uint64_t seed = 0;
  int epoch = 0;  // epochs completed so far
  std::string objective = "LS-LIN";
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Columns: epoch,lambda,objective,bound; %.17g.
void write_trace_csv(const std::vector<TraceRow>& trace,
                     const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace offpolicy

#pragma once

// Training loop: full-batch rollouts from every demonstration's initial
// state, lambda-weighted discrepancy, backprop through the unrolled solver,
// clipped Adam update. Optional contraction-rate learning adds a penalty on
// 1/(gamma - gamma0)^2.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "renpol/data.hpp"
#include "renpol/loss.hpp"
#include "renpol/policy.hpp"
#include "renpol/rollout.hpp"

namespace renpol::train {

struct RateLearning {
  double mu = 0.1;
  double c = 0.0;
  double gamma0 = 0.0;
};

struct TrainConfig {
  PolicyConfig policy;
  rollout::SolverConfig solver;
  loss::Metric metric;
  RateLearning rate_learning;
  double lr = 1e-2;
  std::size_t epochs = 1000;
  std::uint64_t seed = 0;
  double eps_dist = 1e-9;
  double clip_norm = 10.0;
  std::size_t log_every = 50;
  std::size_t checkpoint_every = 0;  // 0: only at the end
  bool parallel = true;              // per-demo tapes across OpenMP threads

  void validate() const;
};

// Flat key=value document, '#' comments. Unknown keys are rejected.
std::map<std::string, std::string> parse_key_values(const std::string& text);
void apply_key_values(TrainConfig& cfg, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> to_key_values(const TrainConfig& cfg);

struct OptimizerState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<ad::Tensor> m;  // first moments, one per parameter
  std::vector<ad::Tensor> v;  // second moments

  static OptimizerState for_policy(const Policy& policy);
};

struct TrainSummary {
  std::size_t epochs_done = 0;
  double last_loss = 0.0;
  double last_gamma = 0.0;
  double last_eig_min = 0.0;
};

struct Checkpoint {
  int version = 1;
  TrainConfig config;
  Policy policy;
  OptimizerState opt;
  data::NormalizationSpec norm;
  TrainSummary summary;
  std::string rng_state;
};

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(const std::string& text);
void save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

// Prepared training data: normalized demos resampled to the horizon.
struct TrainingData {
  data::Dataset dataset;
  data::NormalizationSpec norm;
  std::vector<ad::Tensor> demos;  // H x N_y each
};

TrainingData prepare(const data::Dataset& raw, std::size_t horizon);
TrainingData prepare(const data::Dataset& raw, const data::NormalizationSpec& norm, std::size_t horizon);

struct Gradients {
  double loss = 0.0;
  std::vector<ad::Tensor> grads;  // parameter order
};

// Objective value and its gradient. Per-demo contributions are reduced in
// demo order, so `parallel` does not change a single bit of the result.
Gradients loss_and_gradients(const Policy& policy, std::span<const ad::Tensor> demos, const TrainConfig& cfg,
                             bool parallel);

// One Adam step; returns the objective before the update.
double train_step(Policy& policy, std::span<const ad::Tensor> demos, const TrainConfig& cfg, OptimizerState& opt);

struct LogRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double gamma = 0.0;
  double eig_min = 0.0;
  double wall_time = 0.0;
};
std::string to_json_line(const LogRecord& rec);

struct TrainOptions {
  std::ostream* log = nullptr;  // line-delimited JSON records
  std::filesystem::path checkpoint_path;  // empty: no periodic checkpoints
  std::function<void(const LogRecord&)> on_log;
};

Checkpoint start(const TrainConfig& cfg, const data::Dataset& raw);
// Continues training `ckpt` up to cfg.epochs total epochs.
void resume(Checkpoint& ckpt, const data::Dataset& raw, const TrainOptions& options = {});
Checkpoint train(const TrainConfig& cfg, const data::Dataset& raw, const TrainOptions& options = {});

}  // namespace renpol::train

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "reasonkit/kg_pipeline.hpp"
#include "reasonkit/losses.hpp"
#include "reasonkit/scorer.hpp"

namespace rk {

struct TrainConfig {
  int batch_size = 196;
  int max_epochs = 20;
  double learning_rate = 5e-5;
  int warmup_steps = 0;            // linear ramp to the peak rate; 0 disables
  double early_stop_delta = 0.01;  // relative validation-loss change
  double grad_clip_norm = 1.0;     // 0 disables clipping
  std::uint64_t seed = 0;
  LossConfig loss;
  EncoderSpec encoder;

  void validate() const;
  json to_json() const;
  static TrainConfig from_json(const json& doc);
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_accuracy = 0.0;

  json to_json() const;
  static EpochStats from_json(const json& doc);
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based; minimum validation loss, ties earliest
  std::string stop_reason;  // "early_stop" or "max_epochs"
  bool supcon_degenerate_seen = false;

  json to_json() const;
  static TrainReport from_json(const json& doc);
};

// First 1-based epoch e >= 2 whose validation loss changed by less than
// delta relative to the previous epoch, or nullopt. A zero previous loss
// counts as converged only when the current loss is also zero.
std::optional<int> early_stop_epoch(const std::vector<double>& valid_losses,
                                    double delta);

// Fraction of examples whose correct answer outscores the sampled
// incorrect one; ties count as incorrect.
double validation_accuracy(const Scorer& scorer,
                           const std::vector<TrainingExample>& corpus);

using MetricsSink = std::function<void(const json&)>;

// Everything needed to continue an interrupted run exactly: parameters,
// optimizer moments, step counter, per-epoch history, best snapshot.
struct TrainState {
  int completed_epochs = 0;
  std::int64_t step = 0;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
  TrainReport report;
  std::vector<double> params;
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::vector<double> best_params;

  void save(const std::filesystem::path& path) const;
  static TrainState load(const std::filesystem::path& path);
};

class Trainer {
 public:
  Trainer(ReasonablenessModel& model, TrainConfig config);

  // Trains from scratch (seeded init) or from resume_from. The model ends
  // holding the best-validation-loss parameters. on_epoch_end receives the
  // resumable state after every epoch.
  TrainReport fit(const std::vector<TrainingExample>& train,
                  const std::vector<TrainingExample>& valid,
                  const MetricsSink& metrics = {},
                  const TrainState* resume_from = nullptr,
                  const std::function<void(const TrainState&)>& on_epoch_end = {});

 private:
  double evaluate_loss(const std::vector<TrainingExample>& corpus, bool* degenerate);

  ReasonablenessModel& model_;
  TrainConfig config_;
};

}  // namespace rk

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace rk {

using json = nlohmann::json;

// Log-probabilities straight from logits; never log of a softmax output.
inline std::pair<double, double> log_softmax2(double z_plus, double z_minus) {
  const double m = std::max(z_plus, z_minus);
  const double lse = m + std::log(std::exp(z_plus - m) + std::exp(z_minus - m));
  return {z_plus - lse, z_minus - lse};
}

struct LossConfig {
  std::string kind = "tbl";  // "tbl" or "mrl"
  double margin = 1.0;
  bool contrastive_enabled = false;
  double temperature = 0.1;
  double contrastive_weight = 1.0;

  void validate() const;
  json to_json() const;
  static LossConfig from_json(const json& doc);
  bool operator==(const LossConfig&) const = default;
};

// Head logits of one scored sequence.
struct QaLogits {
  double z_plus = 0.0;
  double z_minus = 0.0;
};

// One training batch after the forward pass: per example the logits of its
// correct-answer and incorrect-answer sequences, plus the pooled features
// and binary labels of every sequence for the contrastive term. Feature
// row i is example i's correct sequence; row n+i its incorrect sequence.
struct BatchScores {
  std::vector<QaLogits> correct;
  std::vector<QaLogits> wrong;
  Eigen::MatrixXd features;  // [2n, hidden] or empty when unused
  std::vector<int> labels;   // 1 reasonable, 0 unreasonable

  std::size_t size() const { return correct.size(); }
  void validate() const;

  // Test/oracle helper: builds logits whose softmax reproduces the given
  // probabilities exactly (logits = log p). No features.
  static BatchScores from_probabilities(const std::vector<double>& p_correct_plus,
                                        const std::vector<double>& p_wrong_plus);
};

// Gradients mirroring BatchScores' layout. Every with_grad entry point
// overwrites the whole struct; dfeatures stays empty unless the
// contrastive term produced feature gradients.
struct LossGrads {
  std::vector<QaLogits> dcorrect;
  std::vector<QaLogits> dwrong;
  Eigen::MatrixXd dfeatures;
};

struct LossResult {
  double value = 0.0;
  // Set when every anchor's positive set was empty, so the contrastive
  // term contributed nothing.
  bool supcon_degenerate = false;
};

// Binary cross-entropy over both sequences: -sum_i(log p_ac+ + log p_aw-).
double tbl(const BatchScores& batch);
double tbl_with_grad(const BatchScores& batch, LossGrads& grads);

// Hinge on the log-score gaps:
// sum_i [max(0, margin - log p_ac+ + log p_aw+) +
//        max(0, margin - log p_aw- + log p_ac-)].
double mrl(const BatchScores& batch, double margin);
double mrl_with_grad(const BatchScores& batch, double margin, LossGrads& grads);

// Supervised contrastive loss over the feature rows with cosine
// similarity: mean over anchors with a non-empty positive set of
// -(1/|P(i)|) sum_{j in P(i)} log(exp(s_ij/tau) / sum_{k != i} exp(s_ik/tau)).
LossResult supcon(const BatchScores& batch, double tau);
LossResult supcon_with_grad(const BatchScores& batch, double tau, LossGrads& grads);

// kind-selected main loss, plus weight * supcon when enabled.
LossResult total_loss(const BatchScores& batch, const LossConfig& config);
LossResult total_loss_with_grad(const BatchScores& batch, const LossConfig& config,
                                LossGrads& grads);

}  // namespace rk

#include "reasonkit/losses.hpp"

#include <limits>

#include "reasonkit/errors.hpp"

namespace rk {

using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

void LossConfig::validate() const {
  if (kind != "tbl" && kind != "mrl") throw ConfigError("loss kind must be tbl or mrl");
  if (margin < 0.0) throw ConfigError("margin must be non-negative");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (contrastive_weight < 0.0) throw ConfigError("contrastive weight must be non-negative");
}

json LossConfig::to_json() const {
  return json{{"kind", kind},
              {"margin", margin},
              {"contrastive_enabled", contrastive_enabled},
              {"temperature", temperature},
              {"contrastive_weight", contrastive_weight}};
}

LossConfig LossConfig::from_json(const json& doc) {
  LossConfig c;
  c.kind = doc.value("kind", std::string("tbl"));
  c.margin = doc.value("margin", 1.0);
  c.contrastive_enabled = doc.value("contrastive_enabled", false);
  c.temperature = doc.value("temperature", 0.1);
  c.contrastive_weight = doc.value("contrastive_weight", 1.0);
  c.validate();
  return c;
}

void BatchScores::validate() const {
  if (correct.empty()) throw DataError("empty batch");
  if (correct.size() != wrong.size()) {
    throw DataError("batch has mismatched correct/wrong sequence counts");
  }
  if (features.size() > 0 &&
      (features.rows() != long(labels.size()) ||
       labels.size() != 2 * correct.size())) {
    throw DataError("batch features/labels do not cover every sequence");
  }
}

BatchScores BatchScores::from_probabilities(const std::vector<double>& p_correct_plus,
                                            const std::vector<double>& p_wrong_plus) {
  if (p_correct_plus.size() != p_wrong_plus.size()) {
    throw DataError("probability lists differ in length");
  }
  auto to_logits = [](double p_plus) {
    if (p_plus <= 0.0 || p_plus >= 1.0) {
      throw DataError("probabilities must lie strictly inside (0, 1)");
    }
    return QaLogits{std::log(p_plus), std::log(1.0 - p_plus)};
  };
  BatchScores batch;
  for (const double p : p_correct_plus) batch.correct.push_back(to_logits(p));
  for (const double p : p_wrong_plus) batch.wrong.push_back(to_logits(p));
  return batch;
}

namespace {

// with_grad entry points own the whole LossGrads: previous contents are
// discarded, never accumulated into.
void reset_grads(const BatchScores& batch, LossGrads& grads) {
  grads.dcorrect.assign(batch.size(), QaLogits{});
  grads.dwrong.assign(batch.size(), QaLogits{});
  grads.dfeatures.resize(0, 0);
}

}  // namespace

// ---------------------------------------------------------------------------
// Traditional binary loss

double tbl(const BatchScores& batch) {
  batch.validate();
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [lc_plus, lc_minus] = log_softmax2(batch.correct[i].z_plus,
                                                  batch.correct[i].z_minus);
    const auto [lw_plus, lw_minus] = log_softmax2(batch.wrong[i].z_plus,
                                                  batch.wrong[i].z_minus);
    (void)lc_minus;
    (void)lw_plus;
    loss -= lc_plus + lw_minus;
  }
  return loss;
}

double tbl_with_grad(const BatchScores& batch, LossGrads& grads) {
  batch.validate();
  reset_grads(batch, grads);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [lc_plus, lc_minus] = log_softmax2(batch.correct[i].z_plus,
                                                  batch.correct[i].z_minus);
    const auto [lw_plus, lw_minus] = log_softmax2(batch.wrong[i].z_plus,
                                                  batch.wrong[i].z_minus);
    loss -= lc_plus + lw_minus;
    // d(-log p+)/dz+ = p+ - 1, d(-log p+)/dz- = p-
    grads.dcorrect[i].z_plus += std::exp(lc_plus) - 1.0;
    grads.dcorrect[i].z_minus += std::exp(lc_minus);
    grads.dwrong[i].z_minus += std::exp(lw_minus) - 1.0;
    grads.dwrong[i].z_plus += std::exp(lw_plus);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Margin ranking loss

double mrl(const BatchScores& batch, double margin) {
  batch.validate();
  if (margin < 0.0) throw ConfigError("margin must be non-negative");
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [lc_plus, lc_minus] = log_softmax2(batch.correct[i].z_plus,
                                                  batch.correct[i].z_minus);
    const auto [lw_plus, lw_minus] = log_softmax2(batch.wrong[i].z_plus,
                                                  batch.wrong[i].z_minus);
    loss += std::max(0.0, margin - lc_plus + lw_plus);
    loss += std::max(0.0, margin - lw_minus + lc_minus);
  }
  return loss;
}

double mrl_with_grad(const BatchScores& batch, double margin, LossGrads& grads) {
  batch.validate();
  if (margin < 0.0) throw ConfigError("margin must be non-negative");
  reset_grads(batch, grads);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [lc_plus, lc_minus] = log_softmax2(batch.correct[i].z_plus,
                                                  batch.correct[i].z_minus);
    const auto [lw_plus, lw_minus] = log_softmax2(batch.wrong[i].z_plus,
                                                  batch.wrong[i].z_minus);
    const double pc_plus = std::exp(lc_plus), pc_minus = std::exp(lc_minus);
    const double pw_plus = std::exp(lw_plus), pw_minus = std::exp(lw_minus);

    const double hinge1 = margin - lc_plus + lw_plus;
    if (hinge1 > 0.0) {
      loss += hinge1;
      // d(-lc+)/dz: (p+ - 1, p-); d(+lw+)/dz: (1 - p+, -p-)
      grads.dcorrect[i].z_plus += pc_plus - 1.0;
      grads.dcorrect[i].z_minus += pc_minus;
      grads.dwrong[i].z_plus += 1.0 - pw_plus;
      grads.dwrong[i].z_minus += -pw_minus;
    }
    const double hinge2 = margin - lw_minus + lc_minus;
    if (hinge2 > 0.0) {
      loss += hinge2;
      grads.dwrong[i].z_minus += pw_minus - 1.0;
      grads.dwrong[i].z_plus += pw_plus;
      grads.dcorrect[i].z_minus += 1.0 - pc_minus;
      grads.dcorrect[i].z_plus += -pc_plus;
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Supervised contrastive loss

namespace {

struct SupconScratch {
  long m = 0;
  MatX unit;  // row-normalized features
  VecX norms;
  MatX sim;  // cosine similarities
};

SupconScratch supcon_prepare(const BatchScores& batch) {
  if (batch.features.size() == 0 || batch.labels.empty()) {
    throw DataError("contrastive loss needs features and labels");
  }
  if (batch.features.rows() != long(batch.labels.size())) {
    throw DataError("feature/label count mismatch");
  }
  SupconScratch s;
  s.m = batch.features.rows();
  if (s.m < 2) throw DataError("contrastive loss needs at least two sequences");
  s.norms = batch.features.rowwise().norm();
  for (long i = 0; i < s.m; ++i) {
    if (s.norms(i) < 1e-12) {
      throw DataError("zero feature vector in contrastive batch");
    }
  }
  s.unit = (batch.features.array().colwise() / s.norms.array()).matrix();
  s.sim = s.unit * s.unit.transpose();
  return s;
}

}  // namespace

LossResult supcon(const BatchScores& batch, double tau) {
  LossGrads scratch;
  return supcon_with_grad(batch, tau, scratch);
}

LossResult supcon_with_grad(const BatchScores& batch, double tau, LossGrads& grads) {
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  reset_grads(batch, grads);
  const SupconScratch s = supcon_prepare(batch);
  const long m = s.m;

  MatX dsim = MatX::Zero(m, m);
  double total = 0.0;
  long active = 0;

  for (long i = 0; i < m; ++i) {
    std::vector<long> positives;
    for (long j = 0; j < m; ++j) {
      if (j != i && batch.labels[std::size_t(j)] == batch.labels[std::size_t(i)]) {
        positives.push_back(j);
      }
    }
    if (positives.empty()) continue;
    ++active;

    // log-sum-exp over k != i of sim/tau
    double mx = -std::numeric_limits<double>::infinity();
    for (long k = 0; k < m; ++k) {
      if (k != i) mx = std::max(mx, s.sim(i, k) / tau);
    }
    double z = 0.0;
    for (long k = 0; k < m; ++k) {
      if (k != i) z += std::exp(s.sim(i, k) / tau - mx);
    }
    const double lse = mx + std::log(z);

    double pos_mean = 0.0;
    for (const long j : positives) pos_mean += s.sim(i, j) / tau;
    pos_mean /= double(positives.size());
    total += lse - pos_mean;

    // dL_i/ds_ik = softmax_k/tau - [k in P]/(tau*|P|)
    for (long k = 0; k < m; ++k) {
      if (k == i) continue;
      dsim(i, k) += std::exp(s.sim(i, k) / tau - lse) / tau;
    }
    for (const long j : positives) {
      dsim(i, j) -= 1.0 / (tau * double(positives.size()));
    }
  }

  LossResult result;
  if (active == 0) {
    result.value = 0.0;
    result.supcon_degenerate = true;
    return result;
  }
  result.value = total / double(active);
  dsim /= double(active);

  // Cosine backward: ds_ik/dh_i = (unit_k - s_ik * unit_i) / |h_i|.
  MatX dfeat = MatX::Zero(m, batch.features.cols());
  for (long i = 0; i < m; ++i) {
    for (long k = 0; k < m; ++k) {
      if (k == i) continue;
      const double g = dsim(i, k);
      if (g == 0.0) continue;
      dfeat.row(i) += g * (s.unit.row(k) - s.sim(i, k) * s.unit.row(i)) / s.norms(i);
      dfeat.row(k) += g * (s.unit.row(i) - s.sim(i, k) * s.unit.row(k)) / s.norms(k);
    }
  }
  grads.dfeatures = std::move(dfeat);
  return result;
}

// ---------------------------------------------------------------------------

LossResult total_loss(const BatchScores& batch, const LossConfig& config) {
  config.validate();
  LossResult result;
  result.value = config.kind == "tbl" ? tbl(batch) : mrl(batch, config.margin);
  if (config.contrastive_enabled) {
    const LossResult sc = supcon(batch, config.temperature);
    result.value += config.contrastive_weight * sc.value;
    result.supcon_degenerate = sc.supcon_degenerate;
  }
  return result;
}

LossResult total_loss_with_grad(const BatchScores& batch, const LossConfig& config,
                                LossGrads& grads) {
  config.validate();
  LossResult result;
  result.value = config.kind == "tbl" ? tbl_with_grad(batch, grads)
                                      : mrl_with_grad(batch, config.margin, grads);
  if (config.contrastive_enabled) {
    LossGrads sc_grads;
    const LossResult sc = supcon_with_grad(batch, config.temperature, sc_grads);
    result.value += config.contrastive_weight * sc.value;
    result.supcon_degenerate = sc.supcon_degenerate;
    if (sc_grads.dfeatures.size() > 0) {
      sc_grads.dfeatures *= config.contrastive_weight;
      grads.dfeatures = std::move(sc_grads.dfeatures);
    }
  }
  return result;
}

}  // namespace rk

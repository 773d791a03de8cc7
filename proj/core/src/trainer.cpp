#include "reasonkit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "reasonkit/errors.hpp"
#include "reasonkit/rng.hpp"

namespace rk {

using MatX = Eigen::MatrixXd;

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be non-negative");
  if (early_stop_delta <= 0.0 || early_stop_delta >= 1.0) {
    throw ConfigError("early_stop_delta must lie in (0, 1)");
  }
  if (grad_clip_norm < 0.0) throw ConfigError("grad_clip_norm must be non-negative");
  loss.validate();
  encoder.validate();
}

json TrainConfig::to_json() const {
  return json{{"batch_size", batch_size},
              {"max_epochs", max_epochs},
              {"learning_rate", learning_rate},
              {"warmup_steps", warmup_steps},
              {"early_stop_delta", early_stop_delta},
              {"grad_clip_norm", grad_clip_norm},
              {"seed", seed},
              {"loss", loss.to_json()},
              {"encoder", encoder.to_json()}};
}

TrainConfig TrainConfig::from_json(const json& doc) {
  TrainConfig c;
  c.batch_size = doc.value("batch_size", 196);
  c.max_epochs = doc.value("max_epochs", 20);
  c.learning_rate = doc.value("learning_rate", 5e-5);
  c.warmup_steps = doc.value("warmup_steps", 0);
  c.early_stop_delta = doc.value("early_stop_delta", 0.01);
  c.grad_clip_norm = doc.value("grad_clip_norm", 1.0);
  c.seed = doc.value("seed", std::uint64_t(0));
  if (doc.contains("loss")) c.loss = LossConfig::from_json(doc.at("loss"));
  if (doc.contains("encoder")) c.encoder = EncoderSpec::from_json(doc.at("encoder"));
  c.validate();
  return c;
}

json EpochStats::to_json() const {
  return json{{"epoch", epoch},
              {"train_loss", train_loss},
              {"valid_loss", valid_loss},
              {"valid_accuracy", valid_accuracy}};
}

EpochStats EpochStats::from_json(const json& doc) {
  EpochStats s;
  s.epoch = doc.at("epoch").get<int>();
  s.train_loss = doc.at("train_loss").get<double>();
  s.valid_loss = doc.at("valid_loss").get<double>();
  s.valid_accuracy = doc.at("valid_accuracy").get<double>();
  return s;
}

json TrainReport::to_json() const {
  json epochs_json = json::array();
  for (const auto& e : epochs) epochs_json.push_back(e.to_json());
  return json{{"epochs", epochs_json},
              {"best_epoch", best_epoch},
              {"stop_reason", stop_reason},
              {"supcon_degenerate_seen", supcon_degenerate_seen}};
}

TrainReport TrainReport::from_json(const json& doc) {
  TrainReport r;
  for (const auto& e : doc.at("epochs")) r.epochs.push_back(EpochStats::from_json(e));
  r.best_epoch = doc.at("best_epoch").get<int>();
  r.stop_reason = doc.at("stop_reason").get<std::string>();
  r.supcon_degenerate_seen = doc.value("supcon_degenerate_seen", false);
  return r;
}

std::optional<int> early_stop_epoch(const std::vector<double>& valid_losses,
                                    double delta) {
  for (std::size_t e = 1; e < valid_losses.size(); ++e) {
    const double prev = valid_losses[e - 1];
    const double cur = valid_losses[e];
    double change;
    if (prev == 0.0) {
      change = cur == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      change = std::abs(cur - prev) / std::abs(prev);
    }
    if (change < delta) return int(e) + 1;
  }
  return std::nullopt;
}

double validation_accuracy(const Scorer& scorer,
                           const std::vector<TrainingExample>& corpus) {
  if (corpus.empty()) throw DataError("validation accuracy over an empty corpus");
  constexpr std::size_t kChunk = 128;
  std::size_t hits = 0;
  for (std::size_t at = 0; at < corpus.size(); at += kChunk) {
    const std::size_t n = std::min(kChunk, corpus.size() - at);
    std::vector<TextPair> inputs;
    inputs.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      inputs.push_back({corpus[at + i].question, corpus[at + i].correct_answer});
    }
    for (std::size_t i = 0; i < n; ++i) {
      inputs.push_back({corpus[at + i].question, corpus[at + i].incorrect_answer});
    }
    const auto scores = scorer.score_batch(inputs);
    for (std::size_t i = 0; i < n; ++i) {
      if (scores[i].p_plus > scores[n + i].p_plus) ++hits;
    }
  }
  return double(hits) / double(corpus.size());
}

// ---------------------------------------------------------------------------
// Resumable state archive

namespace {
constexpr char kStateMagic[8] = {'R', 'K', 'T', 'R', 'S', 'T', '1', '\n'};

void write_blob(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), long(v.size() * sizeof(double)));
}

std::vector<double> read_blob(std::ifstream& in, std::size_t n) {
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), long(n * sizeof(double)));
  return v;
}
}  // namespace

void TrainState::save(const std::filesystem::path& path) const {
  const json header{{"completed_epochs", completed_epochs},
                    {"step", step},
                    {"best_epoch", best_epoch},
                    {"best_valid_loss", best_valid_loss},
                    {"report", report.to_json()},
                    {"param_count", params.size()}};
  const std::string bytes = header.dump();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write train state: " + path.string());
  out.write(kStateMagic, sizeof(kStateMagic));
  const std::uint64_t len = bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(bytes.data(), long(bytes.size()));
  write_blob(out, params);
  write_blob(out, adam_m);
  write_blob(out, adam_v);
  write_blob(out, best_params);
  if (!out) throw IoError("short write on train state: " + path.string());
}

TrainState TrainState::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read train state: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kStateMagic, sizeof(kStateMagic)) != 0) {
    throw DataError("not a train-state file: " + path.string());
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ULL << 31)) {
    throw DataError("corrupt train-state header: " + path.string());
  }
  std::string bytes(len, '\0');
  in.read(bytes.data(), long(len));
  if (!in) throw DataError("truncated train-state header: " + path.string());
  const json header = json::parse(bytes, nullptr, false);
  if (header.is_discarded()) {
    throw DataError("train-state header is not valid JSON: " + path.string());
  }
  TrainState st;
  st.completed_epochs = header.at("completed_epochs").get<int>();
  st.step = header.at("step").get<std::int64_t>();
  st.best_epoch = header.at("best_epoch").get<int>();
  st.best_valid_loss = header.at("best_valid_loss").get<double>();
  st.report = TrainReport::from_json(header.at("report"));
  const auto n = header.at("param_count").get<std::size_t>();
  st.params = read_blob(in, n);
  st.adam_m = read_blob(in, n);
  st.adam_v = read_blob(in, n);
  st.best_params = read_blob(in, n);
  if (!in) throw DataError("truncated train-state blobs: " + path.string());
  return st;
}

// ---------------------------------------------------------------------------
// Training loop

Trainer::Trainer(ReasonablenessModel& model, TrainConfig config)
    : model_(model), config_(std::move(config)) {
  config_.validate();
}

namespace {

// Shared by the train step and validation: score a slice of examples and
// assemble the loss inputs. Sequence rows: correct answers then wrong ones.
struct BatchForward {
  std::unique_ptr<EncodeCache> cache;
  ReasonablenessModel::Forward fwd;
  BatchScores scores;
  std::size_t n = 0;
};

BatchForward forward_examples(const ReasonablenessModel& model,
                              const std::vector<TrainingExample>& corpus,
                              const std::vector<std::size_t>& order, std::size_t begin,
                              std::size_t end, bool want_cache, bool want_features) {
  BatchForward bf;
  bf.n = end - begin;
  std::vector<TextPair> inputs;
  inputs.reserve(2 * bf.n);
  for (std::size_t i = begin; i < end; ++i) {
    const auto& ex = corpus[order[i]];
    inputs.push_back({ex.question, ex.correct_answer});
  }
  for (std::size_t i = begin; i < end; ++i) {
    const auto& ex = corpus[order[i]];
    inputs.push_back({ex.question, ex.incorrect_answer});
  }
  if (want_cache) bf.cache = model.make_cache();
  bf.fwd = model.forward(inputs, bf.cache.get());
  const long n = long(bf.n);
  for (long i = 0; i < n; ++i) {
    bf.scores.correct.push_back({bf.fwd.logits(i, 0), bf.fwd.logits(i, 1)});
  }
  for (long i = 0; i < n; ++i) {
    bf.scores.wrong.push_back({bf.fwd.logits(n + i, 0), bf.fwd.logits(n + i, 1)});
  }
  if (want_features) {
    bf.scores.features = bf.fwd.features;
    bf.scores.labels.assign(std::size_t(2 * n), 0);
    for (long i = 0; i < n; ++i) bf.scores.labels[std::size_t(i)] = 1;
  }
  return bf;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

}  // namespace

double Trainer::evaluate_loss(const std::vector<TrainingExample>& corpus,
                              bool* degenerate) {
  const auto order = identity_order(corpus.size());
  const auto bs = std::size_t(config_.batch_size);
  double total = 0.0;
  for (std::size_t at = 0; at < corpus.size(); at += bs) {
    const std::size_t end = std::min(at + bs, corpus.size());
    const auto bf = forward_examples(model_, corpus, order, at, end,
                                     /*want_cache=*/false,
                                     config_.loss.contrastive_enabled);
    const LossResult res = total_loss(bf.scores, config_.loss);
    if (degenerate && res.supcon_degenerate) *degenerate = true;
    total += res.value;
  }
  return total / double(corpus.size());
}

TrainReport Trainer::fit(const std::vector<TrainingExample>& train,
                         const std::vector<TrainingExample>& valid,
                         const MetricsSink& metrics, const TrainState* resume_from,
                         const std::function<void(const TrainState&)>& on_epoch_end) {
  if (train.empty()) throw DataError("training corpus is empty");
  if (valid.empty()) throw DataError("validation corpus is empty");

  const std::size_t n_params = model_.param_count();
  TrainState st;
  if (resume_from) {
    st = *resume_from;
    if (st.params.size() != n_params) {
      throw ConfigError("resume state does not match the model's parameter count");
    }
    model_.set_params(st.params);
  } else {
    model_.init_params(config_.seed);
    st.params = model_.params_copy();
    st.adam_m.assign(n_params, 0.0);
    st.adam_v.assign(n_params, 0.0);
    st.best_params = st.params;
  }

  constexpr double kBeta1 = 0.9, kBeta2 = 0.98, kAdamEps = 1e-8;
  std::vector<double> grad(n_params);
  std::vector<double> valid_losses;
  for (const auto& e : st.report.epochs) valid_losses.push_back(e.valid_loss);

  std::string stop_reason = "max_epochs";
  // A restored history may already satisfy the stop rule; do not train past it.
  const auto prior_stop = early_stop_epoch(valid_losses, config_.early_stop_delta);
  const bool resumed_done = prior_stop && *prior_stop <= st.completed_epochs;
  if (resumed_done) stop_reason = "early_stop";
  for (int epoch = st.completed_epochs + 1;
       !resumed_done && epoch <= config_.max_epochs; ++epoch) {
    auto order = identity_order(train.size());
    Rng shuffle_rng(mix_seed(config_.seed, 1000 + std::uint64_t(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    const auto bs = std::size_t(config_.batch_size);
    std::size_t batch_index = 0;
    for (std::size_t at = 0; at < train.size(); at += bs, ++batch_index) {
      const std::size_t end = std::min(at + bs, train.size());
      auto bf = forward_examples(model_, train, order, at, end, /*want_cache=*/true,
                                 config_.loss.contrastive_enabled);
      LossGrads lgrads;
      const LossResult res = total_loss_with_grad(bf.scores, config_.loss, lgrads);
      if (!std::isfinite(res.value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
      epoch_loss += res.value;
      if (res.supcon_degenerate) st.report.supcon_degenerate_seen = true;

      const long n = long(bf.n);
      MatX dlogits(2 * n, 2);
      for (long i = 0; i < n; ++i) {
        dlogits(i, 0) = lgrads.dcorrect[std::size_t(i)].z_plus;
        dlogits(i, 1) = lgrads.dcorrect[std::size_t(i)].z_minus;
        dlogits(n + i, 0) = lgrads.dwrong[std::size_t(i)].z_plus;
        dlogits(n + i, 1) = lgrads.dwrong[std::size_t(i)].z_minus;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      model_.backward(*bf.cache, bf.fwd, dlogits, lgrads.dfeatures, grad);

      double norm_sq = 0.0;
      for (const double g : grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      if (config_.grad_clip_norm > 0.0 && norm > config_.grad_clip_norm) {
        const double scale = config_.grad_clip_norm / norm;
        for (double& g : grad) g *= scale;
      }

      ++st.step;
      double lr = config_.learning_rate;
      if (config_.warmup_steps > 0 && st.step < std::uint64_t(config_.warmup_steps)) {
        lr *= double(st.step) / double(config_.warmup_steps);
      }
      const double bc1 = 1.0 - std::pow(kBeta1, double(st.step));
      const double bc2 = 1.0 - std::pow(kBeta2, double(st.step));
      for (std::size_t i = 0; i < n_params; ++i) {
        st.adam_m[i] = kBeta1 * st.adam_m[i] + (1.0 - kBeta1) * grad[i];
        st.adam_v[i] = kBeta2 * st.adam_v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
        const double mhat = st.adam_m[i] / bc1;
        const double vhat = st.adam_v[i] / bc2;
        st.params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
      }
      model_.set_params(st.params);

      if (metrics) {
        metrics(json{{"type", "step"},
                     {"epoch", epoch},
                     {"step", st.step},
                     {"examples", bf.n},
                     {"batch_loss", res.value},
                     {"grad_norm", norm}});
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / double(train.size());
    bool degenerate = false;
    stats.valid_loss = evaluate_loss(valid, &degenerate);
    if (degenerate) st.report.supcon_degenerate_seen = true;
    stats.valid_accuracy = validation_accuracy(model_, valid);
    st.report.epochs.push_back(stats);
    valid_losses.push_back(stats.valid_loss);
    if (metrics) {
      metrics(json{{"type", "epoch"},
                   {"epoch", epoch},
                   {"train_loss", stats.train_loss},
                   {"valid_loss", stats.valid_loss},
                   {"valid_accuracy", stats.valid_accuracy}});
    }

    if (st.best_epoch == 0 || stats.valid_loss < st.best_valid_loss) {
      st.best_epoch = epoch;
      st.best_valid_loss = stats.valid_loss;
      st.best_params = st.params;
    }
    st.completed_epochs = epoch;
    if (on_epoch_end) on_epoch_end(st);

    const auto stop = early_stop_epoch(valid_losses, config_.early_stop_delta);
    if (stop && *stop <= epoch) {
      stop_reason = "early_stop";
      break;
    }
  }

  st.report.best_epoch = st.best_epoch;
  st.report.stop_reason = stop_reason;
  model_.set_params(st.best_params);
  return st.report;
}

}  // namespace rk

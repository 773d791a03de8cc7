#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "reasonkit/encoder.hpp"

namespace rk {

// Softmax-normalized judgment for one question-answer sequence, plus the
// pooled feature vector the contrastive loss consumes.
struct ScorePair {
  double p_plus = 0.5;   // reasonable
  double p_minus = 0.5;  // unreasonable
  Eigen::VectorXd h;
};

inline double reasonableness(const ScorePair& s) { return s.p_plus; }

// Two-way softmax with max subtraction; the pair sums to 1.
inline std::pair<double, double> softmax2(double z_plus, double z_minus) {
  const double m = std::max(z_plus, z_minus);
  const double ep = std::exp(z_plus - m);
  const double em = std::exp(z_minus - m);
  const double denom = ep + em;
  return {ep / denom, em / denom};
}

// Anything that can judge a question-answer pair. Evaluation and analysis
// depend only on this interface, so tests can stub it and encoder backends
// can be swapped without touching downstream code.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual ScorePair score(const std::string& question,
                          const std::string& answer) const = 0;
  virtual std::vector<ScorePair> score_batch(const std::vector<TextPair>& inputs) const;
};

// Encoder plus a two-node classification head. Parameters are exposed as
// one flat vector (encoder block, then head weights [hidden x 2] and head
// bias [2]) so the trainer can drive any backend uniformly.
class ReasonablenessModel : public Scorer {
 public:
  explicit ReasonablenessModel(std::unique_ptr<Encoder> encoder);
  ReasonablenessModel(ReasonablenessModel&&) noexcept = default;
  ReasonablenessModel& operator=(ReasonablenessModel&&) noexcept = default;

  void init_params(std::uint64_t seed);

  const Encoder& encoder() const { return *encoder_; }
  const EncoderSpec& spec() const { return encoder_->spec(); }
  int hidden_size() const { return spec().hidden_size; }

  std::size_t param_count() const;
  std::vector<double> params_copy() const;
  void set_params(const std::vector<double>& flat);

  struct Forward {
    Eigen::MatrixXd features;  // one row per input
    Eigen::MatrixXd logits;    // [n, 2]: reasonable, unreasonable
  };
  std::unique_ptr<EncodeCache> make_cache() const { return encoder_->make_cache(); }
  Forward forward(const std::vector<TextPair>& inputs, EncodeCache* cache) const;

  // Accumulates gradients into grad (sized param_count, caller-zeroed).
  // dlogits pairs with Forward.logits; dfeatures carries any extra loss
  // terms on the features themselves and may be empty.
  void backward(const EncodeCache& cache, const Forward& fwd,
                const Eigen::MatrixXd& dlogits, const Eigen::MatrixXd& dfeatures,
                std::vector<double>& grad) const;

  ScorePair score(const std::string& question, const std::string& answer) const override;
  std::vector<ScorePair> score_batch(const std::vector<TextPair>& inputs) const override;

  // Single-file archive: magic, JSON header (spec, encoder state, metadata),
  // raw float64 parameter blob. Byte-identical for identical state.
  void save(const std::filesystem::path& path, const json& metadata) const;
  static ReasonablenessModel load(const std::filesystem::path& path);
  const json& metadata() const { return metadata_; }

 private:
  std::unique_ptr<Encoder> encoder_;
  std::vector<double> head_;  // W column-major [H x 2], then bias [2]
  json metadata_;
};

}  // namespace rk

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "reasonkit/vocab.hpp"

namespace rk {

using json = nlohmann::json;

inline constexpr const char* kToyTransformerKind = "toy-transformer";
inline constexpr const char* kExternalPretrainedKind = "external-pretrained";

struct EncoderSpec {
  std::string kind = kToyTransformerKind;
  int max_sequence_length = 64;
  int hidden_size = 128;
  int num_layers = 2;
  int num_heads = 4;
  int ffn_size = 256;

  void validate() const;
  json to_json() const;
  static EncoderSpec from_json(const json& doc);
  bool operator==(const EncoderSpec&) const = default;
};

// One scored input: a question and a candidate answer. The answer may be
// empty when embedding free-standing sentences.
struct TextPair {
  std::string question;
  std::string answer;
};

// Opaque per-batch activation store handed from encode() to backward().
struct EncodeCache {
  virtual ~EncodeCache() = default;
};

// Text-to-feature backend. Produces one feature row per input; trainable
// backends expose a flat parameter buffer and gradient accumulation.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual const EncoderSpec& spec() const = 0;
  virtual std::size_t param_count() const = 0;  // 0 for frozen adapters
  virtual double* param_data() = 0;
  virtual const double* param_data() const = 0;
  virtual void init_params(std::uint64_t seed) = 0;

  virtual std::unique_ptr<EncodeCache> make_cache() const = 0;

  // Returns features, one row per input, hidden_size columns. cache may be
  // null for inference-only calls.
  virtual Eigen::MatrixXd encode(const std::vector<TextPair>& inputs,
                                 EncodeCache* cache) const = 0;

  // Accumulates d(loss)/d(params) into grad[0..param_count) given the
  // gradient with respect to the features of the cached batch.
  virtual void backward(const EncodeCache& cache, const Eigen::MatrixXd& dfeatures,
                        double* grad) const = 0;

  // Architecture state minus parameters (vocabulary, embedding tables'
  // source), enough to reconstruct via make_encoder().
  virtual json state_json() const = 0;
};

// Trainable-from-scratch transformer encoder: learned token/position
// embeddings, post-norm self-attention blocks, ReLU feed-forward, features
// pooled from the sequence-start position.
class ToyTransformer : public Encoder {
 public:
  ToyTransformer(EncoderSpec spec, Vocab vocab);

  const EncoderSpec& spec() const override { return spec_; }
  const Vocab& vocab() const { return vocab_; }
  std::size_t param_count() const override { return params_.size(); }
  double* param_data() override { return params_.data(); }
  const double* param_data() const override { return params_.data(); }
  void init_params(std::uint64_t seed) override;

  std::unique_ptr<EncodeCache> make_cache() const override;
  Eigen::MatrixXd encode(const std::vector<TextPair>& inputs,
                         EncodeCache* cache) const override;
  void backward(const EncodeCache& cache, const Eigen::MatrixXd& dfeatures,
                double* grad) const override;
  json state_json() const override;

  // Token-id forward, exposed so tests can drive exact sequences.
  Eigen::MatrixXd encode_ids(const std::vector<std::vector<int>>& ids,
                             EncodeCache* cache) const;

 private:
  struct Cache;
  EncoderSpec spec_;
  Vocab vocab_;
  std::vector<double> params_;
};

// Frozen adapter over precomputed sentence embeddings, keyed by the
// assembled question-answer text. Stands in for an external pretrained
// sentence encoder; only the downstream head trains.
class PrecomputedEmbeddings : public Encoder {
 public:
  PrecomputedEmbeddings(EncoderSpec spec,
                        std::map<std::string, std::vector<double>> table);

  // Loads JSONL rows {"text": ..., "embedding": [...]}.
  static PrecomputedEmbeddings load_jsonl(const std::filesystem::path& path,
                                          int max_sequence_length = 64);

  const EncoderSpec& spec() const override { return spec_; }
  std::size_t param_count() const override { return 0; }
  double* param_data() override { return nullptr; }
  const double* param_data() const override { return nullptr; }
  void init_params(std::uint64_t) override {}

  std::unique_ptr<EncodeCache> make_cache() const override;
  Eigen::MatrixXd encode(const std::vector<TextPair>& inputs,
                         EncodeCache* cache) const override;
  void backward(const EncodeCache&, const Eigen::MatrixXd&, double*) const override {}
  json state_json() const override;

 private:
  EncoderSpec spec_;
  std::map<std::string, std::vector<double>> table_;
};

// Reconstructs an encoder from spec + state_json() output.
std::unique_ptr<Encoder> make_encoder(const EncoderSpec& spec, const json& state);

}  // namespace rk

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reasonkit/scorer.hpp"

namespace rk {

struct VocabOverlapReport {
  std::string eval_name;
  std::string source_name;
  double overlap_pct = 0.0;
  std::size_t eval_vocab_size = 0;
  std::size_t source_vocab_size = 0;

  json to_json() const;
};

// Share of the evaluation set's vocabulary that the source also contains:
// 100 * |V_eval intersect V_source| / |V_eval|. Vocabularies are sets of
// lowercased tokens split on whitespace and punctuation (punctuation
// marks dropped, no stemming).
VocabOverlapReport vocab_overlap(const std::vector<std::string>& eval_texts,
                                 const std::vector<std::string>& source_texts,
                                 const std::string& eval_name,
                                 const std::string& source_name);

// Sentence-to-vector adapter for retrieval.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Eigen::VectorXd embed(const std::string& text) const = 0;
};

// Pooled features of the trained model.
class ModelEmbedder : public Embedder {
 public:
  explicit ModelEmbedder(const ReasonablenessModel& model) : model_(model) {}
  Eigen::VectorXd embed(const std::string& text) const override;

 private:
  const ReasonablenessModel& model_;
};

// Lookup over externally computed sentence embeddings (JSONL rows with
// text and embedding fields).
class PrecomputedEmbedder : public Embedder {
 public:
  explicit PrecomputedEmbedder(std::map<std::string, Eigen::VectorXd> table);
  static PrecomputedEmbedder load_jsonl(const std::filesystem::path& path);
  Eigen::VectorXd embed(const std::string& text) const override;

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

struct ScoredSentence {
  std::string sentence;
  double similarity = 0.0;
};

struct RetrievalResult {
  std::string query;
  std::vector<ScoredSentence> ranked;  // similarity non-increasing

  json to_json() const;
};

// Top-k pool sentences by cosine similarity to the query embedding. Ties
// keep pool order; k larger than the pool returns the whole pool ranked.
RetrievalResult retrieve_nearest(const std::string& query,
                                 const std::vector<std::string>& pool,
                                 const Embedder& embedder, int k);

}  // namespace rk

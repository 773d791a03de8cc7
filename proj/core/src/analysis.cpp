#include "reasonkit/analysis.hpp"

#include <algorithm>
#include <unordered_set>

#include "reasonkit/errors.hpp"
#include "reasonkit/io.hpp"
#include "reasonkit/text.hpp"

namespace rk {

json VocabOverlapReport::to_json() const {
  return json{{"eval_name", eval_name},
              {"source_name", source_name},
              {"overlap_pct", overlap_pct},
              {"eval_vocab_size", eval_vocab_size},
              {"source_vocab_size", source_vocab_size}};
}

namespace {

std::unordered_set<std::string> vocab_of(const std::vector<std::string>& texts) {
  std::unordered_set<std::string> vocab;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(to_lower(text), /*keep_punct=*/false)) {
      vocab.insert(std::move(tok));
    }
  }
  return vocab;
}

}  // namespace

VocabOverlapReport vocab_overlap(const std::vector<std::string>& eval_texts,
                                 const std::vector<std::string>& source_texts,
                                 const std::string& eval_name,
                                 const std::string& source_name) {
  if (eval_texts.empty() || source_texts.empty()) {
    throw DataError("vocabulary overlap needs non-empty corpora");
  }
  const auto eval_vocab = vocab_of(eval_texts);
  const auto source_vocab = vocab_of(source_texts);
  if (eval_vocab.empty()) {
    throw DataError("evaluation corpus has an empty vocabulary");
  }
  std::size_t shared = 0;
  for (const auto& tok : eval_vocab) shared += source_vocab.count(tok);

  VocabOverlapReport report;
  report.eval_name = eval_name;
  report.source_name = source_name;
  report.eval_vocab_size = eval_vocab.size();
  report.source_vocab_size = source_vocab.size();
  report.overlap_pct = 100.0 * double(shared) / double(eval_vocab.size());
  return report;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd ModelEmbedder::embed(const std::string& text) const {
  return model_.score(text, "").h;
}

PrecomputedEmbedder::PrecomputedEmbedder(std::map<std::string, Eigen::VectorXd> table)
    : table_(std::move(table)) {
  if (table_.empty()) throw DataError("embedding table is empty");
}

PrecomputedEmbedder PrecomputedEmbedder::load_jsonl(const std::filesystem::path& path) {
  std::map<std::string, Eigen::VectorXd> table;
  for (const auto& row : read_jsonl(path)) {
    if (!row.contains("text") || !row.contains("embedding")) {
      throw DataError("embedding rows need text and embedding fields: " + path.string());
    }
    const auto values = row.at("embedding").get<std::vector<double>>();
    table[row.at("text").get<std::string>()] =
        Eigen::Map<const Eigen::VectorXd>(values.data(), long(values.size()));
  }
  return PrecomputedEmbedder(std::move(table));
}

Eigen::VectorXd PrecomputedEmbedder::embed(const std::string& text) const {
  const auto it = table_.find(text);
  if (it == table_.end()) throw DataError("no precomputed embedding for: " + text);
  return it->second;
}

// ---------------------------------------------------------------------------

json RetrievalResult::to_json() const {
  json ranked_json = json::array();
  for (const auto& s : ranked) {
    ranked_json.push_back(json{{"sentence", s.sentence}, {"similarity", s.similarity}});
  }
  return json{{"query", query}, {"results", ranked_json}};
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = a.norm() * b.norm();
  if (denom < 1e-30) return 0.0;
  return a.dot(b) / denom;
}

}  // namespace

RetrievalResult retrieve_nearest(const std::string& query,
                                 const std::vector<std::string>& pool,
                                 const Embedder& embedder, int k) {
  if (k < 1) throw ConfigError("retrieval k must be >= 1");
  if (pool.empty()) throw DataError("retrieval pool is empty");
  const Eigen::VectorXd q = embedder.embed(query);

  std::vector<ScoredSentence> scored;
  scored.reserve(pool.size());
  for (const auto& sentence : pool) {
    scored.push_back({sentence, cosine(q, embedder.embed(sentence))});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.similarity > b.similarity;
  });
  if (std::size_t(k) < scored.size()) scored.resize(std::size_t(k));

  RetrievalResult result;
  result.query = query;
  result.ranked = std::move(scored);
  return result;
}

}  // namespace rk

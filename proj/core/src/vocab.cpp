#include "reasonkit/vocab.hpp"

#include <algorithm>

#include "reasonkit/errors.hpp"
#include "reasonkit/text.hpp"

namespace rk {

namespace {

const char* kSpecials[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

}  // namespace

Vocab Vocab::build(const std::vector<std::string>& texts, std::size_t max_size,
                   std::size_t min_count) {
  if (texts.empty()) throw DataError("cannot build a vocabulary from zero texts");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : tokenize(to_lower(text), /*keep_punct=*/true)) {
      ++counts[tok];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> entries;
  entries.reserve(counts.size());
  for (auto& [tok, count] : counts) {
    if (count >= min_count) entries.emplace_back(tok, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens;
  for (const auto* s : kSpecials) tokens.emplace_back(s);
  for (auto& [tok, _] : entries) {
    if (max_size > 0 && tokens.size() >= max_size) break;
    tokens.push_back(std::move(tok));
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens_in_id_order) {
  if (tokens_in_id_order.size() < 4) {
    throw DataError("vocabulary must include the four reserved tokens");
  }
  Vocab v;
  v.tokens_ = std::move(tokens_in_id_order);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    const auto [it, inserted] = v.index_.emplace(v.tokens_[i], int(i));
    if (!inserted) throw DataError("duplicate vocabulary token: " + v.tokens_[i]);
  }
  return v;
}

int Vocab::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || std::size_t(id) >= tokens_.size()) {
    throw DataError("token id out of range: " + std::to_string(id));
  }
  return tokens_[std::size_t(id)];
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& tok : tokenize(to_lower(text), /*keep_punct=*/true)) {
    ids.push_back(id(tok));
  }
  return ids;
}

std::vector<int> Vocab::pack_pair(std::string_view question, std::string_view answer,
                                  int max_len) const {
  if (max_len < 8) throw ConfigError("sequence length must be at least 8");
  std::vector<int> q = encode(strip_answer_hole(question));
  std::vector<int> a = encode(answer);
  const bool has_answer = !a.empty();
  const std::size_t overhead = 1 + (has_answer ? 1 : 0);  // [CLS] and [SEP]
  std::size_t total = overhead + q.size() + a.size();
  const auto budget = std::size_t(max_len);
  while (total > budget && a.size() > 1) {
    a.pop_back();
    --total;
  }
  while (total > budget && !q.empty()) {
    q.pop_back();
    --total;
  }

  std::vector<int> seq;
  seq.reserve(total);
  seq.push_back(kCls);
  seq.insert(seq.end(), q.begin(), q.end());
  if (has_answer) {
    seq.push_back(kSep);
    seq.insert(seq.end(), a.begin(), a.end());
  }
  return seq;
}

json Vocab::to_json() const { return json{{"tokens", tokens_}}; }

Vocab Vocab::from_json(const json& doc) {
  if (!doc.contains("tokens") || !doc.at("tokens").is_array()) {
    throw DataError("vocabulary JSON must carry a tokens array");
  }
  return from_tokens(doc.at("tokens").get<std::vector<std::string>>());
}

}  // namespace rk

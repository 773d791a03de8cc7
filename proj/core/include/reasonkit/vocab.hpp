#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace rk {

using json = nlohmann::json;

// Token vocabulary for the in-repo encoder. Text is lowercased and split on
// whitespace with punctuation as standalone tokens. Ids 0..3 are reserved.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  // Counts tokens over the corpus and keeps them ordered by count
  // descending, ties by token ascending. max_size 0 means unlimited
  // (max_size counts the four specials; min_count filters rare tokens).
  static Vocab build(const std::vector<std::string>& texts,
                     std::size_t max_size = 0, std::size_t min_count = 1);

  static Vocab from_tokens(std::vector<std::string> tokens_in_id_order);

  int id(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<int> encode(std::string_view text) const;

  // Builds the scored token sequence: start marker, question tokens, one
  // separator, answer tokens. An empty answer yields no separator segment.
  // Overflow beyond max_len drops answer tokens from the answer's end
  // first (never below one token), then question tokens from the
  // question's end. The question's answer-hole marker, if present, is
  // removed before tokenizing.
  std::vector<int> pack_pair(std::string_view question, std::string_view answer,
                             int max_len) const;

  json to_json() const;
  static Vocab from_json(const json& doc);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace rk

#include "reasonkit/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "reasonkit/errors.hpp"

namespace rk {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::string normalize_ws(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char ch : text) {
    if (is_space(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(ch);
  }
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string capitalize_first(std::string text) {
  for (char& c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0x80) break;  // leave non-ASCII starts alone
    if (std::isalpha(uc)) {
      c = static_cast<char>(std::toupper(uc));
      break;
    }
    if (!std::isspace(uc) && !std::ispunct(uc)) break;
  }
  return text;
}

std::vector<std::string> tokenize(std::string_view text, bool keep_punct) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (const char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (is_space(uc)) {
      flush();
    } else if (is_punct(uc)) {
      flush();
      if (keep_punct) tokens.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

std::string assemble_sequence(std::string_view question, std::string_view answer) {
  const auto pos = question.find(kAnswerHole);
  std::string out;
  if (pos == std::string_view::npos) {
    out.reserve(question.size() + answer.size() + 1);
    out.append(question);
    if (!out.empty() && !answer.empty()) out.push_back(' ');
    out.append(answer);
    return out;
  }
  out.append(question.substr(0, pos));
  out.append(answer);
  out.append(question.substr(pos + kAnswerHole.size()));
  return out;
}

std::string strip_answer_hole(std::string_view question) {
  const auto pos = question.find(kAnswerHole);
  if (pos == std::string_view::npos) return std::string(question);
  std::string out(question.substr(0, pos));
  out.append(question.substr(pos + kAnswerHole.size()));
  return normalize_ws(out);
}

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"') {
      if (in_quotes && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else {
        in_quotes = !in_quotes;
      }
    } else if (c == ',' && !in_quotes) {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

std::vector<std::string> split_tsv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (const char c : line) {
    if (c == '\t') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string fingerprint_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[std::size_t(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read file for fingerprint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fingerprint_hex(buf.str());
}

}  // namespace rk

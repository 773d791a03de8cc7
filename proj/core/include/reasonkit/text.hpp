#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rk {

// Marker inside a question string where the answer text is spliced in.
// Questions without the marker take the answer appended after one space.
inline constexpr std::string_view kAnswerHole = "{answer}";

// Trims leading/trailing whitespace and collapses internal runs to one
// space. Case is preserved.
std::string normalize_ws(std::string_view text);

std::string to_lower(std::string_view text);

// Uppercases the first ASCII letter, leaving the rest untouched.
std::string capitalize_first(std::string text);

// Splits on ASCII whitespace; punctuation characters become their own
// tokens when keep_punct is set and are dropped otherwise. Bytes >= 0x80
// are treated as word characters, so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text, bool keep_punct);

// Joins a question and a candidate answer into the scored sequence:
// either splices the answer into the question's answer hole or appends
// it after a single space.
std::string assemble_sequence(std::string_view question, std::string_view answer);

// Question text with the answer hole removed (for tokenization).
std::string strip_answer_hole(std::string_view question);

bool contains(std::string_view haystack, std::string_view needle);

// Splits one CSV record. Handles quoted cells and doubled quotes; cells
// never span lines.
std::vector<std::string> split_csv_line(const std::string& line);
std::vector<std::string> split_tsv_line(const std::string& line);

// FNV-1a 64-bit fingerprint, reported as 16 hex chars. Provenance
// fingerprinting only, not a cryptographic hash.
std::string fingerprint_hex(std::string_view bytes);
std::string file_fingerprint(const std::string& path);

}  // namespace rk

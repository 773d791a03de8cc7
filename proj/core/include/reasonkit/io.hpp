#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rk {

using json = nlohmann::json;

// Reads a whole file; IoError if unreadable.
std::string read_file(const std::filesystem::path& path);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// One JSON object per non-empty line. DataError on a malformed line
// (message carries the 1-based line number).
std::vector<json> read_jsonl(const std::filesystem::path& path);

// Writers emit UTF-8 with '\n' line endings and nlohmann's default
// (lexicographic) key order, so identical data produces identical bytes.
void write_file(const std::filesystem::path& path, std::string_view bytes);
void write_json(const std::filesystem::path& path, const json& value);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

}  // namespace rk

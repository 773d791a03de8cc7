#include "reasonkit/io.hpp"

#include <fstream>
#include <sstream>

#include "reasonkit/errors.hpp"

namespace rk {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lines.empty() && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    lines.push_back(line);
  }
  return lines;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<json> rows;
  rows.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json row = json::parse(lines[i], nullptr, false);
    if (row.is_discarded()) {
      throw DataError("invalid JSON at " + path.string() + ":" + std::to_string(i + 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const std::filesystem::path& path, const json& value) {
  write_file(path, value.dump(2) + "\n");
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string buf;
  for (const auto& row : rows) {
    buf += row.dump();
    buf += '\n';
  }
  write_file(path, buf);
}

}  // namespace rk

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace hoigen {

/// A complete (newline-terminated) line that is not a valid record.
class CorruptRecord : public std::runtime_error {
 public:
  CorruptRecord(std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct JsonlLine {
  std::size_t line;  // 1-based
  nlohmann::json value;
};

struct JsonlContents {
  std::vector<JsonlLine> records;
  std::uintmax_t complete_bytes = 0;  // length of the newline-terminated prefix
  bool torn_tail = false;             // bytes after the last newline
};

/// Reads a line-delimited JSON file. A missing file reads as empty. Bytes
/// after the final newline are a torn write and are reported, not parsed.
/// Blank lines are skipped. Throws CorruptRecord for a malformed complete line.
JsonlContents read_jsonl(const std::filesystem::path& path);

}  // namespace hoigen

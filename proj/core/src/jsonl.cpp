#include "hoigen/jsonl.hpp"

#include <fmt/format.h>

#include "hoigen/util.hpp"

namespace hoigen {

CorruptRecord::CorruptRecord(std::size_t line, const std::string& reason)
    : std::runtime_error(fmt::format("corrupt record at line {}: {}", line, reason)),
      line_(line) {}

JsonlContents read_jsonl(const std::filesystem::path& path) {
  JsonlContents out;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return out;
  const std::string text = read_text_file(path);

  std::size_t pos = 0;
  std::size_t line = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      out.torn_tail = true;
      break;
    }
    ++line;
    std::string_view body(text.data() + pos, nl - pos);
    if (!body.empty() && body.back() == '\r') body.remove_suffix(1);
    pos = nl + 1;
    out.complete_bytes = pos;
    if (trim(body).empty()) continue;
    try {
      out.records.push_back({line, nlohmann::json::parse(body)});
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptRecord(line, e.what());
    }
    if (!out.records.back().value.is_object()) throw CorruptRecord(line, "not an object");
  }
  return out;
}

}  // namespace hoigen

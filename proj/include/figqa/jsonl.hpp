#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "figqa/errors.hpp"

namespace figqa {

using Json = nlohmann::ordered_json;

/// Field access that reports schema problems with the record's line number.
template <typename T>
T require_field(const Json& record, const std::string& field, std::size_t line) {
  const auto it = record.find(field);
  if (it == record.end()) throw SchemaViolation(line, field, "missing");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaViolation(line, field, e.what());
  }
}

/// Calls `visit(record, line_number)` for every line. A truncated final line
/// (no trailing newline and not valid JSON) is skipped when `tolerate_torn_tail`
/// is set, which is how append-only logs look after a crash.
void read_jsonl(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& visit,
                bool tolerate_torn_tail = false);

/// Writes all lines to a temporary sibling and renames it into place.
void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<Json>& records);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Single-writer append log; every line is flushed before append() returns.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);
  void append(const Json& record);

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace figqa

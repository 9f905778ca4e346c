#include "figqa/jsonl.hpp"

#include <sstream>

namespace figqa {

void read_jsonl(const std::filesystem::path& path, const std::function<void(const Json&, std::size_t)>& visit,
                bool tolerate_torn_tail) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const bool terminated = eol != std::string::npos;
    if (!terminated) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record = Json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      if (!terminated && tolerate_torn_tail) break;
      throw SchemaViolation(line_number, "<record>", "not valid JSON in " + path.string());
    }
    if (!record.is_object()) throw SchemaViolation(line_number, "<record>", "not a JSON object");
    visit(record, line_number);
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_jsonl_atomic(const std::filesystem::path& path, const std::vector<Json>& records) {
  std::string text;
  for (const Json& record : records) {
    text += record.dump();
    text += '\n';
  }
  write_text_atomic(path, text);
}

JsonlAppender::JsonlAppender(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Repair a torn final line left by a crash so the next record starts cleanly.
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string text = buffer.str();
    if (text.back() != '\n') {
      const std::size_t last = text.rfind('\n');
      text.resize(last == std::string::npos ? 0 : last + 1);
      std::ofstream rewrite(path, std::ios::binary | std::ios::trunc);
      rewrite << text;
    }
  }
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw InputError("cannot open log " + path.string());
}

void JsonlAppender::append(const Json& record) {
  std::lock_guard lock(mutex_);
  out_ << record.dump() << '\n';
  out_.flush();
}

}  // namespace figqa

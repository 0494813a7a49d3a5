#pragma once

// Internal helpers for line-oriented JSON files.

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "factrank/errors.hpp"

namespace factrank::detail {

using nlohmann::json;

// Calls fn(object, line_number) for each non-blank line. Parse failures
// and exceptions thrown by fn are reported with the line number.
inline void for_each_json_line(const std::filesystem::path& path,
                               const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string(), line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(path.string(), line_no, "expected a JSON object");
    try {
      fn(obj, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

inline std::string require_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string())
    throw ValidationError(std::string("missing or non-string field '") + field + "'");
  return it->get<std::string>();
}

inline std::optional<std::string> optional_string(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

// Writes to a sibling temp file, then renames over the target.
class AtomicWriter {
 public:
  explicit AtomicWriter(std::filesystem::path target)
      : target_(std::move(target)), tmp_(target_.string() + ".tmp") {
    if (target_.has_parent_path()) std::filesystem::create_directories(target_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot write " + target_.string());
  }
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;
  ~AtomicWriter() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void write_line(const json& obj) { out_ << obj.dump() << '\n'; }

  void commit() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + target_.string());
    std::filesystem::rename(tmp_, target_);
    committed_ = true;
  }

 private:
  std::filesystem::path target_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

}  // namespace factrank::detail

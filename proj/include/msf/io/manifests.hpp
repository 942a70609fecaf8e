#pragma once

// Plain-text manifests.
//
//   class names:  one "id<TAB>name" per line, UTF-8
//   split:        "seen: id,id,..." and "unseen: id,id,..."; an optional
//                 "name: ..." line; '#' starts a comment line

#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "msf/error.hpp"
#include "msf/eval/split.hpp"
#include "msf/io/atomic_file.hpp"

namespace msf {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline ClassId parse_class_id(std::string_view text, const std::string& context) {
  text = trim(text);
  ClassId id = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw FormatError(context + ": invalid class id '" + std::string(text) + "'");
  }
  return id;
}

}  // namespace detail

using ClassNames = std::map<ClassId, std::string>;

inline std::string format_class_names(const ClassNames& names) {
  std::string out;
  for (const auto& [id, name] : names) out += std::to_string(id) + "\t" + name + "\n";
  return out;
}

inline ClassNames parse_class_names(std::string_view text) {
  ClassNames names;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    const std::string ctx = "class names line " + std::to_string(line_no);
    if (tab == std::string::npos) throw FormatError(ctx + ": expected id<TAB>name");
    const ClassId id = detail::parse_class_id(std::string_view(line).substr(0, tab), ctx);
    if (!names.emplace(id, line.substr(tab + 1)).second) throw FormatError(ctx + ": duplicate id");
  }
  return names;
}

inline void write_class_names(const std::filesystem::path& path, const ClassNames& names) {
  write_file_atomic(path, format_class_names(names));
}

inline ClassNames read_class_names(const std::filesystem::path& path) { return parse_class_names(read_file(path)); }

inline std::string format_split(const SplitSpec& split) {
  auto join = [](const std::set<ClassId>& ids) {
    std::string s;
    for (ClassId id : ids) {
      if (!s.empty()) s += ',';
      s += std::to_string(id);
    }
    return s;
  };
  std::string out;
  if (!split.name.empty()) out += "name: " + split.name + "\n";
  out += "seen: " + join(split.seen) + "\n";
  out += "unseen: " + join(split.unseen) + "\n";
  return out;
}

inline SplitSpec parse_split(std::string_view text) {
  SplitSpec split;
  bool saw_seen = false;
  bool saw_unseen = false;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto colon = body.find(':');
    if (colon == std::string_view::npos) throw FormatError("split manifest: expected 'key: value' in '" + line + "'");
    const std::string_view key = detail::trim(body.substr(0, colon));
    const std::string_view value = detail::trim(body.substr(colon + 1));
    if (key == "name") {
      split.name = std::string(value);
      continue;
    }
    std::set<ClassId>* target = nullptr;
    if (key == "seen") {
      target = &split.seen;
      saw_seen = true;
    } else if (key == "unseen") {
      target = &split.unseen;
      saw_unseen = true;
    } else {
      throw FormatError("split manifest: unknown key '" + std::string(key) + "'");
    }
    std::size_t pos = 0;
    while (pos <= value.size() && !value.empty()) {
      const auto comma = value.find(',', pos);
      const auto item = value.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      target->insert(detail::parse_class_id(item, "split manifest"));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }
  if (!saw_seen || !saw_unseen) throw FormatError("split manifest needs both 'seen:' and 'unseen:' lines");
  validate_split(split);
  return split;
}

inline void write_split(const std::filesystem::path& path, const SplitSpec& split) {
  write_file_atomic(path, format_split(split));
}

inline SplitSpec read_split(const std::filesystem::path& path) { return parse_split(read_file(path)); }

}  // namespace msf

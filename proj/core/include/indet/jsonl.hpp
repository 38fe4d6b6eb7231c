#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "indet/types.hpp"

namespace indet {

// Canonical on-disk record format: one JSON object per line, UTF-8,
// field names matching the domain type fields. nlohmann::json keeps object
// keys sorted, so dumps are byte-stable.

void to_json(nlohmann::json& j, const BBoxNorm& b);
void from_json(const nlohmann::json& j, BBoxNorm& b);

void to_json(nlohmann::json& j, const RleMask& m);
void from_json(const nlohmann::json& j, RleMask& m);

void to_json(nlohmann::json& j, const ObjectEntry& o);
void from_json(const nlohmann::json& j, ObjectEntry& o);

void to_json(nlohmann::json& j, const ImageRecord& r);
void from_json(const nlohmann::json& j, ImageRecord& r);

void to_json(nlohmann::json& j, const TargetSet& t);
void from_json(const nlohmann::json& j, TargetSet& t);

void to_json(nlohmann::json& j, const FilterScores& s);
void from_json(const nlohmann::json& j, FilterScores& s);

void to_json(nlohmann::json& j, const Expression& e);
void from_json(const nlohmann::json& j, Expression& e);

void to_json(nlohmann::json& j, const InDetRecord& r);
void from_json(const nlohmann::json& j, InDetRecord& r);

/// One canonical line, no trailing newline.
std::string dump_line(const nlohmann::json& j);

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& lines);
void append_jsonl(const std::filesystem::path& path, const nlohmann::json& line);

template <typename T>
std::vector<T> read_jsonl_as(const std::filesystem::path& path) {
  std::vector<T> out;
  for (const auto& j : read_jsonl(path)) out.push_back(j.get<T>());
  return out;
}

template <typename T>
void write_jsonl_as(const std::filesystem::path& path, const std::vector<T>& items) {
  std::vector<nlohmann::json> lines;
  lines.reserve(items.size());
  for (const auto& item : items) lines.push_back(nlohmann::json(item));
  write_jsonl(path, lines);
}

}  // namespace indet

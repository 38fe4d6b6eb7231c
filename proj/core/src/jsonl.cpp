#include "indet/jsonl.hpp"

#include <fstream>

namespace indet {

using nlohmann::json;

void to_json(json& j, const BBoxNorm& b) {
  j = json{{"x1", b.x1}, {"y1", b.y1}, {"x2", b.x2}, {"y2", b.y2}};
}

void from_json(const json& j, BBoxNorm& b) {
  j.at("x1").get_to(b.x1);
  j.at("y1").get_to(b.y1);
  j.at("x2").get_to(b.x2);
  j.at("y2").get_to(b.y2);
}

void to_json(json& j, const RleMask& m) {
  j = json{{"width", m.width}, {"height", m.height}, {"counts", m.counts}};
}

void from_json(const json& j, RleMask& m) {
  j.at("width").get_to(m.width);
  j.at("height").get_to(m.height);
  j.at("counts").get_to(m.counts);
}

void to_json(json& j, const ObjectEntry& o) {
  j = json{{"object_id", o.object_id},
           {"category", o.category},
           {"seed_expressions", o.seed_expressions},
           {"bbox", o.bbox}};
  if (o.mask) j["mask"] = *o.mask;
}

void from_json(const json& j, ObjectEntry& o) {
  j.at("object_id").get_to(o.object_id);
  j.at("category").get_to(o.category);
  j.at("seed_expressions").get_to(o.seed_expressions);
  j.at("bbox").get_to(o.bbox);
  if (j.contains("mask")) o.mask = j.at("mask").get<RleMask>();
}

void to_json(json& j, const ImageRecord& r) {
  j = json{{"image_id", r.image_id}, {"uri", r.uri},
           {"width_px", r.width_px}, {"height_px", r.height_px},
           {"objects", r.objects},   {"captions", r.captions}};
}

void from_json(const json& j, ImageRecord& r) {
  j.at("image_id").get_to(r.image_id);
  j.at("uri").get_to(r.uri);
  j.at("width_px").get_to(r.width_px);
  j.at("height_px").get_to(r.height_px);
  j.at("objects").get_to(r.objects);
  j.at("captions").get_to(r.captions);
}

void to_json(json& j, const TargetSet& t) { j = json{{"object_ids", t.object_ids}}; }

void from_json(const json& j, TargetSet& t) {
  std::vector<std::string> ids;
  j.at("object_ids").get_to(ids);
  t = TargetSet::of(std::move(ids));
}

void to_json(json& j, const FilterScores& s) {
  j = json{{"s_l", s.s_l}, {"s_g", s.s_g}, {"s_e", s.s_e}, {"s_f", s.s_f}};
}

void from_json(const json& j, FilterScores& s) {
  j.at("s_l").get_to(s.s_l);
  j.at("s_g").get_to(s.s_g);
  j.at("s_e").get_to(s.s_e);
  j.at("s_f").get_to(s.s_f);
}

void to_json(json& j, const Expression& e) {
  j = json{{"text", e.text}, {"target", e.target}, {"source", std::string(to_string(e.source))}};
  if (e.scores) j["scores"] = *e.scores;
}

void from_json(const json& j, Expression& e) {
  j.at("text").get_to(e.text);
  j.at("target").get_to(e.target);
  e.source = expression_source_from_string(j.at("source").get<std::string>());
  if (j.contains("scores")) e.scores = j.at("scores").get<FilterScores>();
}

void to_json(json& j, const InDetRecord& r) {
  json target{{"object_ids", r.target.object_ids}, {"bboxes", r.bboxes}};
  j = json{{"image_id", r.image_id},
           {"target", target},
           {"instruction", r.instruction},
           {"group", std::string(to_string(r.group))},
           {"source", std::string(to_string(r.source))}};
  if (r.scores) j["scores"] = *r.scores;
}

void from_json(const json& j, InDetRecord& r) {
  j.at("image_id").get_to(r.image_id);
  const auto& t = j.at("target");
  std::vector<std::string> ids;
  t.at("object_ids").get_to(ids);
  r.target.object_ids = std::move(ids);  // preserve stored order (ids are pre-sorted on emit)
  t.at("bboxes").get_to(r.bboxes);
  j.at("instruction").get_to(r.instruction);
  r.group = instruction_group_from_string(j.at("group").get<std::string>());
  r.source = expression_source_from_string(j.at("source").get<std::string>());
  if (j.contains("scores")) r.scores = j.at("scores").get<FilterScores>();
}

std::string dump_line(const json& j) { return j.dump(); }

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open " + path.string());
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw PipelineError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& lines) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw PipelineError("cannot write " + path.string());
  for (const auto& j : lines) out << dump_line(j) << '\n';
}

void append_jsonl(const std::filesystem::path& path, const json& line) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw PipelineError("cannot append " + path.string());
  out << dump_line(line) << '\n';
}

}  // namespace indet

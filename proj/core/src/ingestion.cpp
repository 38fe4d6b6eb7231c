#include "indet/ingestion.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "indet/jsonl.hpp"
#include "indet/text.hpp"

namespace indet {

using nlohmann::json;

namespace {

std::string id_to_string(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  if (j.is_number()) return std::to_string(j.get<double>());
  throw PipelineError("identifier is neither string nor number");
}

}  // namespace

NormalizeResult normalize_pixel_xywh(double x, double y, double w, double h, int width_px,
                                     int height_px) {
  NormalizeResult out;
  if (w <= 0.0 || h <= 0.0 || width_px <= 0 || height_px <= 0) return out;
  BBoxNorm raw{x / width_px, y / height_px, (x + w) / width_px, (y + h) / height_px};
  BBoxNorm clamped{std::clamp(raw.x1, 0.0, 1.0), std::clamp(raw.y1, 0.0, 1.0),
                   std::clamp(raw.x2, 0.0, 1.0), std::clamp(raw.y2, 0.0, 1.0)};
  if (!(clamped.x1 < clamped.x2) || !(clamped.y1 < clamped.y2)) return out;
  // Tolerate off-by-one source boxes: reject only when clamping removed
  // more than 5% of the area.
  const double raw_area = (raw.x2 - raw.x1) * (raw.y2 - raw.y1);
  if (clamped.area() < 0.95 * raw_area) return out;
  out.bbox = clamped;
  out.ok = true;
  return out;
}

std::vector<ImageRecord> load_detection_annotations(const std::filesystem::path& path,
                                                    IngestReport* report) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw PipelineError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                        e.what());
  }

  std::map<std::string, std::string> categories;
  for (const auto& c : j.value("categories", json::array())) {
    categories[id_to_string(c.at("id"))] = c.at("name").get<std::string>();
  }

  std::map<std::string, ImageRecord> records;  // ordered by image id
  for (const auto& img : j.value("images", json::array())) {
    ImageRecord r;
    r.image_id = id_to_string(img.at("id"));
    r.uri = img.value("file_name", "");
    r.width_px = img.at("width").get<int>();
    r.height_px = img.at("height").get<int>();
    records[r.image_id] = std::move(r);
  }

  IngestReport local;
  IngestReport& rep = report ? *report : local;
  for (const auto& ann : j.value("annotations", json::array())) {
    const std::string image_id = id_to_string(ann.at("image_id"));
    auto it = records.find(image_id);
    if (it == records.end()) {
      rep.warnings.push_back("annotation for unknown image '" + image_id + "'");
      ++rep.skipped_annotations;
      continue;
    }
    ImageRecord& r = it->second;
    const auto& bbox = ann.at("bbox");
    const auto norm = normalize_pixel_xywh(bbox.at(0).get<double>(), bbox.at(1).get<double>(),
                                           bbox.at(2).get<double>(), bbox.at(3).get<double>(),
                                           r.width_px, r.height_px);
    if (!norm.ok) {
      rep.warnings.push_back("image '" + image_id + "': bbox outside image, annotation skipped");
      ++rep.skipped_annotations;
      continue;
    }
    ObjectEntry obj;
    obj.object_id = id_to_string(ann.at("id"));
    const std::string cat_id = id_to_string(ann.at("category_id"));
    const auto cat = categories.find(cat_id);
    obj.category = cat != categories.end() ? cat->second : ("category " + cat_id);
    obj.bbox = norm.bbox;
    r.objects.push_back(std::move(obj));
    ++rep.annotations;
  }

  std::vector<ImageRecord> out;
  for (auto& [id, r] : records) {
    if (r.objects.empty()) continue;  // images without annotations are dropped
    out.push_back(std::move(r));
  }
  rep.images = static_cast<int>(out.size());
  return out;
}

void attach_seed_expressions(std::vector<ImageRecord>& records,
                             const std::filesystem::path& refs_path, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  std::map<std::string, ImageRecord*> by_id;
  for (auto& r : records) by_id[r.image_id] = &r;

  for (const auto& ref : read_jsonl(refs_path)) {
    const std::string image_id = id_to_string(ref.at("image_id"));
    const auto it = by_id.find(image_id);
    if (it == by_id.end()) {
      rep.warnings.push_back("ref for unknown image '" + image_id + "'");
      ++rep.unmatched_refs;
      continue;
    }
    ImageRecord& record = *it->second;
    ObjectEntry* target = nullptr;
    if (ref.contains("object_id")) {
      const std::string object_id = id_to_string(ref.at("object_id"));
      for (auto& obj : record.objects) {
        if (obj.object_id == object_id) target = &obj;
      }
    } else if (ref.contains("bbox_px")) {
      const auto& b = ref.at("bbox_px");
      const auto norm =
          normalize_pixel_xywh(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                               b.at(3).get<double>(), record.width_px, record.height_px);
      if (norm.ok) {
        double best = 0.95;  // IoU threshold
        for (auto& obj : record.objects) {
          const double iou = obj.bbox.iou(norm.bbox);
          if (iou >= best) {
            best = iou;
            target = &obj;
          }
        }
      }
    }
    if (!target) {
      rep.warnings.push_back("ref did not match any object in image '" + image_id + "'");
      ++rep.unmatched_refs;
      continue;
    }
    for (const auto& s : ref.at("sentences")) {
      const std::string text = normalize_text(s.get<std::string>());
      if (text.empty()) continue;
      auto& seeds = target->seed_expressions;
      if (std::find(seeds.begin(), seeds.end(), text) == seeds.end()) seeds.push_back(text);
    }
  }
}

void attach_captions(std::vector<ImageRecord>& records, const std::filesystem::path& captions_path,
                     IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  std::map<std::string, ImageRecord*> by_id;
  for (auto& r : records) by_id[r.image_id] = &r;

  for (const auto& line : read_jsonl(captions_path)) {
    const std::string image_id = id_to_string(line.at("image_id"));
    const auto it = by_id.find(image_id);
    if (it == by_id.end()) {
      rep.warnings.push_back("captions for unknown image '" + image_id + "'");
      continue;
    }
    for (const auto& c : line.at("captions")) {
      const std::string text = normalize_text(c.get<std::string>());
      if (text.empty()) {
        ++rep.dropped_captions;
        continue;
      }
      it->second->captions.push_back(text);
    }
  }
}

}  // namespace indet

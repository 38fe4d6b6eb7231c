#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "indet/types.hpp"

namespace indet {

struct IngestReport {
  int images = 0;
  int annotations = 0;
  int skipped_annotations = 0;  // bbox outside image or over-clamped
  int unmatched_refs = 0;
  int dropped_captions = 0;  // whitespace-only
  std::vector<std::string> warnings;
};

/// COCO-style detection file: {"images":[{id,width,height,file_name}],
/// "annotations":[{id,image_id,category_id,bbox:[x,y,w,h]}],
/// "categories":[{id,name}]}. Pixel xywh boxes are normalized to x1y1x2y2
/// and clamped to [0,1]; boxes whose clamped area shrinks more than 5% are
/// skipped with a warning. Images without annotations are dropped.
/// A malformed file faults with the byte offset.
std::vector<ImageRecord> load_detection_annotations(const std::filesystem::path& path,
                                                    IngestReport* report = nullptr);

/// Refs JSONL: {"image_id", "object_id"?, "bbox_px"? : [x,y,w,h],
/// "sentences":[...]}. Matches by object_id when present, else by IoU >=
/// 0.95 against the normalized box. Unmatched refs are counted, not fatal.
/// Exact duplicate sentences are stored once.
void attach_seed_expressions(std::vector<ImageRecord>& records,
                             const std::filesystem::path& refs_path,
                             IngestReport* report = nullptr);

/// Captions JSONL: {"image_id", "captions":[...]}. Whitespace-only captions
/// are dropped.
void attach_captions(std::vector<ImageRecord>& records,
                     const std::filesystem::path& captions_path,
                     IngestReport* report = nullptr);

struct NormalizeResult {
  BBoxNorm bbox;
  bool ok = false;  // false when clamping shrank the area more than 5%
};

NormalizeResult normalize_pixel_xywh(double x, double y, double w, double h, int width_px,
                                     int height_px);

}  // namespace indet

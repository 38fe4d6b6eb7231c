#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace indet {

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Normalized bounding box: fractions of image width/height in [0,1],
/// x1 < x2 and y1 < y2.
struct BBoxNorm {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool valid() const;
  double area() const { return (x2 - x1) * (y2 - y1); }
  double iou(const BBoxNorm& other) const;
  bool operator==(const BBoxNorm&) const = default;
};

/// Run-length encoded binary mask at pixel resolution. Runs are row-major
/// and alternate zero/one, starting with the zero run (which may be 0).
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> counts;

  static RleMask from_bits(int width, int height, const std::vector<std::uint8_t>& bits);
  static RleMask from_rect(int width, int height, int rx1, int ry1, int rx2, int ry2);

  std::vector<std::uint8_t> to_bits() const;
  std::int64_t total() const;
  /// Tight pixel bounding rectangle [x1,y1,x2,y2) of the set pixels;
  /// returns false when the mask is empty.
  bool bounding_rect(int& rx1, int& ry1, int& rx2, int& ry2) const;

  bool operator==(const RleMask&) const = default;
};

struct ObjectEntry {
  std::string object_id;
  std::string category;
  std::vector<std::string> seed_expressions;
  BBoxNorm bbox;
  std::optional<RleMask> mask;

  bool operator==(const ObjectEntry&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::string uri;
  int width_px = 0;
  int height_px = 0;
  std::vector<ObjectEntry> objects;
  std::vector<std::string> captions;

  const ObjectEntry* find_object(std::string_view object_id) const;
  bool operator==(const ImageRecord&) const = default;
};

/// Non-empty set of object ids within one image, kept sorted and unique.
struct TargetSet {
  std::vector<std::string> object_ids;

  static TargetSet of(std::vector<std::string> ids);
  bool single() const { return object_ids.size() == 1; }
  std::size_t size() const { return object_ids.size(); }
  bool operator==(const TargetSet&) const = default;
  bool operator<(const TargetSet& o) const { return object_ids < o.object_ids; }
};

enum class ExpressionSource {
  seed,
  global,
  local,
  spliced,
  summarized,
  rewritten,
  transferred,
};

std::string_view to_string(ExpressionSource s);
ExpressionSource expression_source_from_string(std::string_view s);

struct FilterScores {
  double s_l = 0.0;  // score of the visually prompted image
  double s_g = 0.0;  // score of the plain image
  double s_e = 0.0;  // s_l - s_g
  double s_f = 0.0;  // s_l - alpha1 * s_g

  static FilterScores from(double s_l, double s_g, double alpha1);
  /// True when s_e and s_f are recomputable from (s_l, s_g, alpha1)
  /// to within 1e-12 relative.
  bool consistent(double alpha1) const;
  bool operator==(const FilterScores&) const = default;
};

struct Expression {
  std::string text;  // normalized: trimmed, single internal spaces
  TargetSet target;
  ExpressionSource source = ExpressionSource::seed;
  std::optional<FilterScores> scores;

  bool operator==(const Expression&) const = default;
};

enum class InstructionGroup { G1 = 1, G2, G3, G4, G5, G6 };

std::string_view to_string(InstructionGroup g);
InstructionGroup instruction_group_from_string(std::string_view s);
bool is_multi_object_group(InstructionGroup g);

struct InDetRecord {
  std::string image_id;
  TargetSet target;
  std::vector<BBoxNorm> bboxes;  // resolved, one per target id, same order
  std::string instruction;
  InstructionGroup group = InstructionGroup::G1;
  ExpressionSource source = ExpressionSource::seed;
  std::optional<FilterScores> scores;

  bool operator==(const InDetRecord&) const = default;
};

/// Returns every invariant violation as a human-readable description.
/// An empty list means the record may enter the pipeline.
std::vector<std::string> validate_record(const ImageRecord& record);

}  // namespace indet

#include "indet/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "indet/text.hpp"

namespace indet {

bool BBoxNorm::valid() const {
  return x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0 && x1 < x2 && y1 < y2;
}

double BBoxNorm::iou(const BBoxNorm& o) const {
  const double ix1 = std::max(x1, o.x1);
  const double iy1 = std::max(y1, o.y1);
  const double ix2 = std::min(x2, o.x2);
  const double iy2 = std::min(y2, o.y2);
  if (ix1 >= ix2 || iy1 >= iy2) return 0.0;
  const double inter = (ix2 - ix1) * (iy2 - iy1);
  const double uni = area() + o.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

RleMask RleMask::from_bits(int width, int height, const std::vector<std::uint8_t>& bits) {
  RleMask m;
  m.width = width;
  m.height = height;
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::uint8_t cur = 0;
  std::int64_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t b = i < bits.size() && bits[i] ? 1 : 0;
    if (b == cur) {
      ++run;
    } else {
      m.counts.push_back(run);
      cur = b;
      run = 1;
    }
  }
  m.counts.push_back(run);
  return m;
}

RleMask RleMask::from_rect(int width, int height, int rx1, int ry1, int rx2, int ry2) {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(width) * height, 0);
  rx1 = std::clamp(rx1, 0, width);
  ry1 = std::clamp(ry1, 0, height);
  rx2 = std::clamp(rx2, 0, width);
  ry2 = std::clamp(ry2, 0, height);
  for (int y = ry1; y < ry2; ++y) {
    for (int x = rx1; x < rx2; ++x) {
      bits[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return from_bits(width, height, bits);
}

std::vector<std::uint8_t> RleMask::to_bits() const {
  std::vector<std::uint8_t> bits;
  bits.reserve(static_cast<std::size_t>(width) * height);
  std::uint8_t cur = 0;
  for (std::int64_t run : counts) {
    bits.insert(bits.end(), static_cast<std::size_t>(run), cur);
    cur = cur ? 0 : 1;
  }
  bits.resize(static_cast<std::size_t>(width) * height, 0);
  return bits;
}

std::int64_t RleMask::total() const {
  std::int64_t t = 0;
  bool ones = false;
  for (std::int64_t run : counts) {
    if (ones) t += run;
    ones = !ones;
  }
  return t;
}

bool RleMask::bounding_rect(int& rx1, int& ry1, int& rx2, int& ry2) const {
  const auto bits = to_bits();
  rx1 = width;
  ry1 = height;
  rx2 = 0;
  ry2 = 0;
  bool any = false;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!bits[static_cast<std::size_t>(y) * width + x]) continue;
      any = true;
      rx1 = std::min(rx1, x);
      ry1 = std::min(ry1, y);
      rx2 = std::max(rx2, x + 1);
      ry2 = std::max(ry2, y + 1);
    }
  }
  return any;
}

const ObjectEntry* ImageRecord::find_object(std::string_view object_id) const {
  for (const auto& obj : objects) {
    if (obj.object_id == object_id) return &obj;
  }
  return nullptr;
}

TargetSet TargetSet::of(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  TargetSet t;
  t.object_ids = std::move(ids);
  return t;
}

std::string_view to_string(ExpressionSource s) {
  switch (s) {
    case ExpressionSource::seed: return "seed";
    case ExpressionSource::global: return "global";
    case ExpressionSource::local: return "local";
    case ExpressionSource::spliced: return "spliced";
    case ExpressionSource::summarized: return "summarized";
    case ExpressionSource::rewritten: return "rewritten";
    case ExpressionSource::transferred: return "transferred";
  }
  return "seed";
}

ExpressionSource expression_source_from_string(std::string_view s) {
  for (auto v : {ExpressionSource::seed, ExpressionSource::global, ExpressionSource::local,
                 ExpressionSource::spliced, ExpressionSource::summarized,
                 ExpressionSource::rewritten, ExpressionSource::transferred}) {
    if (to_string(v) == s) return v;
  }
  throw PipelineError("unknown expression source: " + std::string(s));
}

FilterScores FilterScores::from(double s_l, double s_g, double alpha1) {
  FilterScores f;
  f.s_l = s_l;
  f.s_g = s_g;
  f.s_e = s_l - s_g;
  f.s_f = s_l - alpha1 * s_g;
  return f;
}

bool FilterScores::consistent(double alpha1) const {
  auto close = [](double a, double b) {
    const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= 1e-12 * scale;
  };
  return close(s_e, s_l - s_g) && close(s_f, s_l - alpha1 * s_g);
}

std::string_view to_string(InstructionGroup g) {
  switch (g) {
    case InstructionGroup::G1: return "G1";
    case InstructionGroup::G2: return "G2";
    case InstructionGroup::G3: return "G3";
    case InstructionGroup::G4: return "G4";
    case InstructionGroup::G5: return "G5";
    case InstructionGroup::G6: return "G6";
  }
  return "G1";
}

InstructionGroup instruction_group_from_string(std::string_view s) {
  for (auto g : {InstructionGroup::G1, InstructionGroup::G2, InstructionGroup::G3,
                 InstructionGroup::G4, InstructionGroup::G5, InstructionGroup::G6}) {
    if (to_string(g) == s) return g;
  }
  throw PipelineError("unknown instruction group: " + std::string(s));
}

bool is_multi_object_group(InstructionGroup g) {
  return g == InstructionGroup::G5 || g == InstructionGroup::G6;
}

namespace {

std::string describe_bbox(const BBoxNorm& b) {
  std::ostringstream os;
  os << "[" << b.x1 << ", " << b.y1 << ", " << b.x2 << ", " << b.y2 << "]";
  return os.str();
}

}  // namespace

std::vector<std::string> validate_record(const ImageRecord& record) {
  std::vector<std::string> violations;
  auto add = [&](std::string msg) { violations.push_back(std::move(msg)); };

  if (record.image_id.empty()) add("image_id is empty");
  if (record.width_px <= 0 || record.height_px <= 0) {
    add("image dimensions must be positive, got " + std::to_string(record.width_px) + "x" +
        std::to_string(record.height_px));
  }
  if (record.objects.empty()) add("record has zero objects");

  std::vector<std::string> seen_ids;
  for (const auto& obj : record.objects) {
    const std::string who = "object '" + obj.object_id + "'";
    if (obj.object_id.empty()) add("object with empty object_id");
    if (std::find(seen_ids.begin(), seen_ids.end(), obj.object_id) != seen_ids.end()) {
      add(who + ": duplicate object_id");
    }
    seen_ids.push_back(obj.object_id);
    if (obj.category.empty()) add(who + ": empty category");
    const auto& b = obj.bbox;
    if (b.x1 < 0.0 || b.y1 < 0.0 || b.x2 > 1.0 || b.y2 > 1.0) {
      add(who + ": bbox outside [0,1]: " + describe_bbox(b));
    }
    if (!(b.x1 < b.x2)) add(who + ": degenerate bbox (x1 >= x2): " + describe_bbox(b));
    if (!(b.y1 < b.y2)) add(who + ": degenerate bbox (y1 >= y2): " + describe_bbox(b));
    for (const auto& seed : obj.seed_expressions) {
      if (normalize_text(seed).empty()) add(who + ": blank seed expression");
    }
    if (obj.mask && record.width_px > 0 && record.height_px > 0) {
      if (obj.mask->width != record.width_px || obj.mask->height != record.height_px) {
        add(who + ": mask resolution " + std::to_string(obj.mask->width) + "x" +
            std::to_string(obj.mask->height) + " differs from image");
      } else {
        int rx1, ry1, rx2, ry2;
        if (obj.mask->bounding_rect(rx1, ry1, rx2, ry2)) {
          // Mask must stay within the bbox expanded by 2% of image size.
          const double pad_x = 0.02 * record.width_px;
          const double pad_y = 0.02 * record.height_px;
          const double bx1 = b.x1 * record.width_px - pad_x;
          const double by1 = b.y1 * record.height_px - pad_y;
          const double bx2 = b.x2 * record.width_px + pad_x;
          const double by2 = b.y2 * record.height_px + pad_y;
          if (rx1 < bx1 || ry1 < by1 || rx2 > bx2 || ry2 > by2) {
            add(who + ": mask extends beyond bbox by more than 2% of image size");
          }
        }
      }
    }
  }
  return violations;
}

}  // namespace indet

#include "indet/visual_prompt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "indet/global_pipeline.hpp"
#include "indet/local_pipeline.hpp"

namespace indet {

std::string_view to_string(PromptShape s) {
  switch (s) {
    case PromptShape::box: return "box";
    case PromptShape::circle: return "circle";
    case PromptShape::contour: return "contour";
  }
  return "box";
}

std::string_view to_string(PromptTool t) {
  switch (t) {
    case PromptTool::crop: return "crop";
    case PromptTool::gray: return "gray";
    case PromptTool::line: return "line";
    case PromptTool::mask: return "mask";
    case PromptTool::blur: return "blur";
  }
  return "line";
}

VisualPromptSpec VisualPromptSpec::default_composite() {
  return {{PromptShape::contour, PromptTool::blur},
          VisualPromptStep{PromptShape::circle, PromptTool::line}};
}

std::vector<std::string> spec_violations(const VisualPromptSpec& spec) {
  std::vector<std::string> out;
  auto check = [&](const VisualPromptStep& step, const char* which) {
    if ((step.tool == PromptTool::crop || step.tool == PromptTool::gray) &&
        step.shape != PromptShape::box) {
      out.push_back(std::string(which) + ": " + std::string(to_string(step.tool)) +
                    " is only valid with the box shape");
    }
  };
  check(spec.first, "first");
  if (spec.compose_with) check(*spec.compose_with, "compose_with");
  return out;
}

double blur_sigma(int width, int height) { return 0.02 * std::max(width, height); }

namespace {

/// Region selected by the step's shape: bbox rectangle, inscribed ellipse,
/// or the mask contour (bbox rectangle when no mask is available).
std::vector<std::uint8_t> region_bits(const Image& image, const BBoxNorm& bbox,
                                      const RleMask* mask, PromptShape shape) {
  const RectF rect = denormalize(bbox, image.width, image.height);
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(image.width) * image.height, 0);
  switch (shape) {
    case PromptShape::contour:
      if (mask && mask->width == image.width && mask->height == image.height) {
        return mask->to_bits();
      }
      [[fallthrough]];  // bbox rectangle fallback
    case PromptShape::box: {
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
          const double cx = x + 0.5, cy = y + 0.5;
          if (cx >= rect.x1 && cx <= rect.x2 && cy >= rect.y1 && cy <= rect.y2) {
            bits[static_cast<std::size_t>(y) * image.width + x] = 1;
          }
        }
      }
      return bits;
    }
    case PromptShape::circle: {
      const double cx0 = (rect.x1 + rect.x2) / 2.0;
      const double cy0 = (rect.y1 + rect.y2) / 2.0;
      const double a = (rect.x2 - rect.x1) / 2.0;
      const double b = (rect.y2 - rect.y1) / 2.0;
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
          const double dx = (x + 0.5 - cx0) / a;
          const double dy = (y + 0.5 - cy0) / b;
          if (dx * dx + dy * dy <= 1.0) {
            bits[static_cast<std::size_t>(y) * image.width + x] = 1;
          }
        }
      }
      return bits;
    }
  }
  return bits;
}

Image apply_step(const Image& image, const BBoxNorm& bbox, const RleMask* mask,
                 const VisualPromptStep& step, int stroke_px) {
  const RectF rect = denormalize(bbox, image.width, image.height);
  switch (step.tool) {
    case PromptTool::crop: {
      return crop(image, static_cast<int>(std::lround(rect.x1)),
                  static_cast<int>(std::lround(rect.y1)), static_cast<int>(std::lround(rect.x2)),
                  static_cast<int>(std::lround(rect.y2)));
    }
    case PromptTool::gray:
      return gray_outside(image, region_bits(image, bbox, mask, step.shape));
    case PromptTool::mask:
      return dim_outside(image, region_bits(image, bbox, mask, step.shape));
    case PromptTool::line: {
      switch (step.shape) {
        case PromptShape::box: return draw_rect_outline(image, rect, stroke_px, kRed);
        case PromptShape::circle: return draw_ellipse_outline(image, rect, stroke_px, kRed);
        case PromptShape::contour: {
          if (mask && mask->width == image.width && mask->height == image.height) {
            return draw_mask_boundary(image, mask->to_bits(), kRed);
          }
          return draw_rect_outline(image, rect, stroke_px, kRed);
        }
      }
      return image;
    }
    case PromptTool::blur: {
      // Blur reversion: blur the whole image, restore the target region.
      Image out = gaussian_blur(image, blur_sigma(image.width, image.height));
      const auto keep = region_bits(image, bbox, mask, step.shape);
      for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
          if (keep[static_cast<std::size_t>(y) * image.width + x]) {
            out.set(x, y, image.at(x, y));
          }
        }
      }
      return out;
    }
  }
  return image;
}

}  // namespace

Image render_visual_prompt(const Image& image, const BBoxNorm& bbox, const RleMask* mask,
                           const VisualPromptSpec& spec) {
  if (auto v = spec_violations(spec); !v.empty()) throw PipelineError(v.front());
  if (!bbox.valid()) throw PipelineError("invalid bbox");
  const RectF rect = denormalize(bbox, image.width, image.height);
  if (rect.x2 - rect.x1 < 2.0 || rect.y2 - rect.y1 < 2.0) {
    throw PipelineError("bbox degenerates below 2 px after denormalization");
  }
  const int stroke = default_stroke_px(image.width, image.height);
  Image out = apply_step(image, bbox, mask, spec.first, stroke);
  if (spec.compose_with) {
    // Crop changes geometry; later steps apply to the cropped frame.
    const BBoxNorm frame_bbox =
        spec.first.tool == PromptTool::crop ? BBoxNorm{0.0, 0.0, 1.0, 1.0} : bbox;
    out = apply_step(out, frame_bbox, spec.first.tool == PromptTool::crop ? nullptr : mask,
                     *spec.compose_with, stroke);
  }
  return out;
}

std::string prompted_image_key(const std::string& image_key, const BBoxNorm& bbox,
                               const VisualPromptSpec& spec) {
  std::ostringstream os;
  os << image_key << "#vp:" << to_string(spec.first.shape) << "-" << to_string(spec.first.tool);
  if (spec.compose_with) {
    os << "+" << to_string(spec.compose_with->shape) << "-" << to_string(spec.compose_with->tool);
  }
  os << ":" << format_bbox_coords(bbox);
  return os.str();
}

}  // namespace indet

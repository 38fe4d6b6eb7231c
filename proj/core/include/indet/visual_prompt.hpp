#pragma once

#include <optional>
#include <string>

#include "indet/image.hpp"
#include "indet/types.hpp"

namespace indet {

enum class PromptShape { box, circle, contour };
enum class PromptTool { crop, gray, line, mask, blur };

std::string_view to_string(PromptShape s);
std::string_view to_string(PromptTool t);

struct VisualPromptStep {
  PromptShape shape = PromptShape::box;
  PromptTool tool = PromptTool::line;
  bool operator==(const VisualPromptStep&) const = default;
};

/// A highlighting strategy: one edit, optionally composed with a second
/// (nesting depth <= 1). crop and gray are only valid with the box shape.
struct VisualPromptSpec {
  VisualPromptStep first;
  std::optional<VisualPromptStep> compose_with;

  /// The engine default: blur reversion on the target contour followed by
  /// the red inscribed ellipse.
  static VisualPromptSpec default_composite();
  bool operator==(const VisualPromptSpec&) const = default;
};

/// Empty when valid.
std::vector<std::string> spec_violations(const VisualPromptSpec& spec);

/// Blur parameters: sigma = 0.02 * max(width, height), kernel radius
/// 3*sigma (see gaussian_blur).
double blur_sigma(int width, int height);

/// Renders the visual prompt. The target region is the mask when given,
/// else the bbox rectangle. Faults on a degenerate bbox or an invalid spec.
Image render_visual_prompt(const Image& image, const BBoxNorm& bbox, const RleMask* mask,
                           const VisualPromptSpec& spec);

/// Stable payload key for the prompted image, derived from the base image
/// key, the bbox, and the spec.
std::string prompted_image_key(const std::string& image_key, const BBoxNorm& bbox,
                               const VisualPromptSpec& spec);

}  // namespace indet

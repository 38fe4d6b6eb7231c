#pragma once

#include <random>
#include <string>
#include <vector>

#include "indet/config.hpp"
#include "indet/gateway.hpp"
#include "indet/image.hpp"
#include "indet/prompts.hpp"
#include "indet/types.hpp"

namespace indet {

enum class LocalMode { single_shot, chain_of_thought };

/// max(2, round(0.004 * max(width, height)))
int default_stroke_px(int width, int height);

/// Pure red rectangle stroke centered on the denormalized bbox edge.
/// Faults on a stroke <= 0 or a bbox smaller than 2 px on a side.
Image draw_bbox_overlay(const Image& image, const BBoxNorm& bbox, int stroke_px, Rgb color = kRed);

/// Payload key for a boxed object; the mock uses it to identify the region.
std::string overlay_key(const std::string& image_key, const ObjectEntry& object);

struct LocalOutcome {
  std::vector<Expression> expressions;  // source=local, zero or one entry
  int requests = 0;
  std::string prompt_used;  // the sampled prompt (single-shot) or step 1..6 tag
};

/// One invocation of the local prompt pipeline on one marked object.
/// single_shot issues 1 vision request with a seeded prompt from the
/// 7-entry list; chain_of_thought issues exactly 6 sequential requests
/// carrying the conversation history, and only the step-6 answer becomes
/// the expression. Gateway faults are reported by the caller; an empty
/// final answer yields no expression.
LocalOutcome run_local(const ImageRecord& record, const ObjectEntry& object, const Image& pixels,
                       const std::string& image_key, Gateway& gateway,
                       const PipelineConfig& config, const PromptLibrary& prompts,
                       const ServiceProfile& vision_profile, std::mt19937_64& rng, LocalMode mode);

}  // namespace indet

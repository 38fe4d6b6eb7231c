#include "indet/local_pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "indet/global_pipeline.hpp"
#include "indet/rng.hpp"
#include "indet/text.hpp"

namespace indet {

int default_stroke_px(int width, int height) {
  return std::max(2, static_cast<int>(std::lround(0.004 * std::max(width, height))));
}

Image draw_bbox_overlay(const Image& image, const BBoxNorm& bbox, int stroke_px, Rgb color) {
  if (stroke_px <= 0) throw PipelineError("degenerate stroke");
  if (!bbox.valid()) throw PipelineError("invalid bbox");
  const RectF rect = denormalize(bbox, image.width, image.height);
  if (rect.x2 - rect.x1 < 2.0 || rect.y2 - rect.y1 < 2.0) {
    throw PipelineError("bbox degenerates below 2 px after denormalization");
  }
  return draw_rect_outline(image, rect, stroke_px, color);
}

std::string overlay_key(const std::string& image_key, const ObjectEntry& object) {
  return image_key + "#obj:" + object.object_id + ":" + object_content(object);
}

LocalOutcome run_local(const ImageRecord& record, const ObjectEntry& object, const Image& pixels,
                       const std::string& image_key, Gateway& gateway,
                       const PipelineConfig& config, const PromptLibrary& prompts,
                       const ServiceProfile& vision_profile, std::mt19937_64& rng,
                       LocalMode mode) {
  (void)config;
  const int stroke = default_stroke_px(record.width_px, record.height_px);
  const Image marked = draw_bbox_overlay(pixels, object.bbox, stroke);
  ImagePayload payload;
  payload.key = overlay_key(image_key, object);
  payload.bytes = encode_ppm(marked);

  LocalOutcome out;
  std::string answer;
  if (mode == LocalMode::single_shot) {
    const std::string& prompt =
        prompts.local_prompts[pick_index(rng, prompts.local_prompts.size())];
    out.prompt_used = prompt;
    std::vector<ChatMessage> messages{{ChatRole::user, prompt, {}}};
    answer = gateway.vision_chat(payload, messages, vision_profile);
    out.requests = 1;
  } else {
    std::vector<ChatMessage> messages;
    out.prompt_used = "chain-of-thought";
    for (const auto& step : prompts.cot_prompts) {
      messages.push_back({ChatRole::user, step, {}});
      answer = gateway.vision_chat(payload, messages, vision_profile);
      ++out.requests;
      messages.push_back({ChatRole::assistant, answer, {}});
    }
  }
  const std::string text = normalize_text(answer);
  if (!text.empty()) {
    Expression e;
    e.text = text;
    e.target = TargetSet::of({object.object_id});
    e.source = ExpressionSource::local;
    out.expressions.push_back(std::move(e));
  }
  return out;
}

}  // namespace indet

#include "indet/expression_filter.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "indet/text.hpp"

namespace indet {

namespace {

ImagePayload payload_for(const Image& image, const std::string& key) {
  ImagePayload p;
  p.key = key;
  p.bytes = encode_ppm(image);
  return p;
}

}  // namespace

FilterScores score_expression(const Image& image, const std::string& image_key,
                              const BBoxNorm& bbox, const RleMask* mask, const std::string& text,
                              Gateway& gateway, const ServiceProfile& score_profile, double alpha1,
                              const VisualPromptSpec& spec) {
  if (normalize_text(text).empty()) throw PipelineError("cannot score empty text");
  const Image prompted = render_visual_prompt(image, bbox, mask, spec);
  const auto plain = payload_for(image, image_key);
  const auto local = payload_for(prompted, prompted_image_key(image_key, bbox, spec));
  const double s_g = gateway.score_image_text(plain, {text}, score_profile).front();
  const double s_l = gateway.score_image_text(local, {text}, score_profile).front();
  return FilterScores::from(s_l, s_g, alpha1);
}

FilterOutcome filter_expressions(std::span<const Expression> candidates,
                                 const ImageRecord& record, const Image& pixels,
                                 Gateway& gateway, const PipelineConfig& config,
                                 const ServiceProfile& score_profile,
                                 const ServiceProfile& segment_profile) {
  FilterOutcome out;
  const VisualPromptSpec spec = VisualPromptSpec::default_composite();

  // Group candidate indices per object; all must be single-target here.
  std::map<std::string, std::vector<std::size_t>> by_object;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (!c.target.single()) {
      throw PipelineError("filter_expressions expects single-object targets");
    }
    if (!record.find_object(c.target.object_ids.front())) {
      throw PipelineError("candidate targets unknown object '" + c.target.object_ids.front() +
                          "'");
    }
    by_object[c.target.object_ids.front()].push_back(i);
  }

  const auto plain = payload_for(pixels, record.image_id);

  for (const auto& obj : record.objects) {
    const auto it = by_object.find(obj.object_id);
    const bool has_candidates = it != by_object.end();

    // Reference texts: seeds when present, else the category name.
    std::vector<std::string> ref_texts;
    for (const auto& seed : obj.seed_expressions) {
      const std::string s = normalize_text(seed);
      if (!s.empty()) ref_texts.push_back(s);
    }
    const bool from_seeds = !ref_texts.empty();
    if (!from_seeds) ref_texts.push_back(obj.category);
    if (!has_candidates && !from_seeds) continue;  // nothing to score or keep

    // Target region: stored mask, else segmentation service, else the bbox
    // rectangle (the render falls back to the rectangle on nullptr).
    const RleMask* mask = obj.mask ? &*obj.mask : nullptr;
    RleMask fetched;
    if (!mask) {
      try {
        fetched = gateway.segment(plain, obj.bbox, segment_profile);
        mask = &fetched;
      } catch (const GatewayError&) {
        mask = nullptr;
      }
    }

    std::vector<std::string> texts = ref_texts;
    if (has_candidates) {
      for (std::size_t i : it->second) texts.push_back(candidates[i].text);
    }

    const Image prompted = render_visual_prompt(pixels, obj.bbox, mask, spec);
    const auto local = payload_for(prompted, prompted_image_key(record.image_id, obj.bbox, spec));
    const auto s_g = gateway.score_image_text(plain, texts, score_profile);
    const auto s_l = gateway.score_image_text(local, texts, score_profile);

    double reference = 0.0;
    for (std::size_t r = 0; r < ref_texts.size(); ++r) {
      const auto scores = FilterScores::from(s_l[r], s_g[r], config.alpha1);
      if (r == 0 || scores.s_f > reference) reference = scores.s_f;
      if (from_seeds) {
        Expression seed;
        seed.text = ref_texts[r];
        seed.target = TargetSet::of({obj.object_id});
        seed.source = ExpressionSource::seed;
        seed.scores = scores;
        out.seeds_scored.push_back(std::move(seed));
      }
    }

    if (!has_candidates) continue;
    for (std::size_t c = 0; c < it->second.size(); ++c) {
      const std::size_t idx = it->second[c];
      const std::size_t s = ref_texts.size() + c;
      Expression e = candidates[idx];
      e.scores = FilterScores::from(s_l[s], s_g[s], config.alpha1);
      const bool keep = e.scores->s_f >= reference;  // ties survive

      FilterRow row;
      row.image_id = record.image_id;
      row.object_id = obj.object_id;
      row.text = e.text;
      row.scores = *e.scores;
      row.reference = reference;
      row.kept = keep;
      out.report.push_back(std::move(row));

      if (keep) {
        out.kept.push_back(std::move(e));
      } else {
        out.dropped.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::vector<std::size_t> rank_top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

double retrieval_ratio(std::span<const RetrievalBatch> batches, const VisualPromptSpec& spec,
                       int k, Gateway& gateway, const ServiceProfile& score_profile) {
  if (k < 1) throw PipelineError("retrieval k must be >= 1");
  if (batches.empty()) throw PipelineError("no retrieval batches");
  double sum = 0.0;
  for (const auto& batch : batches) {
    if (static_cast<std::size_t>(k) > batch.texts.size()) {
      throw PipelineError("retrieval k exceeds batch size");
    }
    const Image prompted =
        render_visual_prompt(batch.image, batch.bbox, batch.mask ? &*batch.mask : nullptr, spec);
    const auto payload =
        payload_for(prompted, prompted_image_key(batch.image_key, batch.bbox, spec));
    const auto scores = gateway.score_image_text(payload, batch.texts, score_profile);
    const auto top = rank_top_k(scores, static_cast<std::size_t>(k));
    std::size_t hits = 0;
    for (std::size_t idx : top) {
      if (std::find(batch.correct.begin(), batch.correct.end(), idx) != batch.correct.end()) {
        ++hits;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(k);
  }
  return 100.0 * sum / static_cast<double>(batches.size());
}

}  // namespace indet

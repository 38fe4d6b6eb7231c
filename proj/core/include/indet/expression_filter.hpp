#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "indet/config.hpp"
#include "indet/gateway.hpp"
#include "indet/image.hpp"
#include "indet/types.hpp"
#include "indet/visual_prompt.hpp"

namespace indet {

/// Scores one text: s_g on the plain image, s_l on the visually prompted
/// image, s_e and s_f per the final-score combination with the given alpha1.
FilterScores score_expression(const Image& image, const std::string& image_key,
                              const BBoxNorm& bbox, const RleMask* mask, const std::string& text,
                              Gateway& gateway, const ServiceProfile& score_profile, double alpha1,
                              const VisualPromptSpec& spec = VisualPromptSpec::default_composite());

struct FilterRow {
  std::string image_id;
  std::string object_id;
  std::string text;
  FilterScores scores;
  double reference = 0.0;
  bool kept = false;
};

struct FilterOutcome {
  std::vector<Expression> kept;
  std::vector<Expression> dropped;
  std::vector<FilterRow> report;
  /// Seed expressions with their scores attached; always retained by the
  /// pipeline (they define the reference, they are not candidates).
  std::vector<Expression> seeds_scored;
};

/// Dynamic-threshold filter: per object the reference is the s_f of the
/// seed expression (max over seeds) or of the category name when no seed
/// exists; a candidate is kept iff its s_f >= reference. Scores are stored
/// on every candidate. kept and dropped partition the candidates.
FilterOutcome filter_expressions(std::span<const Expression> candidates,
                                 const ImageRecord& record, const Image& pixels,
                                 Gateway& gateway, const PipelineConfig& config,
                                 const ServiceProfile& score_profile,
                                 const ServiceProfile& segment_profile);

struct RetrievalBatch {
  Image image;
  std::string image_key;
  BBoxNorm bbox;
  std::optional<RleMask> mask;
  std::vector<std::string> texts;       // N texts
  std::vector<std::size_t> correct;     // indices of the k correct texts
};

/// Ranks each batch's texts by score on the visually prompted region and
/// returns the mean percentage of correct texts recovered in the top k.
/// Faults when k exceeds a batch's text count.
double retrieval_ratio(std::span<const RetrievalBatch> batches, const VisualPromptSpec& spec,
                       int k, Gateway& gateway, const ServiceProfile& score_profile);

/// Indices of the top-k scores, descending, ties broken by input order.
std::vector<std::size_t> rank_top_k(std::span<const double> scores, std::size_t k);

}  // namespace indet

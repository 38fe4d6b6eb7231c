#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "indet/config.hpp"
#include "indet/gateway.hpp"
#include "indet/prompts.hpp"
#include "indet/types.hpp"

namespace indet {

/// Collapses expressions that are equal after normalization and case
/// folding within one (image, target) group. The first occurrence's text
/// survives; its provenance takes the highest-precedence source among the
/// collapsed duplicates (seed > global > local > spliced > summarized >
/// rewritten > transferred). Idempotent.
std::vector<Expression> dedup_expressions(std::span<const Expression> expressions);

/// One synonymous-rewriting chat call. The reply becomes an additional
/// expression with the same target (source=rewritten); replies longer than
/// 25 words or empty are discarded and nothing is returned. The original
/// is always retained by the caller.
std::optional<Expression> rewrite_synonymous(const Expression& expression, Gateway& gateway,
                                             const ServiceProfile& chat_profile,
                                             const PromptLibrary& prompts);

struct GroupOutcome {
  InstructionGroup group = InstructionGroup::G2;
  bool defaulted = false;  // leveling reply unparseable after one retry
};

/// Multi-target: spliced -> G5, every other source -> G6. Single-target:
/// one leveling chat call; the trailing "level N" maps 0..3 to G1..G4.
GroupOutcome assign_group(const Expression& expression, Gateway& gateway,
                          const ServiceProfile& chat_profile, const PromptLibrary& prompts);

/// Parses the trailing "level N" from a leveling reply; nullopt when absent
/// or out of range.
std::optional<int> parse_level(const std::string& response);

struct DatasetStats {
  std::map<int, std::int64_t> word_histogram;  // words -> instruction count
  std::map<std::string, double> group_ratios;  // "G1".."G6" -> fraction, sums to 1
  double mean_pairwise_cosine = 0.0;  // diversity over targets with >= 2 instructions
  std::int64_t instructions = 0;
  std::int64_t targets = 0;
  std::int64_t images = 0;
  double mean_length_words = 0.0;
  std::int64_t vocabulary = 0;  // distinct case-folded whitespace tokens
};

DatasetStats compute_stats(std::span<const InDetRecord> records, Gateway& gateway,
                           const ServiceProfile& embed_profile);

nlohmann::json stats_to_json(const DatasetStats& stats);
void write_stats_csvs(const DatasetStats& stats, const std::filesystem::path& out_dir);

/// image_id -> "train" | "val" | "test". Seeded ratio split, or explicit
/// lists which must partition the image set.
std::map<std::string, std::string> split_images(std::span<const std::string> image_ids,
                                                const SplitSpec& spec, std::uint64_t seed);

/// Writes indet_train.jsonl / indet_val.jsonl / indet_test.jsonl in
/// canonical order (image_id, instruction, target). Faults when a record's
/// image is missing from the split map.
void emit_indet(std::span<const InDetRecord> records,
                const std::map<std::string, std::string>& split,
                const std::filesystem::path& out_dir);

/// Builds final records from grouped expressions, resolving bboxes from the
/// record. Faults when a target references a missing object.
InDetRecord make_indet_record(const ImageRecord& record, const Expression& expression,
                              InstructionGroup group);

}  // namespace indet

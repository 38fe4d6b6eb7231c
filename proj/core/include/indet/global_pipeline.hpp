#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "indet/config.hpp"
#include "indet/gateway.hpp"
#include "indet/prompts.hpp"
#include "indet/types.hpp"

namespace indet {

struct BlockParseError : PipelineError {
  using PipelineError::PipelineError;
};

/// One parsed "[name]" block: alias names plus the phrase lists from the
/// "(1)" (object itself) and "(2)" (object vs. others) lines.
struct ObjectBlock {
  std::vector<std::string> names;
  std::vector<std::string> attrs_self;
  std::vector<std::string> attrs_rel;
  bool operator==(const ObjectBlock&) const = default;
};

/// Object content used in prompts: first seed expression, else category.
std::string object_content(const ObjectEntry& entry);
/// Alias names: seed expressions when present, else the category.
std::vector<std::string> object_aliases(const ObjectEntry& entry);
/// Coordinate lines "name: [x1, y1, x2, y2], ..." with same-name objects
/// grouped onto one line and aliases joined by "/".
std::string format_coordinate_lines(const ImageRecord& record);
std::string format_bbox_coords(const BBoxNorm& bbox);

/// A caption prompt drawn uniformly (seeded) from the caption list, with the
/// ", including objects: ..." suffix listing distinct object contents.
std::string build_caption_prompt(const ImageRecord& record, std::mt19937_64& rng,
                                 const PromptLibrary& prompts);

/// Asks the vision service `repeats` times, each with a freshly drawn
/// caption prompt. Precondition: the record has no captions yet.
std::vector<std::string> generate_captions(const ImageRecord& record, const ImagePayload& image,
                                           Gateway& gateway, const ServiceProfile& vision_profile,
                                           const PromptLibrary& prompts, std::mt19937_64& rng,
                                           int repeats);

/// [system task] ++ per-example [user image2text, assistant response]
/// ++ [user: captions + coordinate lines].
std::vector<ChatMessage> build_task_messages(const ImageRecord& record,
                                             const std::vector<std::string>& captions,
                                             std::span<const InContextExample> examples,
                                             const PromptLibrary& prompts);

/// Throws BlockParseError when no block can be parsed. Within each phrase
/// line, duplicates are dropped case-insensitively, ignoring one leading
/// article ("a"/"an"/"the"); first occurrence wins.
std::vector<ObjectBlock> parse_object_blocks(const std::string& response);

/// Inverse of the parser, for round-trips and fixtures.
std::string render_object_blocks(std::span<const ObjectBlock> blocks);

struct BindOutcome {
  std::vector<Expression> expressions;
  std::vector<std::string> unmatched_blocks;  // block headings that bound nothing
};

/// Attaches each block to every object whose category or seed expression
/// equals (case-insensitive) one of the block aliases. One Expression per
/// (phrase, matched instance), source=global.
BindOutcome bind_blocks(std::span<const ObjectBlock> blocks, const ImageRecord& record);

struct GlobalOutcome {
  std::vector<Expression> expressions;
  std::vector<std::string> captions;
  std::vector<std::string> unmatched_blocks;
  bool parse_failed = false;  // dropped from the global pipeline after retry
};

/// Full per-image global pipeline: caption acquisition (existing captions
/// are used directly), task prompt assembly, chat, parse (one retry, then
/// the image is dropped from this pipeline), and binding.
GlobalOutcome run_global(const ImageRecord& record, const ImagePayload& image, Gateway& gateway,
                         const PipelineConfig& config, const PromptLibrary& prompts,
                         const ServiceProfile& chat_profile, const ServiceProfile& vision_profile,
                         std::mt19937_64& rng);

}  // namespace indet

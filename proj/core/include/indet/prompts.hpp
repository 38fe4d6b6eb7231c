#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "indet/types.hpp"

namespace indet {

/// One worked example for the object-description task: the user content
/// (captions plus coordinate lines) and the expected block-formatted reply.
struct InContextExample {
  std::string image2text;
  std::string response;
};

/// Plain prompt/response example (summarization, leveling).
struct ChatExample {
  std::string prompt;
  std::string response;
};

/// All prompt text the engine sends to model services. The built-in set is
/// compiled in; a directory of data files with the same content ships under
/// core/data/prompts and can be edited without code changes.
struct PromptLibrary {
  std::vector<std::string> caption_prompts;  // 16 image-caption prompts
  std::vector<std::string> local_prompts;    // 7 marked-object prompts
  std::vector<std::string> cot_prompts;      // 6 chain-of-thought steps
  std::string global_task;
  std::vector<InContextExample> global_examples;  // 3 shipped examples
  std::string summarize_task;
  std::vector<ChatExample> summarize_examples;
  std::string leveling_task;
  std::vector<ChatExample> leveling_examples;
  std::string rewrite_prompt;

  static const PromptLibrary& builtin();
  /// Loads from a data directory (caption_prompts.txt, local_prompts.txt,
  /// cot_prompts.txt, global_task.txt, global_examples.json,
  /// summarize_task.txt, summarize_examples.json, leveling_task.txt,
  /// leveling_examples.json, rewrite_prompt.txt).
  static PromptLibrary load(const std::filesystem::path& dir);

  /// Throws PipelineError when counts or example formats are off.
  void validate() const;
};

}  // namespace indet

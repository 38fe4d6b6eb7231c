#include "indet/post_process.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "indet/jsonl.hpp"
#include "indet/rng.hpp"
#include "indet/text.hpp"

namespace indet {

std::vector<Expression> dedup_expressions(std::span<const Expression> expressions) {
  std::vector<Expression> out;
  // (target, folded text) -> index into out
  std::map<std::pair<TargetSet, std::string>, std::size_t> seen;
  for (const auto& e : expressions) {
    const auto key = std::make_pair(e.target, casefold(normalize_text(e.text)));
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, out.size());
      out.push_back(e);
    } else {
      Expression& survivor = out[it->second];
      if (static_cast<int>(e.source) < static_cast<int>(survivor.source)) {
        survivor.source = e.source;
        if (e.scores) survivor.scores = e.scores;
      }
    }
  }
  return out;
}

std::optional<Expression> rewrite_synonymous(const Expression& expression, Gateway& gateway,
                                             const ServiceProfile& chat_profile,
                                             const PromptLibrary& prompts) {
  if (expression.text.empty()) throw PipelineError("cannot rewrite an empty expression");
  std::vector<ChatMessage> messages{{ChatRole::system, prompts.rewrite_prompt, {}},
                                    {ChatRole::user, expression.text, {}}};
  const std::string reply = normalize_text(gateway.chat(messages, chat_profile));
  if (reply.empty() || word_count(reply) > 25) return std::nullopt;
  if (casefold(reply) == casefold(expression.text)) return std::nullopt;
  Expression out;
  out.text = reply;
  out.target = expression.target;
  out.source = ExpressionSource::rewritten;
  return out;
}

std::optional<int> parse_level(const std::string& response) {
  // Last occurrence of "level" followed by an integer.
  const std::string folded = casefold(response);
  std::size_t pos = folded.rfind("level");
  while (pos != std::string::npos) {
    std::size_t i = pos + 5;
    while (i < folded.size() && (folded[i] == ' ' || folded[i] == ':')) ++i;
    if (i < folded.size() && folded[i] >= '0' && folded[i] <= '9') {
      const int level = folded[i] - '0';
      if (level >= 0 && level <= 3) return level;
      return std::nullopt;
    }
    pos = pos == 0 ? std::string::npos : folded.rfind("level", pos - 1);
  }
  return std::nullopt;
}

GroupOutcome assign_group(const Expression& expression, Gateway& gateway,
                          const ServiceProfile& chat_profile, const PromptLibrary& prompts) {
  GroupOutcome out;
  if (expression.target.size() >= 2) {
    out.group = expression.source == ExpressionSource::spliced ? InstructionGroup::G5
                                                               : InstructionGroup::G6;
    return out;
  }
  std::vector<ChatMessage> messages;
  messages.push_back({ChatRole::system, prompts.leveling_task, {}});
  for (const auto& ex : prompts.leveling_examples) {
    messages.push_back({ChatRole::user, ex.prompt, {}});
    messages.push_back({ChatRole::assistant, ex.response, {}});
  }
  std::string text = expression.text;
  if (text.empty() || (text.back() != '.' && text.back() != '!' && text.back() != '?')) {
    text += '.';
  }
  messages.push_back({ChatRole::user, "Grade description: " + text, {}});

  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response = gateway.chat(messages, chat_profile);
    if (const auto level = parse_level(response)) {
      out.group = static_cast<InstructionGroup>(static_cast<int>(InstructionGroup::G1) + *level);
      return out;
    }
  }
  out.group = InstructionGroup::G2;
  out.defaulted = true;
  return out;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

DatasetStats compute_stats(std::span<const InDetRecord> records, Gateway& gateway,
                           const ServiceProfile& embed_profile) {
  if (records.empty()) throw PipelineError("compute_stats on an empty dataset");
  DatasetStats stats;
  stats.instructions = static_cast<std::int64_t>(records.size());

  std::set<std::string> images;
  std::set<std::string> vocabulary;
  std::map<std::pair<std::string, TargetSet>, std::vector<std::string>> per_target;
  std::map<std::string, std::int64_t> group_counts;
  std::int64_t total_words = 0;

  for (const auto& r : records) {
    const auto words = split_ws(r.instruction);
    stats.word_histogram[static_cast<int>(words.size())]++;
    total_words += static_cast<std::int64_t>(words.size());
    for (const auto& w : words) vocabulary.insert(casefold(w));
    images.insert(r.image_id);
    per_target[{r.image_id, r.target}].push_back(r.instruction);
    group_counts[std::string(to_string(r.group))]++;
  }
  stats.images = static_cast<std::int64_t>(images.size());
  stats.targets = static_cast<std::int64_t>(per_target.size());
  stats.mean_length_words = static_cast<double>(total_words) / static_cast<double>(records.size());
  stats.vocabulary = static_cast<std::int64_t>(vocabulary.size());
  for (const auto& [g, c] : group_counts) {
    stats.group_ratios[g] = static_cast<double>(c) / static_cast<double>(records.size());
  }

  // Diversity: mean pairwise cosine of instruction embeddings per target
  // with >= 2 instructions, averaged over those targets.
  double diversity_sum = 0.0;
  std::int64_t diversity_targets = 0;
  for (const auto& [key, instructions] : per_target) {
    if (instructions.size() < 2) continue;
    const auto vectors = gateway.embed(instructions, embed_profile);
    double pair_sum = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      for (std::size_t j = i + 1; j < vectors.size(); ++j) {
        pair_sum += cosine(vectors[i], vectors[j]);
        ++pairs;
      }
    }
    diversity_sum += pair_sum / static_cast<double>(pairs);
    ++diversity_targets;
  }
  stats.mean_pairwise_cosine = diversity_targets ? diversity_sum / diversity_targets : 0.0;
  return stats;
}

nlohmann::json stats_to_json(const DatasetStats& stats) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [words, count] : stats.word_histogram) {
    hist[std::to_string(words)] = count;
  }
  return nlohmann::json{{"totals",
                         {{"instructions", stats.instructions},
                          {"targets", stats.targets},
                          {"images", stats.images},
                          {"mean_length_words", stats.mean_length_words},
                          {"vocabulary", stats.vocabulary}}},
                        {"word_histogram", hist},
                        {"group_ratios", stats.group_ratios},
                        {"diversity", {{"mean_pairwise_cosine", stats.mean_pairwise_cosine}}}};
}

void write_stats_csvs(const DatasetStats& stats, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "histogram.csv", std::ios::trunc);
    out << "words,count\n";
    for (const auto& [words, count] : stats.word_histogram) out << words << "," << count << "\n";
  }
  {
    std::ofstream out(out_dir / "group_ratios.csv", std::ios::trunc);
    out << "group,ratio\n";
    for (const auto& [group, ratio] : stats.group_ratios) out << group << "," << ratio << "\n";
  }
}

std::map<std::string, std::string> split_images(std::span<const std::string> image_ids,
                                                const SplitSpec& spec, std::uint64_t seed) {
  std::vector<std::string> ids(image_ids.begin(), image_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::map<std::string, std::string> out;

  if (spec.explicit_lists()) {
    auto place = [&](const std::vector<std::string>& list, const char* name) {
      for (const auto& id : list) {
        if (out.count(id)) {
          throw PipelineError("split lists overlap on image '" + id + "'");
        }
        out[id] = name;
      }
    };
    place(spec.train_ids, "train");
    place(spec.val_ids, "val");
    place(spec.test_ids, "test");
    for (const auto& id : ids) {
      if (!out.count(id)) throw PipelineError("image '" + id + "' missing from explicit splits");
    }
    return out;
  }

  auto rng = make_rng(seed, "split");
  std::shuffle(ids.begin(), ids.end(), rng);
  const double total = spec.train + spec.val + spec.test;
  const double n = static_cast<double>(ids.size());
  const double exact[3] = {n * spec.train / total, n * spec.val / total, n * spec.test / total};
  std::size_t counts[3];
  for (int i = 0; i < 3; ++i) counts[i] = static_cast<std::size_t>(std::floor(exact[i]));
  std::size_t assigned = counts[0] + counts[1] + counts[2];
  // Largest remainder gets the leftovers; ties favor train, val, test order.
  while (assigned < ids.size()) {
    int best = 0;
    double best_frac = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double frac = exact[i] - std::floor(exact[i]);
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        best = i;
      }
    }
    ++counts[best];
    ++assigned;
  }
  const char* names[3] = {"train", "val", "test"};
  std::size_t idx = 0;
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < counts[s]; ++i) out[ids[idx++]] = names[s];
  }
  return out;
}

void emit_indet(std::span<const InDetRecord> records,
                const std::map<std::string, std::string>& split,
                const std::filesystem::path& out_dir) {
  std::map<std::string, std::vector<const InDetRecord*>> by_split;
  for (const auto& name : {"train", "val", "test"}) by_split[name];  // always emit all three
  for (const auto& r : records) {
    const auto it = split.find(r.image_id);
    if (it == split.end()) {
      throw PipelineError("no split assignment for image '" + r.image_id + "'");
    }
    by_split[it->second].push_back(&r);
  }
  std::filesystem::create_directories(out_dir);
  for (auto& [name, list] : by_split) {
    std::sort(list.begin(), list.end(), [](const InDetRecord* a, const InDetRecord* b) {
      return std::tie(a->image_id, a->instruction, a->target.object_ids) <
             std::tie(b->image_id, b->instruction, b->target.object_ids);
    });
    std::vector<nlohmann::json> lines;
    lines.reserve(list.size());
    for (const auto* r : list) lines.push_back(nlohmann::json(*r));
    write_jsonl(out_dir / ("indet_" + name + ".jsonl"), lines);
  }
}

InDetRecord make_indet_record(const ImageRecord& record, const Expression& expression,
                              InstructionGroup group) {
  InDetRecord out;
  out.image_id = record.image_id;
  out.target = expression.target;
  for (const auto& id : expression.target.object_ids) {
    const ObjectEntry* obj = record.find_object(id);
    if (!obj) {
      throw PipelineError("target references missing object '" + id + "' in image '" +
                          record.image_id + "'");
    }
    out.bboxes.push_back(obj->bbox);
  }
  out.instruction = expression.text;
  out.group = group;
  out.source = expression.source;
  out.scores = expression.scores;
  if (out.instruction.empty()) throw PipelineError("empty instruction for image " + record.image_id);
  const bool multi = is_multi_object_group(group);
  if (multi != (out.target.size() >= 2)) {
    throw PipelineError("group/target cardinality mismatch for '" + out.instruction + "'");
  }
  return out;
}

}  // namespace indet

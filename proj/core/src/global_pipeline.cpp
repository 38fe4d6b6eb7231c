#include "indet/global_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "indet/rng.hpp"
#include "indet/text.hpp"

namespace indet {

std::string object_content(const ObjectEntry& entry) {
  for (const auto& seed : entry.seed_expressions) {
    const std::string s = normalize_text(seed);
    if (!s.empty()) return s;
  }
  return entry.category;
}

std::vector<std::string> object_aliases(const ObjectEntry& entry) {
  std::vector<std::string> aliases;
  for (const auto& seed : entry.seed_expressions) {
    const std::string s = normalize_text(seed);
    if (!s.empty()) aliases.push_back(s);
  }
  if (aliases.empty()) aliases.push_back(entry.category);
  return aliases;
}

namespace {

std::string alias_line_name(const ObjectEntry& entry) {
  const auto aliases = object_aliases(entry);
  std::string out;
  for (const auto& a : aliases) {
    if (!out.empty()) out += '/';
    out += a;
  }
  return out;
}

std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  std::string s = buf;
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

}  // namespace

std::string format_bbox_coords(const BBoxNorm& b) {
  return "[" + format_coord(b.x1) + ", " + format_coord(b.y1) + ", " + format_coord(b.x2) + ", " +
         format_coord(b.y2) + "]";
}

std::string format_coordinate_lines(const ImageRecord& record) {
  // Objects sharing one alias name merge onto a single line, boxes in
  // record order.
  std::vector<std::string> order;
  std::vector<std::vector<const ObjectEntry*>> groups;
  for (const auto& obj : record.objects) {
    const std::string name = alias_line_name(obj);
    auto it = std::find(order.begin(), order.end(), name);
    if (it == order.end()) {
      order.push_back(name);
      groups.push_back({&obj});
    } else {
      groups[static_cast<std::size_t>(it - order.begin())].push_back(&obj);
    }
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < order.size(); ++i) {
    os << order[i] << ": ";
    for (std::size_t b = 0; b < groups[i].size(); ++b) {
      if (b) os << ", ";
      os << format_bbox_coords(groups[i][b]->bbox);
    }
    if (i + 1 < order.size()) os << "\n";
  }
  return os.str();
}

std::string build_caption_prompt(const ImageRecord& record, std::mt19937_64& rng,
                                 const PromptLibrary& prompts) {
  if (record.objects.empty()) throw PipelineError("record has no objects");
  const std::string& base = prompts.caption_prompts[pick_index(rng, prompts.caption_prompts.size())];
  std::vector<std::string> contents;
  for (const auto& obj : record.objects) {
    const std::string c = object_content(obj);
    if (std::find(contents.begin(), contents.end(), c) == contents.end()) contents.push_back(c);
  }
  std::string out = base + ", including objects: ";
  for (std::size_t i = 0; i < contents.size(); ++i) {
    if (i) out += ", ";
    out += contents[i];
  }
  return out;
}

std::vector<std::string> generate_captions(const ImageRecord& record, const ImagePayload& image,
                                           Gateway& gateway, const ServiceProfile& vision_profile,
                                           const PromptLibrary& prompts, std::mt19937_64& rng,
                                           int repeats) {
  std::vector<std::string> captions;
  for (int i = 0; i < repeats; ++i) {
    const std::string prompt = build_caption_prompt(record, rng, prompts);
    std::vector<ChatMessage> messages{{ChatRole::user, prompt, {}}};
    try {
      captions.push_back(gateway.vision_chat(image, messages, vision_profile));
    } catch (const GatewayError& e) {
      throw GatewayError("caption generation failed for image '" + record.image_id +
                             "': " + e.what(),
                         e.attempts, e.transient);
    }
  }
  return captions;
}

std::vector<ChatMessage> build_task_messages(const ImageRecord& record,
                                             const std::vector<std::string>& captions,
                                             std::span<const InContextExample> examples,
                                             const PromptLibrary& prompts) {
  std::vector<ChatMessage> messages;
  messages.push_back({ChatRole::system, prompts.global_task, {}});
  for (const auto& ex : examples) {
    messages.push_back({ChatRole::user, ex.image2text, {}});
    messages.push_back({ChatRole::assistant, ex.response, {}});
  }
  std::ostringstream os;
  for (const auto& c : captions) os << c << "\n\n";
  os << format_coordinate_lines(record);
  messages.push_back({ChatRole::user, os.str(), {}});
  return messages;
}

namespace {

/// Heading line: optional leading/trailing '*' decorations around "[...]".
bool parse_heading(const std::string& line, std::string& heading) {
  std::string t = normalize_text(line);
  while (!t.empty() && t.front() == '*') t.erase(t.begin());
  while (!t.empty() && t.back() == '*') t.pop_back();
  t = normalize_text(t);
  if (t.size() < 3 || t.front() != '[' || t.back() != ']') return false;
  heading = t.substr(1, t.size() - 2);
  return !heading.empty();
}

std::vector<std::string> dedup_phrases(const std::string& joined) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& phrase : split_trimmed(joined, ',')) {
    const std::string key = casefold(strip_leading_article(phrase));
    if (seen.insert(key).second) out.push_back(phrase);
  }
  return out;
}

}  // namespace

std::vector<ObjectBlock> parse_object_blocks(const std::string& response) {
  std::vector<ObjectBlock> blocks;
  std::string heading;
  std::string self_text;
  std::string rel_text;
  int current_list = 0;  // 0 none, 1 self, 2 rel
  bool in_block = false;

  auto flush = [&]() {
    if (!in_block) return;
    ObjectBlock b;
    for (const auto& name : split_trimmed(heading, '/')) b.names.push_back(name);
    b.attrs_self = dedup_phrases(self_text);
    b.attrs_rel = dedup_phrases(rel_text);
    if (!b.names.empty() && (!b.attrs_self.empty() || !b.attrs_rel.empty())) {
      blocks.push_back(std::move(b));
    }
    self_text.clear();
    rel_text.clear();
    current_list = 0;
  };

  std::istringstream in(response);
  std::string line;
  while (std::getline(in, line)) {
    std::string next_heading;
    if (parse_heading(line, next_heading)) {
      flush();
      heading = next_heading;
      in_block = true;
      continue;
    }
    if (!in_block) continue;
    std::string t = normalize_text(line);
    if (t.rfind("(1)", 0) == 0) {
      current_list = 1;
      self_text += t.substr(3);
      self_text += ',';
    } else if (t.rfind("(2)", 0) == 0) {
      current_list = 2;
      rel_text += t.substr(3);
      rel_text += ',';
    } else if (!t.empty() && current_list == 1) {
      self_text += t;
      self_text += ',';
    } else if (!t.empty() && current_list == 2) {
      rel_text += t;
      rel_text += ',';
    }
  }
  flush();
  if (blocks.empty()) throw BlockParseError("response contains no parseable object blocks");
  return blocks;
}

std::string render_object_blocks(std::span<const ObjectBlock> blocks) {
  std::ostringstream os;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    os << "**[";
    for (std::size_t n = 0; n < b.names.size(); ++n) {
      if (n) os << "/";
      os << b.names[n];
    }
    os << "]**\n(1) ";
    for (std::size_t p = 0; p < b.attrs_self.size(); ++p) {
      if (p) os << ", ";
      os << b.attrs_self[p];
    }
    os << "\n(2) ";
    for (std::size_t p = 0; p < b.attrs_rel.size(); ++p) {
      if (p) os << ", ";
      os << b.attrs_rel[p];
    }
    os << "\n";
    if (i + 1 < blocks.size()) os << "\n";
  }
  return os.str();
}

BindOutcome bind_blocks(std::span<const ObjectBlock> blocks, const ImageRecord& record) {
  BindOutcome out;
  for (const auto& block : blocks) {
    std::vector<const ObjectEntry*> matches;
    for (const auto& obj : record.objects) {
      bool matched = false;
      for (const auto& name : block.names) {
        const std::string key = casefold(name);
        if (casefold(obj.category) == key) matched = true;
        for (const auto& seed : obj.seed_expressions) {
          if (casefold(normalize_text(seed)) == key) matched = true;
        }
        if (matched) break;
      }
      if (matched) matches.push_back(&obj);
    }
    if (matches.empty()) {
      std::string heading;
      for (const auto& n : block.names) {
        if (!heading.empty()) heading += '/';
        heading += n;
      }
      out.unmatched_blocks.push_back(heading);
      continue;
    }
    for (const ObjectEntry* obj : matches) {
      for (const auto* list : {&block.attrs_self, &block.attrs_rel}) {
        for (const auto& phrase : *list) {
          Expression e;
          e.text = normalize_text(phrase);
          e.target = TargetSet::of({obj->object_id});
          e.source = ExpressionSource::global;
          out.expressions.push_back(std::move(e));
        }
      }
    }
  }
  return out;
}

GlobalOutcome run_global(const ImageRecord& record, const ImagePayload& image, Gateway& gateway,
                         const PipelineConfig& config, const PromptLibrary& prompts,
                         const ServiceProfile& chat_profile, const ServiceProfile& vision_profile,
                         std::mt19937_64& rng) {
  GlobalOutcome out;
  // Existing captions (e.g. shipped dense captions) are used directly.
  if (!record.captions.empty()) {
    out.captions = record.captions;
  } else {
    out.captions = generate_captions(record, image, gateway, vision_profile, prompts, rng,
                                     config.caption_repeats);
  }
  const auto messages = build_task_messages(record, out.captions, prompts.global_examples, prompts);

  std::vector<ObjectBlock> blocks;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response = gateway.chat(messages, chat_profile);
    try {
      blocks = parse_object_blocks(response);
      break;
    } catch (const BlockParseError&) {
      if (attempt == 1) {
        out.parse_failed = true;
        return out;
      }
    }
  }
  auto bound = bind_blocks(blocks, record);
  out.expressions = std::move(bound.expressions);
  out.unmatched_blocks = std::move(bound.unmatched_blocks);
  return out;
}

}  // namespace indet

#include "indet/multi_object.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "indet/rng.hpp"
#include "indet/text.hpp"

namespace indet {

std::vector<ObjectProfile> build_profiles(const ImageRecord& record,
                                          std::span<const Expression> kept, Gateway& gateway,
                                          const ServiceProfile& embed_profile) {
  std::map<std::string, std::vector<std::string>> texts_by_object;  // ordered by object_id
  for (const auto& e : kept) {
    if (!e.target.single()) continue;
    const std::string& id = e.target.object_ids.front();
    if (!record.find_object(id)) {
      throw PipelineError("kept expression targets unknown object '" + id + "'");
    }
    texts_by_object[id].push_back(e.text);
  }
  std::vector<ObjectProfile> profiles;
  std::vector<std::string> profile_texts;
  for (auto& [id, texts] : texts_by_object) {
    ObjectProfile p;
    p.object_id = id;
    std::string joined;
    for (const auto& t : texts) {
      if (!joined.empty()) joined += ", ";
      joined += t;
    }
    p.profile_text = std::move(joined);
    profiles.push_back(std::move(p));
    profile_texts.push_back(profiles.back().profile_text);
  }
  if (!profiles.empty()) {
    const auto vectors = gateway.embed(profile_texts, embed_profile);
    for (std::size_t i = 0; i < profiles.size(); ++i) profiles[i].embedding = vectors[i];
  }
  return profiles;
}

namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

std::vector<int> dbscan(std::span<const std::vector<double>> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw PipelineError("dbscan eps must be positive");
  if (min_pts < 1) throw PipelineError("dbscan min_pts must be >= 1");
  const std::size_t n = points.size();
  std::vector<int> labels(n, kDbscanNoise);
  if (n == 0) return labels;
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw PipelineError("dbscan dimension mismatch");
  }
  const double eps2 = eps * eps;

  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (sq_distance(points[i], points[j]) <= eps2) neighbors[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    core[i] = neighbors[i].size() >= static_cast<std::size_t>(min_pts);
  }

  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != kDbscanNoise) continue;
    const int cluster = next_cluster++;
    std::deque<std::size_t> frontier{i};
    labels[i] = cluster;
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      if (!core[p]) continue;  // border points do not expand
      for (std::size_t q : neighbors[p]) {
        if (labels[q] != kDbscanNoise) continue;  // first cluster keeps it
        labels[q] = cluster;
        if (core[q]) frontier.push_back(q);
      }
    }
  }
  return labels;
}

std::string summarize_user_message(std::span<const ObjectProfile> cluster) {
  std::ostringstream os;
  os << "Objects and their descriptions:\n";
  for (const auto& p : cluster) {
    os << "## object " << p.object_id << ": " << p.profile_text << "\n";
  }
  os << "Please find an summarize the similar properties of given objects.";
  return os.str();
}

namespace {

bool says_no_common_properties(const std::string& response) {
  return contains_ci(response, "no common properties");
}

std::vector<std::string> parse_summary_phrases(const std::string& response) {
  std::vector<std::string> phrases;
  std::istringstream in(response);
  std::string line;
  bool any_marker = false;
  while (std::getline(in, line)) {
    const std::string t = normalize_text(line);
    if (t.rfind("##", 0) != 0) continue;
    any_marker = true;
    for (const auto& phrase : split_trimmed(t.substr(2), ';')) phrases.push_back(phrase);
  }
  if (!any_marker) throw PipelineError("summary reply carries no '##' line");
  return phrases;
}

}  // namespace

SummarizeOutcome summarize_cluster(const ImageRecord& record,
                                   std::span<const ObjectProfile> cluster, Gateway& gateway,
                                   const ServiceProfile& chat_profile,
                                   const PromptLibrary& prompts) {
  if (cluster.size() < 2) throw PipelineError("summarize_cluster needs a cluster of size >= 2");
  std::vector<ChatMessage> messages;
  messages.push_back({ChatRole::system, prompts.summarize_task, {}});
  for (const auto& ex : prompts.summarize_examples) {
    messages.push_back({ChatRole::user, ex.prompt, {}});
    messages.push_back({ChatRole::assistant, ex.response, {}});
  }
  messages.push_back({ChatRole::user, summarize_user_message(cluster), {}});

  std::vector<std::string> ids;
  for (const auto& p : cluster) ids.push_back(p.object_id);
  const TargetSet target = TargetSet::of(std::move(ids));

  SummarizeOutcome out;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response = gateway.chat(messages, chat_profile);
    if (says_no_common_properties(response)) return out;
    try {
      for (const auto& phrase : parse_summary_phrases(response)) {
        Expression e;
        e.text = phrase;
        e.target = target;
        e.source = ExpressionSource::summarized;
        out.expressions.push_back(std::move(e));
      }
      return out;
    } catch (const PipelineError&) {
      if (attempt == 1) {
        out.parse_failed = true;
        return out;
      }
    }
  }
  return out;
}

std::vector<Expression> splice_expressions(const ImageRecord& record,
                                           std::span<const Expression> kept,
                                           std::mt19937_64& rng, int cap) {
  std::vector<Expression> out;
  if (cap <= 0) return out;
  // Single-object expressions grouped per object, ascending object_id.
  std::map<std::string, std::vector<const Expression*>> by_object;
  for (const auto& e : kept) {
    if (!e.target.single()) continue;
    by_object[e.target.object_ids.front()].push_back(&e);
  }
  if (by_object.size() < 2) return out;
  std::vector<std::string> ids;
  for (const auto& [id, _] : by_object) ids.push_back(id);
  (void)record;

  std::set<std::string> seen_texts;
  for (int produced = 0; produced < cap;) {
    // Pick 2 (or occasionally 3) distinct objects.
    const bool triple = ids.size() >= 3 && pick_index(rng, 5) == 0;
    const std::size_t arity = triple ? 3 : 2;
    std::vector<std::string> chosen;
    while (chosen.size() < arity) {
      const std::string& id = ids[pick_index(rng, ids.size())];
      if (std::find(chosen.begin(), chosen.end(), id) == chosen.end()) chosen.push_back(id);
    }
    const bool use_and = pick_index(rng, 2) == 0;
    std::string text;
    std::vector<std::string> member_ids;
    for (const auto& id : chosen) {
      const auto& pool = by_object[id];
      const Expression* e = pool[pick_index(rng, pool.size())];
      if (!text.empty()) text += use_and ? " and " : ", ";
      text += e->text;
      member_ids.push_back(id);
    }
    ++produced;
    if (!seen_texts.insert(casefold(text)).second) continue;  // skip exact repeats
    Expression spliced;
    spliced.text = normalize_text(text);
    spliced.target = TargetSet::of(std::move(member_ids));
    spliced.source = ExpressionSource::spliced;
    out.push_back(std::move(spliced));
  }
  return out;
}

TransferOutcome transfer_ambiguous(const ImageRecord& record, std::span<const Expression> kept) {
  (void)record;
  TransferOutcome out;
  // Group single-object expressions by normalized case-folded text.
  std::map<std::string, std::vector<std::size_t>> by_text;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (!kept[i].target.single()) {
      out.remaining.push_back(kept[i]);
      continue;
    }
    by_text[casefold(kept[i].text)].push_back(i);
  }
  for (const auto& [text_key, indices] : by_text) {
    std::set<std::string> objects;
    for (std::size_t i : indices) objects.insert(kept[i].target.object_ids.front());
    if (objects.size() < 2) {
      for (std::size_t i : indices) out.remaining.push_back(kept[i]);
      continue;
    }
    Expression moved = kept[indices.front()];  // first occurrence's casing
    moved.target = TargetSet::of({objects.begin(), objects.end()});
    moved.source = ExpressionSource::transferred;
    moved.scores.reset();
    out.moved.push_back(std::move(moved));
  }
  return out;
}

}  // namespace indet

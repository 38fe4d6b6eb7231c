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

/// Per-object text profile: the object's surviving expressions joined with
/// commas, plus its embedding.
struct ObjectProfile {
  std::string object_id;
  std::string profile_text;
  std::vector<double> embedding;
};

/// One profile per object with at least one kept expression, in ascending
/// object_id order (the DBSCAN input order).
std::vector<ObjectProfile> build_profiles(const ImageRecord& record,
                                          std::span<const Expression> kept, Gateway& gateway,
                                          const ServiceProfile& embed_profile);

inline constexpr int kDbscanNoise = -1;

/// Standard DBSCAN, Euclidean metric, closed-ball neighborhoods
/// (distance <= eps), a point is core iff its ball holds >= min_pts points
/// including itself. Returns one label per point: cluster ids 0..m-1 in
/// discovery order, or kDbscanNoise. Border points reachable from several
/// clusters go to the cluster discovered first in input order.
std::vector<int> dbscan(std::span<const std::vector<double>> points, double eps, int min_pts);

struct SummarizeOutcome {
  std::vector<Expression> expressions;  // source=summarized
  bool parse_failed = false;            // skipped after one retry
};

/// Asks the chat service for common properties of a cluster (size >= 2);
/// phrases come from the "##" line of the reply, split on ";". A reply
/// stating there are no common properties yields zero expressions.
SummarizeOutcome summarize_cluster(const ImageRecord& record,
                                   std::span<const ObjectProfile> cluster, Gateway& gateway,
                                   const ServiceProfile& chat_profile,
                                   const PromptLibrary& prompts);

/// Builds the exact user message sent for a cluster (exposed for fixtures).
std::string summarize_user_message(std::span<const ObjectProfile> cluster);

/// Seeded pairs (and occasional triples) of distinct objects, one kept
/// expression each, joined by " and " or ", "; at most cap per image.
std::vector<Expression> splice_expressions(const ImageRecord& record,
                                           std::span<const Expression> kept,
                                           std::mt19937_64& rng, int cap);

struct TransferOutcome {
  std::vector<Expression> moved;      // source=transferred, |target| >= 2
  std::vector<Expression> remaining;  // untouched single-object expressions
};

/// An expression text kept for >= 2 distinct objects of one image is
/// ambiguous: it is removed from each single target and re-emitted once
/// against the set of those objects (match on normalized, case-folded
/// text).
TransferOutcome transfer_ambiguous(const ImageRecord& record, std::span<const Expression> kept);

}  // namespace indet

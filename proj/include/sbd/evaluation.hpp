// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/intervals.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace sbd {

struct MatchCriterion {
    enum class Kind { Overlap, Iou };
    Kind kind = Kind::Overlap;
    double iou_threshold = 0.5;  // iou mode: a pair qualifies when IoU >= threshold

    static MatchCriterion overlap() { return {}; }
    static MatchCriterion iou(double threshold);
    bool admits(const FrameInterval& pred, const FrameInterval& gt) const;
    std::string name() const;
};

struct MatchedPair {
    std::size_t pred = 0;
    std::size_t gt = 0;
    bool operator==(const MatchedPair&) const = default;
};

/// Greedy one-to-one matching: qualifying pairs ranked by overlap frames
/// (or IoU), ties by (gt begin, pred begin).
std::vector<MatchedPair> match_one_to_one(const std::vector<FrameInterval>& preds,
                                          const std::vector<FrameInterval>& gts, const MatchCriterion& criterion);

struct EvalResult {
    double precision = 1.0;
    double recall = 1.0;
    double f1 = 1.0;
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    std::size_t n_matched = 0;
    std::vector<MatchedPair> matched;  // empty for count-only summaries
    MatchCriterion criterion;
};

/// Empty conventions: no predictions gives P = 1, no ground truth gives R = 1.
EvalResult summarize_counts(std::size_t matched, std::size_t n_pred, std::size_t n_gt, MatchCriterion criterion);
EvalResult evaluate(const std::vector<FrameInterval>& preds, const std::vector<FrameInterval>& gts,
                    const MatchCriterion& criterion);

/// Size of a maximum bipartite matching between qualifying pairs (augmenting paths).
std::size_t max_matching_size(const std::vector<FrameInterval>& preds, const std::vector<FrameInterval>& gts,
                              const MatchCriterion& criterion);

nlohmann::json to_json(const EvalResult& r, bool with_pairs = false);

/// Cuts and graduals of one video, from a report or an annotation.
struct TypedTransitions {
    std::string video;
    std::vector<FrameInterval> cuts;
    std::vector<FrameInterval> graduals;
};

struct VideoEval {
    std::string video;
    EvalResult cuts;
    EvalResult graduals;
};

/// Types are scored separately; corpus figures are micro-averaged over
/// videos, and `total` pools both types.
struct CorpusEval {
    EvalResult cuts;
    EvalResult graduals;
    EvalResult total;
    std::vector<VideoEval> per_video;
};

/// Both sides must cover the same set of video ids (DataError otherwise).
CorpusEval evaluate_corpus(const std::vector<TypedTransitions>& preds, const std::vector<TypedTransitions>& gts,
                           const MatchCriterion& criterion);
nlohmann::json to_json(const CorpusEval& e);

}  // namespace sbd

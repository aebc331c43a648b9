// SPDX-License-Identifier: Apache-2.0
#include "sbd/evaluation.hpp"

#include "sbd/error.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>
#include <tuple>

namespace sbd {

MatchCriterion MatchCriterion::iou(double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("IoU threshold must lie in (0, 1]");
    return {Kind::Iou, threshold};
}

bool MatchCriterion::admits(const FrameInterval& pred, const FrameInterval& gt) const {
    if (kind == Kind::Overlap) return overlap_frames(pred, gt) >= 1;
    return interval_iou(pred, gt) >= iou_threshold;
}

std::string MatchCriterion::name() const {
    return kind == Kind::Overlap ? "overlap" : "iou";
}

std::vector<MatchedPair> match_one_to_one(const std::vector<FrameInterval>& preds,
                                          const std::vector<FrameInterval>& gts, const MatchCriterion& criterion) {
    struct Pair {
        double key;
        std::size_t p, g;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (!criterion.admits(preds[p], gts[g])) continue;
            const double key = criterion.kind == MatchCriterion::Kind::Overlap
                                   ? static_cast<double>(overlap_frames(preds[p], gts[g]))
                                   : interval_iou(preds[p], gts[g]);
            pairs.push_back({key, p, g});
        }
    }
    // Full tie-break on interval values keeps the result independent of input order.
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        if (a.key != b.key) return a.key > b.key;
        return std::tie(gts[a.g].begin, preds[a.p].begin, gts[a.g].end, preds[a.p].end, a.g, a.p) <
               std::tie(gts[b.g].begin, preds[b.p].begin, gts[b.g].end, preds[b.p].end, b.g, b.p);
    });
    std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
    std::vector<MatchedPair> out;
    for (const Pair& pr : pairs) {
        if (pred_used[pr.p] || gt_used[pr.g]) continue;
        pred_used[pr.p] = gt_used[pr.g] = true;
        out.push_back({pr.p, pr.g});
    }
    return out;
}

EvalResult summarize_counts(std::size_t matched, std::size_t n_pred, std::size_t n_gt, MatchCriterion criterion) {
    EvalResult r;
    r.n_pred = n_pred;
    r.n_gt = n_gt;
    r.n_matched = matched;
    r.criterion = criterion;
    r.precision = n_pred == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(n_pred);
    r.recall = n_gt == 0 ? 1.0 : static_cast<double>(matched) / static_cast<double>(n_gt);
    const double s = r.precision + r.recall;
    r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
    return r;
}

EvalResult evaluate(const std::vector<FrameInterval>& preds, const std::vector<FrameInterval>& gts,
                    const MatchCriterion& criterion) {
    auto matched = match_one_to_one(preds, gts, criterion);
    EvalResult r = summarize_counts(matched.size(), preds.size(), gts.size(), criterion);
    r.matched = std::move(matched);
    return r;
}

std::size_t max_matching_size(const std::vector<FrameInterval>& preds, const std::vector<FrameInterval>& gts,
                              const MatchCriterion& criterion) {
    std::vector<std::vector<std::size_t>> adj(preds.size());
    for (std::size_t p = 0; p < preds.size(); ++p) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (criterion.admits(preds[p], gts[g])) adj[p].push_back(g);
        }
    }
    std::vector<long> owner(gts.size(), -1);
    std::size_t size = 0;
    for (std::size_t p = 0; p < preds.size(); ++p) {
        std::vector<bool> seen(gts.size(), false);
        std::function<bool(std::size_t)> augment = [&](std::size_t u) {
            for (std::size_t g : adj[u]) {
                if (seen[g]) continue;
                seen[g] = true;
                if (owner[g] < 0 || augment(static_cast<std::size_t>(owner[g]))) {
                    owner[g] = static_cast<long>(u);
                    return true;
                }
            }
            return false;
        };
        if (augment(p)) ++size;
    }
    return size;
}

nlohmann::json to_json(const EvalResult& r, bool with_pairs) {
    nlohmann::json j = {{"precision", r.precision},
                        {"recall", r.recall},
                        {"f1", r.f1},
                        {"predictions", r.n_pred},
                        {"ground_truth", r.n_gt},
                        {"matched", r.n_matched},
                        {"criterion", r.criterion.name()}};
    if (r.criterion.kind == MatchCriterion::Kind::Iou) j["iou_threshold"] = r.criterion.iou_threshold;
    if (with_pairs) {
        nlohmann::json pairs = nlohmann::json::array();
        for (const auto& m : r.matched) pairs.push_back({m.pred, m.gt});
        j["pairs"] = pairs;
    }
    return j;
}

CorpusEval evaluate_corpus(const std::vector<TypedTransitions>& preds, const std::vector<TypedTransitions>& gts,
                           const MatchCriterion& criterion) {
    std::map<std::string, const TypedTransitions*> pred_by_id, gt_by_id;
    for (const auto& p : preds) {
        if (!pred_by_id.emplace(p.video, &p).second) throw DataError("duplicate prediction for video '" + p.video + "'");
    }
    for (const auto& g : gts) {
        if (!gt_by_id.emplace(g.video, &g).second) throw DataError("duplicate ground truth for video '" + g.video + "'");
    }
    for (const auto& [id, p] : pred_by_id) {
        if (!gt_by_id.count(id)) throw DataError("prediction for video '" + id + "' has no ground truth");
    }
    for (const auto& [id, g] : gt_by_id) {
        if (!pred_by_id.count(id)) throw DataError("ground truth for video '" + id + "' has no prediction");
    }

    CorpusEval out;
    std::size_t cm = 0, cp = 0, cg = 0, gm = 0, gp = 0, gg = 0;
    for (const auto& [id, g] : gt_by_id) {
        const TypedTransitions& p = *pred_by_id.at(id);
        VideoEval v{id, evaluate(p.cuts, g->cuts, criterion), evaluate(p.graduals, g->graduals, criterion)};
        cm += v.cuts.n_matched, cp += v.cuts.n_pred, cg += v.cuts.n_gt;
        gm += v.graduals.n_matched, gp += v.graduals.n_pred, gg += v.graduals.n_gt;
        out.per_video.push_back(std::move(v));
    }
    out.cuts = summarize_counts(cm, cp, cg, criterion);
    out.graduals = summarize_counts(gm, gp, gg, criterion);
    out.total = summarize_counts(cm + gm, cp + gp, cg + gg, criterion);
    return out;
}

nlohmann::json to_json(const CorpusEval& e) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& v : e.per_video) {
        per.push_back({{"video", v.video}, {"cuts", to_json(v.cuts)}, {"graduals", to_json(v.graduals)}});
    }
    return {{"cuts", to_json(e.cuts)}, {"graduals", to_json(e.graduals)}, {"total", to_json(e.total)}, {"per_video", per}};
}

}  // namespace sbd

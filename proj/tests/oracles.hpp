// SPDX-License-Identifier: Apache-2.0
// Brute-force reference implementations shared by the unit tests and the
// acceptance binary. Deliberately naive: clarity over speed.
#pragma once

#include "sbd/evaluation.hpp"
#include "sbd/gradual_detector.hpp"
#include "sbd/initial_filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace sbd::oracle {

/// Conflict-graph merge: repeatedly keep the best remaining candidate and
/// delete everything within `distance` of it.
inline std::vector<TransitionCandidate> merge(std::vector<TransitionCandidate> pool, std::int64_t distance) {
    std::vector<TransitionCandidate> kept;
    while (!pool.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool.size(); ++i) {
            const auto& a = pool[i];
            const auto& b = pool[best];
            const bool better = a.scale != b.scale                 ? a.scale < b.scale
                                : a.dissimilarity != b.dissimilarity ? a.dissimilarity > b.dissimilarity
                                                                     : a.center < b.center;
            if (better) best = i;
        }
        const TransitionCandidate winner = pool[best];
        kept.push_back(winner);
        std::vector<TransitionCandidate> rest;
        for (const auto& c : pool) {
            if (std::llabs(c.center - winner.center) > distance) rest.push_back(c);
        }
        pool = std::move(rest);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.center < b.center; });
    return kept;
}

/// Sort-and-take mining: every positive plus the top negatives by loss.
inline std::vector<std::size_t> mine(const std::vector<MatchLabel>& labels, const std::vector<SegmentPrediction>& preds,
                                     double ratio) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].kind == MatchKind::Positive) pos.push_back(i);
        if (labels[i].kind == MatchKind::Negative) neg.push_back(i);
    }
    std::stable_sort(neg.begin(), neg.end(), [&](std::size_t x, std::size_t y) {
        return classification_loss(preds[x], false) > classification_loss(preds[y], false);
    });
    std::size_t take = pos.empty() ? std::min<std::size_t>(1, neg.size())
                                   : std::min(neg.size(), static_cast<std::size_t>(ratio * pos.size()));
    std::vector<std::size_t> out = pos;
    out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(out.begin(), out.end());
    return out;
}

/// Largest relative error between the analytic ssbd_loss gradient and
/// central finite differences with step h.
inline double max_gradient_error(const std::vector<SegmentPrediction>& preds, const std::vector<MatchLabel>& labels,
                                 double lambda, double h = 1e-5) {
    const LossResult r = ssbd_loss(preds, labels, lambda);
    double worst = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (int field = 0; field < 4; ++field) {
            auto member = [field](SegmentPrediction& p) -> double& {
                switch (field) {
                    case 0: return p.logit_bg;
                    case 1: return p.logit_fg;
                    case 2: return p.dc;
                    default: return p.dl;
                }
            };
            auto plus = preds, minus = preds;
            member(plus[i]) += h;
            member(minus[i]) -= h;
            const double numeric = (ssbd_loss(plus, labels, lambda).loss - ssbd_loss(minus, labels, lambda).loss) / (2 * h);
            SegmentPrediction g = r.grad[i];
            const double analytic = member(g);
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
            worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
    }
    return worst;
}

/// True when every interval of length <= T/2 inside the video lies wholly in
/// one stitched window and consecutive starts are T/2 apart (the tail may be closer).
inline bool stitch_covers(std::int64_t video_length, int t_seg) {
    const auto starts = stitch_windows(video_length, t_seg);
    for (std::size_t i = 0; i + 2 < starts.size(); ++i) {
        if (starts[i + 1] - starts[i] != t_seg / 2) return false;
    }
    const std::int64_t half = t_seg / 2;
    for (std::int64_t b = 0; b < video_length; ++b) {
        for (std::int64_t len = 1; len <= half && b + len <= video_length; ++len) {
            const std::int64_t e = b + len - 1;
            const bool inside = std::any_of(starts.begin(), starts.end(), [&](std::int64_t s) {
                return s <= b && e < s + t_seg;
            });
            if (!inside) return false;
        }
    }
    return true;
}

/// Exhaustive assignment search for the largest one-to-one matching: DP over
/// (next pred, set of used gts). Sides must hold at most 16 intervals.
inline std::size_t max_matching(const std::vector<FrameInterval>& preds, const std::vector<FrameInterval>& gts,
                                const MatchCriterion& criterion) {
    const std::size_t full = std::size_t{1} << gts.size();
    std::vector<std::size_t> best(full, 0), next(full, 0);
    for (std::size_t p = preds.size(); p-- > 0;) {
        for (std::size_t used = 0; used < full; ++used) {
            std::size_t v = best[used];  // leave pred p unmatched
            for (std::size_t g = 0; g < gts.size(); ++g) {
                if (!(used >> g & 1U) && criterion.admits(preds[p], gts[g])) {
                    v = std::max(v, 1 + best[used | (std::size_t{1} << g)]);
                }
            }
            next[used] = v;
        }
        best.swap(next);
    }
    return best[0];
}

}  // namespace sbd::oracle

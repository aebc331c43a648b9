// SPDX-License-Identifier: Apache-2.0
#include "sbd/gradual_detector.hpp"

#include "sbd/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sbd {

void GridConfig::validate() const {
    if (!(negative_iou >= 0.0 && negative_iou < positive_iou && positive_iou < 1.0)) {
        throw DataError("grid thresholds need 0 <= negative_iou < positive_iou < 1");
    }
    if (lengths.empty()) throw DataError("grid needs at least one default segment length");
    for (double l : lengths) {
        if (!(l > 0.0)) throw DataError("default segment lengths must be positive");
        if (l > window_length) throw DataError("default segment length exceeds the window length");
    }
    if (window_length < 1) throw DataError("window length must be >= 1");
}

SegmentGrid generate_default_segments(const GridConfig& config) {
    config.validate();
    SegmentGrid grid;
    grid.config = config;
    for (std::size_t g = 0; g < config.lengths.size(); ++g) {
        const double l = config.lengths[g];
        const double spacing = l * (1.0 - config.positive_iou);
        const auto count = static_cast<std::size_t>(std::ceil(config.window_length / spacing - 1e-9));
        for (std::size_t i = 0; i < count; ++i) {
            const double c = static_cast<double>(i) * spacing;
            if (c >= config.window_length) break;
            grid.segments.push_back({c, l});
            grid.length_group.push_back(static_cast<int>(g));
        }
    }
    return grid;
}

Offsets encode_offsets(const CenterLength& gt, const DefaultSegment& anchor) {
    if (!(gt.length > 0.0) || !(anchor.length > 0.0)) {
        throw std::invalid_argument("offset encoding needs positive lengths");
    }
    return {(gt.center - anchor.center) / anchor.length, std::log(gt.length / anchor.length)};
}

CenterLength decode_offsets(const Offsets& pred, const DefaultSegment& anchor) {
    const double dl = std::clamp(pred.dl, -kMaxLogLengthOffset, kMaxLogLengthOffset);
    return {anchor.center + pred.dc * anchor.length, anchor.length * std::exp(dl)};
}

std::vector<MatchLabel> match_ground_truth(const SegmentGrid& grid, const std::vector<CenterLength>& gts) {
    const std::size_t n = grid.size();
    std::vector<MatchLabel> labels(n);
    std::vector<RawSpan> gt_spans;
    for (const auto& g : gts) {
        if (!(g.length > 0.0)) throw std::invalid_argument("ground truth length must be positive");
        gt_spans.push_back(center_length_to_span(g.center, std::max(1.0, g.length)));
    }

    // iou[i][j]: anchor i vs ground truth j.
    std::vector<std::vector<double>> iou(n, std::vector<double>(gts.size(), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const RawSpan a = center_length_to_span(grid.segments[i].center, grid.segments[i].length);
        for (std::size_t j = 0; j < gts.size(); ++j) {
            iou[i][j] = span_iou(a.begin, a.end, gt_spans[j].begin, gt_spans[j].end);
        }
    }

    const double a = grid.config.positive_iou;
    const double b = grid.config.negative_iou;
    for (std::size_t i = 0; i < n; ++i) {
        MatchLabel& m = labels[i];
        m.segment = i;
        int best = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (best < 0 || iou[i][j] > m.iou) {
                m.iou = iou[i][j];
                best = static_cast<int>(j);
            }
        }
        if (best >= 0 && m.iou > a) {
            m.kind = MatchKind::Positive;
            m.gt = best;
        } else if (m.iou < b) {
            m.kind = MatchKind::Negative;
        } else {
            m.kind = MatchKind::Ignore;
        }
    }

    for (std::size_t j = 0; j < gts.size(); ++j) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (iou[i][j] > iou[arg][j]) arg = i;
        }
        if (n == 0 || iou[arg][j] <= 0.0) continue;
        if (labels[arg].kind != MatchKind::Positive) {
            labels[arg].kind = MatchKind::Positive;
            labels[arg].gt = static_cast<int>(j);
        }
    }

    for (auto& m : labels) {
        if (m.kind == MatchKind::Positive) {
            m.target = encode_offsets(gts[static_cast<std::size_t>(m.gt)], grid.segments[m.segment]);
        }
    }
    return labels;
}

double smooth_l1(double x) {
    const double ax = std::abs(x);
    return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

namespace {

double smooth_l1_grad(double x) {
    return std::abs(x) < 1.0 ? x : (x > 0.0 ? 1.0 : -1.0);
}

// log(exp(bg) + exp(fg)) computed stably.
double log_sum_exp(double x, double y) {
    const double m = std::max(x, y);
    return m + std::log(std::exp(x - m) + std::exp(y - m));
}

}  // namespace

double gradual_probability(const SegmentPrediction& p) {
    return 1.0 / (1.0 + std::exp(p.logit_bg - p.logit_fg));
}

double classification_loss(const SegmentPrediction& p, bool positive) {
    const double lse = log_sum_exp(p.logit_bg, p.logit_fg);
    return lse - (positive ? p.logit_fg : p.logit_bg);
}

LossResult ssbd_loss(const std::vector<SegmentPrediction>& preds, const std::vector<MatchLabel>& labels,
                     double lambda) {
    if (preds.size() != labels.size()) throw std::invalid_argument("ssbd_loss: prediction/label count mismatch");
    LossResult r;
    r.grad.assign(preds.size(), SegmentPrediction{0.0, 0.0, 0.0, 0.0});
    for (const auto& m : labels) {
        if (m.kind != MatchKind::Ignore) ++r.n_cls;
        if (m.kind == MatchKind::Positive) ++r.n_loc;
    }
    if (r.n_cls == 0) throw DataError("ssbd_loss: every label is ignored");

    const double inv_cls = 1.0 / static_cast<double>(r.n_cls);
    const double inv_loc = r.n_loc > 0 ? 1.0 / static_cast<double>(r.n_loc) : 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const MatchLabel& m = labels[i];
        if (m.kind == MatchKind::Ignore) continue;
        const SegmentPrediction& p = preds[i];
        const bool positive = m.kind == MatchKind::Positive;
        r.cls_loss += classification_loss(p, positive) * inv_cls;

        const double prob_fg = gradual_probability(p);
        const double prob_bg = 1.0 - prob_fg;
        r.grad[i].logit_bg = (prob_bg - (positive ? 0.0 : 1.0)) * inv_cls;
        r.grad[i].logit_fg = (prob_fg - (positive ? 1.0 : 0.0)) * inv_cls;

        if (positive) {
            const double ec = p.dc - m.target.dc;
            const double el = p.dl - m.target.dl;
            r.loc_loss += (smooth_l1(ec) + smooth_l1(el)) * inv_loc;
            r.grad[i].dc = lambda * smooth_l1_grad(ec) * inv_loc;
            r.grad[i].dl = lambda * smooth_l1_grad(el) * inv_loc;
        }
    }
    r.loss = r.cls_loss + lambda * r.loc_loss;
    return r;
}

std::vector<std::size_t> hard_negative_mine(const std::vector<MatchLabel>& labels,
                                            const std::vector<SegmentPrediction>& preds, double ratio) {
    if (preds.size() != labels.size()) throw std::invalid_argument("hard_negative_mine: size mismatch");
    std::vector<std::size_t> selected;
    std::vector<std::pair<double, std::size_t>> negatives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].kind == MatchKind::Positive) {
            selected.push_back(i);
        } else if (labels[i].kind == MatchKind::Negative) {
            negatives.emplace_back(classification_loss(preds[i], false), i);
        }
    }
    std::size_t quota = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(selected.size())));
    if (selected.empty()) quota = std::min<std::size_t>(1, negatives.size());
    quota = std::min(quota, negatives.size());
    std::partial_sort(negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(quota), negatives.end(),
                      [](const auto& x, const auto& y) {
                          return x.first != y.first ? x.first > y.first : x.second < y.second;
                      });
    for (std::size_t i = 0; i < quota; ++i) selected.push_back(negatives[i].second);
    std::sort(selected.begin(), selected.end());
    return selected;
}

std::vector<MatchLabel> apply_mining(std::vector<MatchLabel> labels, const std::vector<std::size_t>& selected) {
    std::vector<bool> keep(labels.size(), false);
    for (std::size_t i : selected) keep.at(i) = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].kind == MatchKind::Negative && !keep[i]) labels[i].kind = MatchKind::Ignore;
    }
    return labels;
}

std::vector<GradualDetection> nms(std::vector<GradualDetection> detections) {
    std::sort(detections.begin(), detections.end(), [](const auto& x, const auto& y) {
        if (x.score != y.score) return x.score > y.score;
        if (x.interval.begin != y.interval.begin) return x.interval.begin < y.interval.begin;
        return x.interval.end > y.interval.end;
    });
    std::vector<GradualDetection> kept;
    for (const auto& d : detections) {
        const bool clash = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
            return overlap_frames(k.interval, d.interval) > 0;
        });
        if (!clash) kept.push_back(d);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) { return x.interval < y.interval; });
    return kept;
}

std::vector<std::int64_t> stitch_windows(std::int64_t video_length, int t_seg) {
    if (t_seg < 2 || t_seg % 2 != 0) throw DataError("T_seg must be even and >= 2");
    if (video_length < 1) throw DataError("video length must be >= 1");
    const std::int64_t half = t_seg / 2;
    std::vector<std::int64_t> starts;
    for (std::int64_t s = 0;; s += half) {
        if (s + t_seg > video_length) {
            // Clamped tail window; a video shorter than T_seg gets the single window at 0.
            const std::int64_t last = std::max<std::int64_t>(0, video_length - t_seg);
            if (starts.empty() || starts.back() < last) starts.push_back(last);
            break;
        }
        starts.push_back(s);
        if (s + t_seg >= video_length) break;
    }
    return starts;
}

std::vector<GradualDetection> detect_gradual(const std::vector<WindowPrediction>& windows, const SegmentGrid& grid,
                                             double threshold, std::optional<std::int64_t> video_length) {
    std::vector<GradualDetection> pooled;
    for (const auto& w : windows) {
        if (w.predictions.size() != grid.size()) {
            throw std::invalid_argument("window prediction count does not match the grid");
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const DefaultSegment& anchor = grid.segments[i];
            if (anchor.center > static_cast<double>(w.frame_count - 1)) continue;
            const SegmentPrediction& p = w.predictions[i];
            const double prob = gradual_probability(p);
            if (prob < threshold) continue;
            const CenterLength cl = decode_offsets({p.dc, p.dl}, anchor);
            RawSpan span = center_length_to_span(cl.center + static_cast<double>(w.start), std::max(1.0, cl.length));
            span.begin = std::max<std::int64_t>(span.begin, 0);
            if (video_length) span.end = std::min(span.end, *video_length - 1);
            if (span.end < span.begin) continue;
            pooled.push_back({FrameInterval{span.begin, span.end}, prob});
        }
    }
    return nms(std::move(pooled));
}

}  // namespace sbd

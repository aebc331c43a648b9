// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/intervals.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sbd {

/// Temporal anchor inside an L-frame window: center c_i in [0, L), length l_i.
struct DefaultSegment {
    double center = 0.0;
    double length = 1.0;
};

/// A ground truth or decoded prediction in (center, length) form.
struct CenterLength {
    double center = 0.0;
    double length = 1.0;
};

struct GridConfig {
    int window_length = 64;
    std::vector<double> lengths = {6.0, 20.0};
    double positive_iou = 0.5;
    double negative_iou = 0.1;

    void validate() const;
    bool operator==(const GridConfig&) const = default;
};

struct SegmentGrid {
    GridConfig config;
    std::vector<DefaultSegment> segments;  // by length, then center
    std::vector<int> length_group;         // index into config.lengths per segment

    std::size_t size() const { return segments.size(); }
};

/// One anchor every l * (1 - a) frames, ceil(L / (l * (1 - a))) per length.
SegmentGrid generate_default_segments(const GridConfig& config);

struct Offsets {
    double dc = 0.0;
    double dl = 0.0;
};

inline constexpr double kMaxLogLengthOffset = 10.0;

/// dc = (c - c_i) / l_i, dl = ln(l / l_i).
Offsets encode_offsets(const CenterLength& gt, const DefaultSegment& anchor);
/// c = c_i + dc * l_i, l = l_i * exp(clamp(dl, -10, 10)).
CenterLength decode_offsets(const Offsets& pred, const DefaultSegment& anchor);

enum class MatchKind { Negative, Positive, Ignore };

struct MatchLabel {
    std::size_t segment = 0;
    MatchKind kind = MatchKind::Negative;
    int gt = -1;          // matched ground truth when positive
    double iou = 0.0;     // best IoU over ground truths
    Offsets target;       // regression target when positive
};

/// Positive when best IoU > a, negative when < b, ignored otherwise; the
/// argmax anchor of every ground truth is forced positive.
std::vector<MatchLabel> match_ground_truth(const SegmentGrid& grid, const std::vector<CenterLength>& gts);

/// Per-anchor network output: background/gradual logits and offsets.
struct SegmentPrediction {
    double logit_bg = 0.0;
    double logit_fg = 0.0;
    double dc = 0.0;
    double dl = 0.0;
};

struct LossResult {
    double loss = 0.0;
    double cls_loss = 0.0;  // already divided by n_cls
    double loc_loss = 0.0;  // already divided by n_loc, before lambda
    std::size_t n_cls = 0;
    std::size_t n_loc = 0;
    std::vector<SegmentPrediction> grad;  // d loss / d prediction
};

double smooth_l1(double x);
double gradual_probability(const SegmentPrediction& p);
/// Softmax cross entropy of one anchor against its label (positive or negative).
double classification_loss(const SegmentPrediction& p, bool positive);

/// Joint softmax + smooth-L1 loss over the non-ignored labels. Throws when
/// every label is ignored.
LossResult ssbd_loss(const std::vector<SegmentPrediction>& preds, const std::vector<MatchLabel>& labels,
                     double lambda = 1.0);

/// Indices of the classification samples: every positive plus the hardest
/// negatives, ratio * positives of them (at least one when there are no
/// positives). Sorted ascending.
std::vector<std::size_t> hard_negative_mine(const std::vector<MatchLabel>& labels,
                                            const std::vector<SegmentPrediction>& preds, double ratio = 1.0);

/// Turns every negative not in `selected` into Ignore.
std::vector<MatchLabel> apply_mining(std::vector<MatchLabel> labels, const std::vector<std::size_t>& selected);

struct GradualDetection {
    FrameInterval interval;
    double score = 0.0;

    bool operator==(const GradualDetection&) const = default;
};

/// Greedy suppression: highest score first (ties: earlier begin, then longer),
/// drop anything sharing a frame with an already kept detection.
std::vector<GradualDetection> nms(std::vector<GradualDetection> detections);

/// Window starts 0, T/2, T, ... with a final window clamped to end at the last frame.
std::vector<std::int64_t> stitch_windows(std::int64_t video_length, int t_seg);

struct WindowPrediction {
    std::int64_t start = 0;        // video frame of window position 0
    std::int64_t frame_count = 0;  // frames actually present in the window
    std::vector<SegmentPrediction> predictions;  // one per grid segment
};

/// Threshold, decode, shift to video coordinates, pool, NMS. Anchors centred
/// beyond the window's frames are skipped; intervals are clipped to the video
/// when video_length is given.
std::vector<GradualDetection> detect_gradual(const std::vector<WindowPrediction>& windows, const SegmentGrid& grid,
                                             double threshold, std::optional<std::int64_t> video_length = {});

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <compare>

namespace sbd {

/// Closed frame interval [begin, end]; both endpoints belong to the interval.
struct FrameInterval {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    /// Validating factory: requires 0 <= begin <= end.
    static FrameInterval make(std::int64_t begin, std::int64_t end);

    std::int64_t length() const { return end - begin + 1; }
    double center() const { return 0.5 * static_cast<double>(begin + end); }
    bool contains(std::int64_t frame) const { return begin <= frame && frame <= end; }

    auto operator<=>(const FrameInterval&) const = default;
};

/// Number of frames shared by two closed intervals.
std::int64_t overlap_frames(const FrameInterval& a, const FrameInterval& b);

/// Frame-count intersection over union; 0 for disjoint intervals.
double interval_iou(const FrameInterval& a, const FrameInterval& b);

/// IoU for raw (possibly negative) closed spans. Anchor matching works on
/// unclamped spans so anchors hanging over the window edge keep their length.
double span_iou(std::int64_t a_begin, std::int64_t a_end,
                std::int64_t b_begin, std::int64_t b_end);

/// Round half up: floor(x + 0.5).
std::int64_t round_half_up(double x);

/// Unclamped [round(c - (l-1)/2), round(c + (l-1)/2)].
struct RawSpan {
    std::int64_t begin;
    std::int64_t end;
};
RawSpan center_length_to_span(double center, double length);

/// (center, length) to a frame interval, begin clamped to 0. Throws
/// std::invalid_argument when length < 1.
FrameInterval center_length_to_interval(double center, double length);

}  // namespace sbd

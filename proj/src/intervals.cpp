// SPDX-License-Identifier: Apache-2.0
#include "sbd/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sbd {

FrameInterval FrameInterval::make(std::int64_t begin, std::int64_t end) {
    if (begin < 0 || end < begin) {
        throw std::invalid_argument("invalid frame interval [" + std::to_string(begin) + ", " +
                                    std::to_string(end) + "]");
    }
    return FrameInterval{begin, end};
}

std::int64_t overlap_frames(const FrameInterval& a, const FrameInterval& b) {
    const std::int64_t lo = std::max(a.begin, b.begin);
    const std::int64_t hi = std::min(a.end, b.end);
    return hi >= lo ? hi - lo + 1 : 0;
}

double span_iou(std::int64_t a_begin, std::int64_t a_end,
                std::int64_t b_begin, std::int64_t b_end) {
    const std::int64_t lo = std::max(a_begin, b_begin);
    const std::int64_t hi = std::min(a_end, b_end);
    if (hi < lo) return 0.0;
    const std::int64_t inter = hi - lo + 1;
    const std::int64_t uni = (a_end - a_begin + 1) + (b_end - b_begin + 1) - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double interval_iou(const FrameInterval& a, const FrameInterval& b) {
    return span_iou(a.begin, a.end, b.begin, b.end);
}

std::int64_t round_half_up(double x) {
    return static_cast<std::int64_t>(std::floor(x + 0.5));
}

RawSpan center_length_to_span(double center, double length) {
    const double half = 0.5 * (length - 1.0);
    return {round_half_up(center - half), round_half_up(center + half)};
}

FrameInterval center_length_to_interval(double center, double length) {
    if (!(length >= 1.0)) {
        throw std::invalid_argument("interval length must be >= 1, got " + std::to_string(length));
    }
    RawSpan s = center_length_to_span(center, length);
    s.begin = std::max<std::int64_t>(s.begin, 0);
    s.end = std::max(s.end, s.begin);
    return FrameInterval{s.begin, s.end};
}

}  // namespace sbd

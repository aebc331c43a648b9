// SPDX-License-Identifier: Apache-2.0
#include "sbd/intervals.hpp"

#include <doctest.h>

#include <set>
#include <stdexcept>

using namespace sbd;

namespace {

double brute_iou(FrameInterval a, FrameInterval b) {
    std::set<std::int64_t> sa, sb, uni;
    for (auto i = a.begin; i <= a.end; ++i) sa.insert(i), uni.insert(i);
    for (auto i = b.begin; i <= b.end; ++i) sb.insert(i), uni.insert(i);
    std::size_t inter = 0;
    for (auto i : sa) inter += sb.count(i);
    return static_cast<double>(inter) / static_cast<double>(uni.size());
}

}  // namespace

TEST_CASE("interval_iou examples") {
    CHECK(interval_iou({10, 19}, {10, 19}) == 1.0);
    CHECK(interval_iou({10, 19}, {30, 39}) == 0.0);
    CHECK(interval_iou({10, 19}, {15, 24}) == doctest::Approx(5.0 / 15.0));
}

TEST_CASE("overlap_frames examples") {
    CHECK(overlap_frames({100, 120}, {118, 130}) == 3);
    CHECK(overlap_frames({0, 0}, {0, 0}) == 1);
    CHECK(overlap_frames({0, 5}, {6, 9}) == 0);
}

TEST_CASE("center_length_to_interval rounds half up and clamps") {
    CHECK(center_length_to_interval(32.0, 6.0) == FrameInterval{30, 35});
    CHECK(center_length_to_interval(5.0, 1.0) == FrameInterval{5, 5});
    CHECK(center_length_to_interval(1.0, 6.0) == FrameInterval{0, 4});
    CHECK_THROWS_AS(center_length_to_interval(5.0, 0.5), std::invalid_argument);
}

TEST_CASE("round_half_up on negatives") {
    CHECK(round_half_up(-1.5) == -1);
    CHECK(round_half_up(-0.5) == 0);
    CHECK(round_half_up(2.5) == 3);
    CHECK(round_half_up(2.4999) == 2);
}

TEST_CASE("FrameInterval::make validates") {
    CHECK_THROWS_AS(FrameInterval::make(5, 4), std::invalid_argument);
    CHECK_THROWS_AS(FrameInterval::make(-1, 4), std::invalid_argument);
    CHECK(FrameInterval::make(3, 3).length() == 1);
}

TEST_CASE("closed form agrees with frame-set oracle on [0,30]") {
    // The exhaustive [0,50] sweep lives in the acceptance binary.
    for (std::int64_t ab = 0; ab <= 30; ++ab)
        for (std::int64_t ae = ab; ae <= 30; ++ae)
            for (std::int64_t bb = 0; bb <= 30; bb += 3)
                for (std::int64_t be = bb; be <= 30; be += 2) {
                    const FrameInterval a{ab, ae}, b{bb, be};
                    const double iou = interval_iou(a, b);
                    REQUIRE(iou == doctest::Approx(brute_iou(a, b)).epsilon(1e-12));
                    REQUIRE(iou == interval_iou(b, a));
                    REQUIRE(iou >= 0.0);
                    REQUIRE(iou <= 1.0);
                    REQUIRE((overlap_frames(a, b) >= 1) == (std::max(ab, bb) <= std::min(ae, be)));
                }
}

TEST_CASE("self IoU is one") {
    for (std::int64_t b = 0; b < 100; b += 7)
        for (std::int64_t e = b; e < 100; e += 5) CHECK(interval_iou({b, e}, {b, e}) == 1.0);
}

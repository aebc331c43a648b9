// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/features.hpp"

#include <cstdint>
#include <vector>

namespace sbd {

struct FilterConfig {
    double sigma = 0.05;     // dynamic threshold ratio
    double t_static = 0.5;   // static threshold
    int half_window = 10;    // a: the window spans positions n-a+1 .. n+a-1
    std::vector<int> scales = {1, 2, 4, 8, 16, 32};
    std::int64_t merge_distance = 5;

    /// Throws DataError on an invalid configuration.
    void validate() const;
};

struct TransitionCandidate {
    std::int64_t center = 0;  // base-rate frame index
    int scale = 1;
    double dissimilarity = 0.0;  // 1 - S_n

    bool operator==(const TransitionCandidate&) const = default;
};

/// T = t + (sigma / m) * sum(1 - S_i) over the window [n-a+1, n+a-1] clipped
/// to the series, m being the number of summed terms.
double adaptive_threshold(const SimilaritySeries& series, std::size_t n, const FilterConfig& cfg);

/// Every position with 1 - S_n > T; centers mapped back as n * scale.
std::vector<TransitionCandidate> detect_at_scale(const SimilaritySeries& series, const FilterConfig& cfg);

/// Cross-scale merge. Candidates within merge_distance frames conflict; the
/// survivor of a conflict is the lower scale, then the larger dissimilarity,
/// then the smaller center. Output sorted by center.
std::vector<TransitionCandidate> merge_scales(const std::vector<std::vector<TransitionCandidate>>& per_scale,
                                              const FilterConfig& cfg);

/// Full stage 1: similarity series at every configured scale (scales with
/// fewer than two sampled frames are skipped), detection, then merge.
std::vector<TransitionCandidate> run_initial_filter(const FeatureSequence& features, const FilterConfig& cfg,
                                                    int threads = 1);

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/initial_filter.hpp"

#include "sbd/error.hpp"
#include "sbd/parallel.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace sbd {

void FilterConfig::validate() const {
    if (!(sigma >= 0.0)) throw DataError("filter sigma must be >= 0");
    if (!(t_static >= 0.0 && t_static <= 1.0)) throw DataError("filter t_static must lie in [0, 1]");
    if (half_window < 2) throw DataError("filter half_window must be >= 2");
    if (scales.empty()) throw DataError("filter needs at least one scale");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (scales[i] < 1) throw DataError("filter scales must be >= 1");
        if (i > 0 && scales[i] <= scales[i - 1]) throw DataError("filter scales must be strictly ascending");
    }
    if (merge_distance < 0) throw DataError("filter merge_distance must be >= 0");
}

double adaptive_threshold(const SimilaritySeries& series, std::size_t n, const FilterConfig& cfg) {
    const auto size = static_cast<std::int64_t>(series.values.size());
    const auto pos = static_cast<std::int64_t>(n);
    const std::int64_t lo = std::max<std::int64_t>(0, pos - cfg.half_window + 1);
    const std::int64_t hi = std::min<std::int64_t>(size - 1, pos + cfg.half_window - 1);
    if (hi < lo) throw std::invalid_argument("adaptive threshold: empty window");
    double sum = 0.0;
    for (std::int64_t i = lo; i <= hi; ++i) sum += 1.0 - series.values[static_cast<std::size_t>(i)];
    const auto m = static_cast<double>(hi - lo + 1);
    return cfg.t_static + cfg.sigma / m * sum;
}

std::vector<TransitionCandidate> detect_at_scale(const SimilaritySeries& series, const FilterConfig& cfg) {
    std::vector<TransitionCandidate> out;
    const std::size_t n = series.values.size();
    if (n == 0) return out;

    // Running window sum over (1 - S_i) so each position is O(1).
    const auto a = static_cast<std::size_t>(cfg.half_window);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + (1.0 - series.values[i]);

    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t lo = pos + 1 >= a ? pos + 1 - a : 0;
        const std::size_t hi = std::min(n - 1, pos + a - 1);
        const double m = static_cast<double>(hi - lo + 1);
        const double threshold = cfg.t_static + cfg.sigma / m * (prefix[hi + 1] - prefix[lo]);
        const double dis = 1.0 - series.values[pos];
        if (dis > threshold) {
            out.push_back({static_cast<std::int64_t>(pos) * series.scale, series.scale, dis});
        }
    }
    return out;
}

namespace {

bool survives_before(const TransitionCandidate& a, const TransitionCandidate& b) {
    if (a.scale != b.scale) return a.scale < b.scale;
    if (a.dissimilarity != b.dissimilarity) return a.dissimilarity > b.dissimilarity;
    return a.center < b.center;
}

}  // namespace

std::vector<TransitionCandidate> merge_scales(const std::vector<std::vector<TransitionCandidate>>& per_scale,
                                              const FilterConfig& cfg) {
    std::vector<TransitionCandidate> all;
    for (const auto& list : per_scale) all.insert(all.end(), list.begin(), list.end());
    std::sort(all.begin(), all.end(), survives_before);

    // Greedy in priority order; kept centers live in an ordered set so the
    // conflict test is a neighbour lookup.
    std::multiset<std::int64_t> kept_centers;
    std::vector<TransitionCandidate> kept;
    for (const auto& c : all) {
        auto it = kept_centers.lower_bound(c.center - cfg.merge_distance);
        if (it != kept_centers.end() && *it <= c.center + cfg.merge_distance) continue;
        kept_centers.insert(c.center);
        kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.center != b.center ? a.center < b.center : a.scale < b.scale;
    });
    return kept;
}

std::vector<TransitionCandidate> run_initial_filter(const FeatureSequence& features, const FilterConfig& cfg,
                                                    int threads) {
    cfg.validate();
    if (features.size() < 2) throw DataError("initial filter needs at least 2 frames");
    std::vector<std::vector<TransitionCandidate>> per_scale(cfg.scales.size());
    parallel_for(cfg.scales.size(), threads, [&](std::size_t i) {
        const int scale = cfg.scales[i];
        if ((features.size() - 1) / static_cast<std::size_t>(scale) < 1) return;
        per_scale[i] = detect_at_scale(similarity_series(features, scale), cfg);
    });
    return merge_scales(per_scale, cfg);
}

}  // namespace sbd

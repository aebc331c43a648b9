// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/features.hpp"
#include "sbd/initial_filter.hpp"
#include "sbd/intervals.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace sbd {

/// 2k frame indices around a candidate: center-k+1 .. center+k, edges
/// clamped by repeating the boundary frame.
struct CutWindow {
    std::int64_t center = 0;
    std::vector<std::int64_t> frame_indices;

    int k() const { return static_cast<int>(frame_indices.size() / 2); }
};

struct CutDecision {
    std::int64_t center = 0;
    double score = 0.0;
    bool is_cut = false;
    FrameInterval interval;  // [center, center + 1] when is_cut
};

struct CutConfig {
    int k = 3;
    double threshold = 0.5;
    double kappa = 0.02;
    double epsilon = 1e-6;
};

CutWindow build_cut_window(std::int64_t center, std::int64_t video_length, int k);

/// Contrast-normalised histogram break across the window center:
/// clamp01(kappa * (1 - cos(mean(before), mean(after))) / (eps + max intra-side
/// adjacent dissimilarity)).
double baseline_cut_score(const CutWindow& window, const FeatureSequence& features,
                          double kappa = CutConfig{}.kappa, double epsilon = CutConfig{}.epsilon);

/// Scores a candidate center; implementations must be safe for concurrent calls.
using CutScorer = std::function<double(std::int64_t center)>;

CutScorer make_baseline_scorer(const FeatureSequence& features, const CutConfig& cfg);

/// Externally computed scores keyed by center frame. Centers missing from the
/// table score 0 and therefore fall through to the gradual stage.
using ExternalCutScores = std::map<std::int64_t, double>;
ExternalCutScores parse_external_cut_scores(const std::string& json_text);
ExternalCutScores load_external_cut_scores(const std::filesystem::path& path);
CutScorer make_external_scorer(ExternalCutScores scores);

struct CutPartition {
    std::vector<CutDecision> cuts;
    std::vector<TransitionCandidate> survivors;
    std::vector<CutDecision> decisions;  // one per input candidate, input order
};

CutPartition classify_cuts(const std::vector<TransitionCandidate>& candidates, const CutScorer& scorer,
                           double threshold, int threads = 1);

}  // namespace sbd

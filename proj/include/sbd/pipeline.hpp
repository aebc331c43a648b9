// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/cut_detector.hpp"
#include "sbd/dataset.hpp"
#include "sbd/evaluation.hpp"
#include "sbd/features.hpp"
#include "sbd/gradual_detector.hpp"
#include "sbd/initial_filter.hpp"
#include "sbd/toy_scorer.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sbd {

/// Flat on purpose: JSON keys are the field names, CLI flags their kebab-case.
struct PipelineConfig {
    FilterConfig filter;
    CutConfig cut;
    std::string cut_scores;          // external score file; empty selects the baseline scorer
    std::int64_t expansion = 32;     // x
    int t_seg = 64;
    double gradual_threshold = 0.5;
    std::string toy_params;          // empty disables stage 3
    int histogram_bins = kDefaultHistogramBins;

    void validate() const;
};

nlohmann::json to_json(const PipelineConfig& cfg);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, PipelineConfig base = {});

/// Models resolved from the config paths, loaded once per process.
struct PipelineModels {
    std::optional<ToyScorerParams> toy;
    std::optional<ExternalCutScores> cut_scores;

    static PipelineModels load(const PipelineConfig& cfg);
};

std::vector<FrameInterval> expand_candidates(const std::vector<TransitionCandidate>& survivors, std::int64_t x,
                                             std::int64_t video_length);

struct ScoredCut {
    FrameInterval interval;
    double score = 0.0;
};

struct StageTimes {
    double extract_ms = 0.0;
    double filter_ms = 0.0;
    double cut_ms = 0.0;
    double gradual_ms = 0.0;
    double total_ms() const { return extract_ms + filter_ms + cut_ms + gradual_ms; }
};

struct TransitionReport {
    std::string video;
    std::int64_t frame_count = 0;
    std::vector<ScoredCut> cuts;
    std::vector<GradualDetection> graduals;
    std::vector<TransitionCandidate> candidates;
    std::size_t cut_confirmed = 0;
    std::size_t gradual_windows = 0;
    std::size_t dropped_by_cut = 0;      // graduals removed by cut precedence
    std::int64_t frames_stage1 = 0;
    std::int64_t frames_later = 0;       // distinct frames read by stages 2 and 3
    StageTimes times;
    nlohmann::json config;

    double fps() const;
};

/// Timing fields are omitted when include_timing is false; the remainder is
/// deterministic for fixed inputs.
nlohmann::json to_json(const TransitionReport& r, bool include_timing = true);

TypedTransitions report_transitions_from_json(const nlohmann::json& j);
TypedTransitions transitions_of(const TransitionReport& r);
TypedTransitions transitions_of(const VideoAnnotation& a);

TransitionReport run_pipeline(const FeatureSequence& features, const PipelineConfig& cfg, const PipelineModels& models,
                              const std::string& video_id = {}, int threads = 1);

/// Training windows for the toy scorer from one annotated video: the windows
/// the cascade itself would score plus one window centred on every gradual.
/// Windows touching a too-hard region are skipped; ground truths are clipped
/// to the window and dropped when less than half remains.
std::vector<TrainingWindow> build_training_windows(const FeatureSequence& features, const VideoAnnotation& annotation,
                                                   const PipelineConfig& cfg, const SegmentGrid& grid);

}  // namespace sbd

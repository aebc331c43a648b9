// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/features.hpp"
#include "sbd/gradual_detector.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sbd {

/// Read-only view of the frames of one detection window.
struct WindowFrames {
    const FeatureSequence* features = nullptr;
    std::int64_t start = 0;
    std::int64_t count = 0;

    std::span<const float> row(std::int64_t i) const {
        return features->row(static_cast<std::size_t>(start + i));
    }
};

/// Per-anchor pooled statistics fed to the linear scorer. Built from the
/// cosine-dissimilarity profile sampled over [c - l, c + l] around the anchor.
class AnchorSummarizer {
public:
    static constexpr int kProfilePoints = 9;
    static constexpr std::size_t kDim = 2 * (kProfilePoints - 1) * 2 + 6 + 1;

    /// Summaries for every grid segment, row-major (segments x kDim).
    static std::vector<double> summarize(const WindowFrames& window, const SegmentGrid& grid);
};

/// Linear map from anchor summaries to (logit_bg, logit_fg, dc, dl); one
/// weight matrix per default-segment length.
struct ToyScorerParams {
    GridConfig grid;
    std::size_t summary_dim = AnchorSummarizer::kDim;
    std::vector<double> weights;  // groups x 4 x summary_dim
    // Summaries are standardised as (x - mean) / scale before the linear map;
    // empty vectors mean identity.
    std::vector<double> feature_mean;
    std::vector<double> feature_scale;

    static ToyScorerParams initial(const GridConfig& grid, std::uint64_t seed);
    /// Per-dimension mean and standard deviation over every anchor summary;
    /// constant dimensions (the bias) pass through unchanged.
    void fit_standardizer(const std::vector<std::vector<double>>& summaries);
    void standardize(std::span<const double> x, std::span<double> out) const;
    std::size_t group_stride() const { return 4 * summary_dim; }
    bool operator==(const ToyScorerParams&) const = default;
};

std::vector<SegmentPrediction> score_summaries(const ToyScorerParams& params, const SegmentGrid& grid,
                                               std::span<const double> summaries);

WindowPrediction predict_window(const ToyScorerParams& params, const SegmentGrid& grid,
                                const WindowFrames& window);

struct TrainingWindow {
    std::vector<double> summaries;    // from AnchorSummarizer
    std::vector<CenterLength> gts;    // window coordinates, already clipped
};

struct TrainConfig {
    int epochs = 5;
    double learning_rate = 0.001;
    double momentum = 0.9;
    double lambda = 1.0;
    double negative_ratio = 1.0;
    std::uint64_t seed = 7;
};

struct TrainResult {
    ToyScorerParams params;
    std::vector<double> epoch_losses;  // mean per-window loss of each epoch
};

/// Without `init` the standardiser is fitted on the corpus first.
/// SGD with momentum over windows in a seeded shuffled order; every step
/// matches anchors, mines hard negatives and back-propagates ssbd_loss.
TrainResult train_toy_scorer(const std::vector<TrainingWindow>& corpus, const SegmentGrid& grid,
                             const TrainConfig& cfg, const ToyScorerParams* init = nullptr);

/// Mean ssbd_loss of the corpus under fixed parameters (mining included).
double corpus_loss(const std::vector<TrainingWindow>& corpus, const SegmentGrid& grid,
                   const ToyScorerParams& params, const TrainConfig& cfg);

// "SBDT1" | u32 header bytes | JSON header | u32 weight count | f32 LE weights
void save_toy_params(const ToyScorerParams& params, const std::filesystem::path& path);
ToyScorerParams load_toy_params(const std::filesystem::path& path);

}  // namespace sbd

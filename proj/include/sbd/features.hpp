// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sbd {

/// Interleaved 8-bit RGB image, row-major.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> rgb;  // height * width * 3

    Image() = default;
    Image(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), rgb(static_cast<std::size_t>(h) * w * 3, fill) {}

    std::uint8_t* pixel(int y, int x) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* pixel(int y, int x) const {
        return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    bool operator==(const Image&) const = default;
};

struct FrameFeature {
    std::vector<float> values;
    std::int64_t frame_index = 0;
};

/// Per-frame features of one video stored as a dense frame_count x dim matrix.
class FeatureSequence {
public:
    FeatureSequence() = default;
    FeatureSequence(std::size_t frame_count, std::size_t dim);

    std::size_t size() const { return frames_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return frames_ == 0; }

    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    const std::vector<float>& data() const { return data_; }

    void set(std::size_t i, const FrameFeature& f);
    FrameFeature at(std::size_t i) const;

    /// Appends a frame; the first call fixes the dimension.
    void push_back(std::span<const float> values);

private:
    std::size_t frames_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

struct SimilaritySeries {
    std::vector<double> values;  // values[k] compares sampled frames k and k+1
    std::string video_id;
    int scale = 1;
};

inline constexpr int kDefaultHistogramBins = 64;
inline constexpr double kHistogramEpsilon = 1e-8;

/// Per-channel normalized colour histogram, channels concatenated (R, G, B).
/// Every bin receives kHistogramEpsilon so the vector never has zero norm.
FrameFeature extract_histogram_feature(const Image& frame, int bins = kDefaultHistogramBins,
                                       std::int64_t frame_index = 0);

/// Raw per-channel histograms without epsilon smoothing (each channel sums to 1).
std::vector<double> channel_histograms(const Image& frame, int bins);

double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(const FrameFeature& a, const FrameFeature& b);

/// 1 - cosine similarity.
inline double cosine_dissimilarity(std::span<const float> a, std::span<const float> b) {
    return 1.0 - cosine_similarity(a, b);
}

/// S_k = cos(F[k*scale], F[(k+1)*scale]) over the frames sampled at stride `scale`.
SimilaritySeries similarity_series(const FeatureSequence& frames, int scale,
                                   std::string video_id = {});

/// Extracts histogram features for every frame, `threads` workers.
FeatureSequence extract_features(std::span<const Image> frames, int bins = kDefaultHistogramBins,
                                 int threads = 1);

// Feature files: binary "SBDF1" (u32 frame_count, u32 dim, f32 LE row-major)
// or a JSON array of arrays. load_external_features sniffs the magic.
FeatureSequence load_external_features(const std::filesystem::path& path);
void write_feature_file(const FeatureSequence& features, const std::filesystem::path& path);

/// Parses the JSON form: either [[...], ...] or [{"frame_index": i, "values": [...]}, ...].
FeatureSequence parse_feature_json(const std::string& text);

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/dataset.hpp"
#include "sbd/features.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sbd {

enum class GradualKind { Dissolve, Fade, Slide };

std::string to_string(GradualKind kind);
GradualKind gradual_kind_from_string(const std::string& s);

struct GradualSpec {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    GradualKind kind = GradualKind::Dissolve;
};

struct Perturbation {
    int shake = 0;         // max cyclic shift in pixels per frame
    double flicker = 0.0;  // relative brightness amplitude
    double noise = 0.0;    // per-pixel sensor noise, standard deviation in levels
};

struct SynthSpec {
    std::string video = "synthetic";
    std::int64_t length = 100;
    std::uint64_t seed = 1;  // image pool and perturbation seed
    int width = 64;
    int height = 48;
    std::vector<std::int64_t> cuts;  // cut n switches shots between frames n and n+1
    std::vector<GradualSpec> graduals;
    Perturbation perturbation;

    /// Transitions inside the video, gradual length in [3, 40], cuts and
    /// graduals pairwise disjoint and at least 5 frames apart. Throws DataError.
    void validate() const;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);
/// A single spec object or an array of them.
std::vector<SynthSpec> parse_synth_specs(const std::string& text);

struct SynthVideo {
    std::vector<Image> frames;
    VideoAnnotation annotation;
};

/// Deterministic given the spec. Shots are perturbed base images; dissolves
/// blend linearly with weight (t - b) / (e - b), fades pass through black,
/// slides push the next shot in from the right.
SynthVideo synthesize_video(const SynthSpec& spec);

/// Writes frames as frame_%08d.png plus annotation.json under out_dir.
ManifestEntry write_synth_video(const SynthVideo& video, const std::filesystem::path& out_dir);

/// Randomised corpus plan: `count` videos of roughly `length` frames sharing
/// `total_cuts` cuts and `total_graduals` graduals (kinds rotate, lengths
/// uniform in [3, 40]), transitions at least `min_gap` frames apart.
std::vector<SynthSpec> plan_corpus(const std::string& prefix, int count, std::int64_t length, int total_cuts,
                                   int total_graduals, std::uint64_t seed, std::int64_t min_gap = 20,
                                   Perturbation perturbation = {});

/// Smallest cosine dissimilarity across an annotated cut minus the largest
/// adjacent dissimilarity inside a shot (positive when consistent).
double annotation_consistency_margin(const FeatureSequence& features, const VideoAnnotation& annotation);

}  // namespace sbd

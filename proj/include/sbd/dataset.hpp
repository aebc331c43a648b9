// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/intervals.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace sbd {

/// One annotator's transitions for one video. Cuts are [n, n+1].
struct VideoAnnotation {
    std::string video;
    std::int64_t frame_count = 0;
    std::string annotator;
    std::vector<FrameInterval> cuts;
    std::vector<FrameInterval> graduals;
    std::vector<FrameInterval> too_hard;

    /// Throws DataError naming the offending field.
    void validate(const std::string& context = "annotation") const;
    /// Sorts every list by begin frame.
    void normalize();
    bool operator==(const VideoAnnotation&) const = default;
};

nlohmann::json to_json(const VideoAnnotation& a);
VideoAnnotation annotation_from_json(const nlohmann::json& j, const std::string& context = "annotation");

/// Accepts a single annotation object or an array of them; every record is validated.
std::vector<VideoAnnotation> parse_annotations_text(const std::string& text);
std::vector<VideoAnnotation> parse_annotations(const std::filesystem::path& path);
/// One record is written as an object, several as an array.
void write_annotations(const std::vector<VideoAnnotation>& records, const std::filesystem::path& path);

struct Disagreement {
    std::string kind;       // "cut", "gradual" or "too_hard"
    std::string annotator;  // whose entry is reported
    FrameInterval interval;
    std::string reason;

    bool operator==(const Disagreement&) const = default;
};

struct MergeResult {
    VideoAnnotation merged;
    std::vector<Disagreement> disagreements;
};

/// Double-annotation reconciliation. Same-type transitions sharing a frame
/// are paired greedily (largest overlap first); agreed graduals merge to the
/// hull of the pair, agreed cuts must coincide. Unpaired entries and every
/// too-hard region become disagreements, and transitions touching a too-hard
/// region are left out of the merged record.
MergeResult merge_double_annotations(const VideoAnnotation& a, const VideoAnnotation& b);

/// Corpus manifest entry.
struct ManifestEntry {
    std::string video;
    std::filesystem::path frames_dir;
    std::filesystem::path annotation_path;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);

}  // namespace sbd

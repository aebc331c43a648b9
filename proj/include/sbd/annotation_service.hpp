// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace sbd {

inline constexpr std::int64_t kPageFrames = 45;
inline constexpr std::int64_t kPageCenterOffset = 22;

struct PageWindow {
    std::int64_t page = 0;
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::int64_t center = 0;
};

std::int64_t page_count(std::int64_t frame_count);
/// Frames [45p, 45p+44] clipped; a full page is centred at local index 22,
/// a clipped one at its floor midpoint. nullopt when p is out of range.
std::optional<PageWindow> page_window(std::int64_t frame_count, std::int64_t page);
/// Virtual page of +-22 frames around `frame`, clipped to the video.
PageWindow recentred_window(std::int64_t frame_count, std::int64_t page, std::int64_t frame);

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

/// One posted transition as kept in the per-annotator records file.
struct StoredRecord {
    std::int64_t id = 0;
    std::string annotator;
    std::string label;  // "gradual" or "cut"
    std::int64_t begin = 0;
    std::int64_t end = 0;
    bool too_hard = false;
    std::int64_t center = 0;
    std::int64_t page = 0;
};

nlohmann::json to_json(const StoredRecord& r);

/// File-backed annotation store. Each annotator owns two files per video
/// under store_dir/<video>/: <annotator>.records.json (posted records) and
/// <annotator>.json (the derived VideoAnnotation). Writes are serialised per
/// video; readers work on immutable snapshots.
class AnnotationStore {
public:
    AnnotationStore(const std::vector<ManifestEntry>& corpus, std::filesystem::path store_dir);

    nlohmann::json list_videos() const;
    ServiceResponse page(const std::string& video, std::int64_t page) const;
    ServiceResponse make_center(const std::string& video, std::int64_t page, const nlohmann::json& body) const;
    ServiceResponse post_annotation(const std::string& video, const nlohmann::json& body);
    std::optional<std::filesystem::path> frame_path(const std::string& video, std::int64_t index) const;
    std::optional<VideoAnnotation> annotation_of(const std::string& video, const std::string& annotator) const;

private:
    using Snapshot = std::map<std::string, std::vector<StoredRecord>>;  // by annotator
    struct Video {
        ManifestEntry entry;
        std::int64_t frame_count = 0;
        std::string extension;
        mutable std::mutex write_mutex;
        mutable std::mutex snapshot_mutex;  // guards the pointer swap only
        mutable std::shared_ptr<const Snapshot> snapshot;
    };

    const Video* find(const std::string& video) const;
    std::shared_ptr<const Snapshot> snapshot_of(const Video& v) const;
    ServiceResponse page_payload(const Video& v, const PageWindow& w) const;
    std::filesystem::path video_dir(const Video& v) const;

    std::filesystem::path store_dir_;
    std::map<std::string, std::unique_ptr<Video>> videos_;
};

/// HTTP front end over an AnnotationStore.
class AnnotationServer {
public:
    explicit AnnotationServer(AnnotationStore& store);
    ~AnnotationServer();
    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    /// Port 0 picks a free port; returns the bound port or -1.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    bool listen_after_bind();
    void stop();

private:
    AnnotationStore& store_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace sbd

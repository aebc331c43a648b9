// SPDX-License-Identifier: Apache-2.0
#include "sbd/annotation_service.hpp"

#include "sbd/error.hpp"
#include "sbd/frame_io.hpp"

#include "httplib.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <regex>

namespace sbd {

namespace fs = std::filesystem;
using nlohmann::json;

std::int64_t page_count(std::int64_t frame_count) {
    return frame_count <= 0 ? 0 : (frame_count + kPageFrames - 1) / kPageFrames;
}

std::optional<PageWindow> page_window(std::int64_t frame_count, std::int64_t page) {
    if (page < 0 || page >= page_count(frame_count)) return std::nullopt;
    PageWindow w;
    w.page = page;
    w.begin = page * kPageFrames;
    w.end = std::min(w.begin + kPageFrames - 1, frame_count - 1);
    w.center = w.end - w.begin + 1 == kPageFrames ? w.begin + kPageCenterOffset : w.begin + (w.end - w.begin) / 2;
    return w;
}

PageWindow recentred_window(std::int64_t frame_count, std::int64_t page, std::int64_t frame) {
    return {page, std::max<std::int64_t>(0, frame - kPageCenterOffset),
            std::min(frame_count - 1, frame + kPageCenterOffset), frame};
}

json to_json(const StoredRecord& r) {
    return json{{"id", r.id},         {"annotator", r.annotator}, {"label", r.label}, {"begin", r.begin},
                {"end", r.end},       {"too_hard", r.too_hard},   {"center", r.center}, {"page", r.page}};
}

namespace {

StoredRecord record_from_json(const json& j) {
    StoredRecord r;
    r.id = j.at("id").get<std::int64_t>();
    r.annotator = j.at("annotator").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.begin = j.at("begin").get<std::int64_t>();
    r.end = j.at("end").get<std::int64_t>();
    r.too_hard = j.at("too_hard").get<bool>();
    r.center = j.at("center").get<std::int64_t>();
    r.page = j.at("page").get<std::int64_t>();
    return r;
}

bool safe_name(const std::string& s) {
    static const std::regex pattern("[A-Za-z0-9_][A-Za-z0-9_.-]{0,127}");
    return std::regex_match(s, pattern);
}

ServiceResponse error(int status, const std::string& message) {
    return {status, json{{"error", message}}};
}

VideoAnnotation derive_annotation(const std::string& video, std::int64_t frame_count, const std::string& annotator,
                                  const std::vector<StoredRecord>& records) {
    VideoAnnotation a;
    a.video = video;
    a.frame_count = frame_count;
    a.annotator = annotator;
    for (const auto& r : records) {
        const FrameInterval iv{r.begin, r.end};
        if (r.too_hard) {
            a.too_hard.push_back(iv);
        } else if (r.label == "cut") {
            a.cuts.push_back(iv);
        } else {
            a.graduals.push_back(iv);
        }
    }
    a.normalize();
    return a;
}

void write_atomically(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out.flush()) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string frame_extension(const fs::path& dir) {
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        if (fs::exists(dir / frame_file_name(0, ext))) return ext;
    }
    return ".png";
}

}  // namespace

AnnotationStore::AnnotationStore(const std::vector<ManifestEntry>& corpus, fs::path store_dir)
    : store_dir_(std::move(store_dir)) {
    fs::create_directories(store_dir_);
    for (const auto& e : corpus) {
        if (!safe_name(e.video)) throw DataError("video id '" + e.video + "' is not usable as a directory name");
        if (videos_.count(e.video)) throw DataError("duplicate video id '" + e.video + "' in corpus");
        auto v = std::make_unique<Video>();
        v->entry = e;
        v->frame_count = static_cast<std::int64_t>(count_frames(e.frames_dir));
        v->extension = frame_extension(e.frames_dir);

        auto snap = std::make_shared<Snapshot>();
        const fs::path dir = store_dir_ / e.video;
        if (fs::is_directory(dir)) {
            for (const auto& f : fs::directory_iterator(dir)) {
                const std::string name = f.path().filename().string();
                const std::string suffix = ".records.json";
                if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
                    continue;
                }
                std::ifstream in(f.path());
                try {
                    const json j = json::parse(in);
                    std::vector<StoredRecord> records;
                    for (const auto& r : j) records.push_back(record_from_json(r));
                    (*snap)[name.substr(0, name.size() - suffix.size())] = std::move(records);
                } catch (const json::exception& err) {
                    throw DataError("corrupt annotation records " + f.path().string() + ": " + err.what());
                }
            }
        }
        v->snapshot = std::move(snap);
        videos_.emplace(e.video, std::move(v));
    }
}

const AnnotationStore::Video* AnnotationStore::find(const std::string& video) const {
    const auto it = videos_.find(video);
    return it == videos_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const AnnotationStore::Snapshot> AnnotationStore::snapshot_of(const Video& v) const {
    std::lock_guard lock(v.snapshot_mutex);
    return v.snapshot;
}

fs::path AnnotationStore::video_dir(const Video& v) const { return store_dir_ / v.entry.video; }

json AnnotationStore::list_videos() const {
    json out = json::array();
    for (const auto& [id, v] : videos_) {
        out.push_back({{"video", id}, {"frame_count", v->frame_count}, {"pages", page_count(v->frame_count)}});
    }
    return out;
}

ServiceResponse AnnotationStore::page_payload(const Video& v, const PageWindow& w) const {
    json frames = json::array();
    for (std::int64_t i = w.begin; i <= w.end; ++i) {
        frames.push_back({{"index", i}, {"url", "/videos/" + v.entry.video + "/frames/" + std::to_string(i)}});
    }
    json annotations = json::array();
    const auto snap = snapshot_of(v);
    for (const auto& [annotator, records] : *snap) {
        for (const auto& r : records) {
            if (r.end >= w.begin && r.begin <= w.end) annotations.push_back(to_json(r));
        }
    }
    return {200, json{{"video", v.entry.video},
                      {"page", w.page},
                      {"pages", page_count(v.frame_count)},
                      {"begin", w.begin},
                      {"end", w.end},
                      {"center", w.center},
                      {"frames", frames},
                      {"annotations", annotations}}};
}

ServiceResponse AnnotationStore::page(const std::string& video, std::int64_t p) const {
    const Video* v = find(video);
    if (!v) return error(404, "unknown video '" + video + "'");
    const auto w = page_window(v->frame_count, p);
    if (!w) return error(404, "page " + std::to_string(p) + " out of range");
    return page_payload(*v, *w);
}

ServiceResponse AnnotationStore::make_center(const std::string& video, std::int64_t p, const json& body) const {
    const Video* v = find(video);
    if (!v) return error(404, "unknown video '" + video + "'");
    const auto w = page_window(v->frame_count, p);
    if (!w) return error(404, "page " + std::to_string(p) + " out of range");
    if (!body.is_object() || !body.contains("frame") || !body["frame"].is_number_integer()) {
        return error(422, "body must carry an integer 'frame'");
    }
    const auto frame = body["frame"].get<std::int64_t>();
    if (frame < w->begin || frame > w->end) {
        return error(422, "frame " + std::to_string(frame) + " is outside page " + std::to_string(p) + " [" +
                              std::to_string(w->begin) + ", " + std::to_string(w->end) + "]");
    }
    return page_payload(*v, recentred_window(v->frame_count, p, frame));
}

ServiceResponse AnnotationStore::post_annotation(const std::string& video, const json& body) {
    const Video* v = find(video);
    if (!v) return error(404, "unknown video '" + video + "'");
    StoredRecord r;
    try {
        r.annotator = body.at("annotator").get<std::string>();
        r.label = body.at("label").get<std::string>();
        r.begin = body.at("begin").get<std::int64_t>();
        r.end = body.at("end").get<std::int64_t>();
        r.center = body.at("center").get<std::int64_t>();
        r.too_hard = body.value("too_hard", false);
    } catch (const json::exception& e) {
        return error(422, std::string("malformed annotation: ") + e.what());
    }
    if (!safe_name(r.annotator)) return error(422, "annotator must match [A-Za-z0-9_][A-Za-z0-9_.-]*");
    if (r.label != "gradual" && r.label != "cut") return error(422, "label must be 'gradual' or 'cut'");
    if (r.center < 0 || r.center >= v->frame_count) return error(422, "center outside the video");
    if (r.begin > r.center || r.end < r.center) return error(422, "begin and end must cross center");
    if (r.begin < 0 || r.end >= v->frame_count) return error(422, "annotation exceeds the video");
    if (r.label == "cut" && r.end != r.begin + 1) return error(422, "cut must span exactly 2 frames");
    r.page = r.center / kPageFrames;

    std::lock_guard lock(v->write_mutex);
    const auto snap = snapshot_of(*v);
    auto next = std::make_shared<Snapshot>(*snap);
    auto& mine = (*next)[r.annotator];
    for (const auto& old : mine) {
        if (old.page == r.page && old.center == r.center) {
            return error(422, "annotator already stored a transition for page " + std::to_string(r.page) +
                                  " with center " + std::to_string(r.center));
        }
    }
    r.id = mine.empty() ? 1 : mine.back().id + 1;
    mine.push_back(r);

    const VideoAnnotation ann = derive_annotation(video, v->frame_count, r.annotator, mine);
    try {
        ann.validate(video + "/" + r.annotator);
    } catch (const DataError& e) {
        return error(422, e.what());
    }

    json records = json::array();
    for (const auto& x : mine) records.push_back(to_json(x));
    const fs::path dir = video_dir(*v);
    fs::create_directories(dir);
    write_atomically(dir / (r.annotator + ".records.json"), records.dump(2) + "\n");
    write_atomically(dir / (r.annotator + ".json"), to_json(ann).dump(2) + "\n");
    {
        std::lock_guard swap(v->snapshot_mutex);
        v->snapshot = std::move(next);
    }
    return {201, to_json(r)};
}

std::optional<fs::path> AnnotationStore::frame_path(const std::string& video, std::int64_t index) const {
    const Video* v = find(video);
    if (!v || index < 0 || index >= v->frame_count) return std::nullopt;
    return v->entry.frames_dir / frame_file_name(index, v->extension);
}

std::optional<VideoAnnotation> AnnotationStore::annotation_of(const std::string& video,
                                                              const std::string& annotator) const {
    const Video* v = find(video);
    if (!v) return std::nullopt;
    const auto snap = snapshot_of(*v);
    const auto it = snap->find(annotator);
    if (it == snap->end()) return std::nullopt;
    return derive_annotation(video, v->frame_count, annotator, it->second);
}

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json; charset=utf-8");
}

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        reply(res, error(400, std::string("malformed JSON body: ") + e.what()));
        return std::nullopt;
    }
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store)
    : store_(store), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    s.Get("/videos", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, {200, store_.list_videos()});
    });
    s.Get(R"(/videos/([^/]+)/pages/(\d{1,12}))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, store_.page(req.matches[1], std::stoll(req.matches[2])));
    });
    s.Post(R"(/videos/([^/]+)/pages/(\d{1,12})/make_center)",
           [this](const httplib::Request& req, httplib::Response& res) {
               if (auto body = parse_body(req, res)) reply(res, store_.make_center(req.matches[1], std::stoll(req.matches[2]), *body));
           });
    s.Post(R"(/videos/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
        if (auto body = parse_body(req, res)) reply(res, store_.post_annotation(req.matches[1], *body));
    });
    s.Get(R"(/videos/([^/]+)/frames/(\d{1,12}))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto path = store_.frame_path(req.matches[1], std::stoll(req.matches[2]));
        std::ifstream in(path ? *path : fs::path(), std::ios::binary);
        if (!path || !in) {
            reply(res, error(404, "no such frame"));
            return;
        }
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        res.set_content(std::move(bytes), path->extension() == ".png" ? "image/png" : "image/jpeg");
    });
    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            reply(res, error(500, e.what()));
        } catch (...) {
            reply(res, error(500, "internal error"));
        }
    });
}

AnnotationServer::~AnnotationServer() = default;

int AnnotationServer::bind(const std::string& host, int port) {
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

bool AnnotationServer::listen_after_bind() { return server_->listen_after_bind(); }

void AnnotationServer::stop() { server_->stop(); }

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/dataset.hpp"

#include "sbd/error.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <tuple>

namespace sbd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void sort_intervals(std::vector<FrameInterval>& v) { std::sort(v.begin(), v.end()); }

json intervals_to_json(const std::vector<FrameInterval>& v) {
    json arr = json::array();
    for (const auto& iv : v) arr.push_back({iv.begin, iv.end});
    return arr;
}

std::vector<FrameInterval> intervals_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw DataError(field + ": expected an array of [begin, end] pairs");
    std::vector<FrameInterval> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        const std::string where = field + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
            throw DataError(where + ": expected [begin, end] integers");
        }
        const auto b = p[0].get<std::int64_t>();
        const auto e = p[1].get<std::int64_t>();
        if (b < 0 || e < b) throw DataError(where + ": invalid interval [" + std::to_string(b) + ", " + std::to_string(e) + "]");
        out.push_back({b, e});
    }
    return out;
}

std::string interval_text(const FrameInterval& iv) {
    return "[" + std::to_string(iv.begin) + ", " + std::to_string(iv.end) + "]";
}

}  // namespace

void VideoAnnotation::validate(const std::string& context) const {
    if (video.empty()) throw DataError(context + ".video: must not be empty");
    if (frame_count < 1) throw DataError(context + ".frame_count: must be >= 1");
    auto check_bounds = [&](const std::vector<FrameInterval>& list, const char* field) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& iv = list[i];
            const std::string where = context + "." + field + "[" + std::to_string(i) + "]";
            if (iv.begin < 0 || iv.end < iv.begin) throw DataError(where + ": invalid interval " + interval_text(iv));
            if (iv.end >= frame_count) {
                throw DataError(where + ": " + interval_text(iv) + " exceeds frame_count " + std::to_string(frame_count));
            }
        }
    };
    check_bounds(cuts, "cuts");
    check_bounds(graduals, "graduals");
    check_bounds(too_hard, "too_hard");
    for (std::size_t i = 0; i < cuts.size(); ++i) {
        if (cuts[i].length() != 2) {
            throw DataError(context + ".cuts[" + std::to_string(i) + "]: cut " + interval_text(cuts[i]) +
                            " must span exactly 2 frames");
        }
    }
    std::vector<FrameInterval> g = graduals;
    sort_intervals(g);
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (overlap_frames(g[i - 1], g[i]) > 0) {
            throw DataError(context + ".graduals: " + interval_text(g[i - 1]) + " overlaps " + interval_text(g[i]));
        }
    }
}

void VideoAnnotation::normalize() {
    sort_intervals(cuts);
    sort_intervals(graduals);
    sort_intervals(too_hard);
}

json to_json(const VideoAnnotation& a) {
    return json{{"video", a.video},
                {"frame_count", a.frame_count},
                {"annotator", a.annotator},
                {"cuts", intervals_to_json(a.cuts)},
                {"graduals", intervals_to_json(a.graduals)},
                {"too_hard", intervals_to_json(a.too_hard)}};
}

VideoAnnotation annotation_from_json(const json& j, const std::string& context) {
    if (!j.is_object()) throw DataError(context + ": expected an object");
    VideoAnnotation a;
    if (!j.contains("video") || !j["video"].is_string()) throw DataError(context + ".video: missing or not a string");
    if (!j.contains("frame_count") || !j["frame_count"].is_number_integer()) {
        throw DataError(context + ".frame_count: missing or not an integer");
    }
    a.video = j["video"].get<std::string>();
    a.frame_count = j["frame_count"].get<std::int64_t>();
    if (j.contains("annotator")) {
        if (!j["annotator"].is_string()) throw DataError(context + ".annotator: not a string");
        a.annotator = j["annotator"].get<std::string>();
    }
    for (const char* field : {"cuts", "graduals", "too_hard"}) {
        std::vector<FrameInterval> list;
        if (j.contains(field)) list = intervals_from_json(j[field], context + "." + field);
        if (std::string(field) == "cuts") a.cuts = std::move(list);
        else if (std::string(field) == "graduals") a.graduals = std::move(list);
        else a.too_hard = std::move(list);
    }
    a.validate(context);
    return a;
}

std::vector<VideoAnnotation> parse_annotations_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed annotation JSON: ") + e.what());
    }
    std::vector<VideoAnnotation> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(annotation_from_json(j[i], "annotation[" + std::to_string(i) + "]"));
        }
    } else {
        out.push_back(annotation_from_json(j));
    }
    return out;
}

std::vector<VideoAnnotation> parse_annotations(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open annotation file " + path.string());
    try {
        return parse_annotations_text(std::string(std::istreambuf_iterator<char>(in), {}));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_annotations(const std::vector<VideoAnnotation>& records, const fs::path& path) {
    json j;
    if (records.size() == 1) {
        records.front().validate();
        j = to_json(records.front());
    } else {
        j = json::array();
        for (const auto& r : records) {
            r.validate();
            j.push_back(to_json(r));
        }
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write annotation file " + path.string());
    out << j.dump(2) << '\n';
}

namespace {

struct Pairing {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<bool> a_used;
    std::vector<bool> b_used;
};

// Greedy one-to-one pairing by overlap. The tie-break key is symmetric in the
// two annotators so merge(a, b) and merge(b, a) pair the same entries.
Pairing pair_by_overlap(const std::vector<FrameInterval>& a, const std::vector<FrameInterval>& b) {
    struct Cand {
        std::int64_t overlap;
        FrameInterval lo, hi;  // the two intervals ordered
        std::size_t i, j;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            const std::int64_t ov = overlap_frames(a[i], b[j]);
            if (ov > 0) cands.push_back({ov, std::min(a[i], b[j]), std::max(a[i], b[j]), i, j});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
        if (x.overlap != y.overlap) return x.overlap > y.overlap;
        return std::tie(x.lo, x.hi) < std::tie(y.lo, y.hi);
    });
    Pairing p{{}, std::vector<bool>(a.size(), false), std::vector<bool>(b.size(), false)};
    for (const auto& c : cands) {
        if (p.a_used[c.i] || p.b_used[c.j]) continue;
        p.a_used[c.i] = p.b_used[c.j] = true;
        p.pairs.emplace_back(c.i, c.j);
    }
    return p;
}

bool touches_any(const FrameInterval& iv, const std::vector<FrameInterval>& regions) {
    return std::any_of(regions.begin(), regions.end(), [&](const auto& r) { return overlap_frames(iv, r) > 0; });
}

std::vector<FrameInterval> coalesce(std::vector<FrameInterval> v) {
    sort_intervals(v);
    std::vector<FrameInterval> out;
    for (const auto& iv : v) {
        if (!out.empty() && overlap_frames(out.back(), iv) > 0) {
            out.back().end = std::max(out.back().end, iv.end);
        } else {
            out.push_back(iv);
        }
    }
    return out;
}

}  // namespace

MergeResult merge_double_annotations(const VideoAnnotation& a, const VideoAnnotation& b) {
    if (a.video != b.video) throw DataError("cannot merge annotations of different videos: " + a.video + " vs " + b.video);
    if (a.frame_count != b.frame_count) {
        throw DataError("frame_count mismatch for " + a.video + ": " + std::to_string(a.frame_count) + " vs " +
                        std::to_string(b.frame_count));
    }
    MergeResult r;
    r.merged.video = a.video;
    r.merged.frame_count = a.frame_count;
    r.merged.annotator = a.annotator == b.annotator ? a.annotator
                                                     : std::min(a.annotator, b.annotator) + "+" + std::max(a.annotator, b.annotator);

    std::vector<FrameInterval> hard = a.too_hard;
    hard.insert(hard.end(), b.too_hard.begin(), b.too_hard.end());
    sort_intervals(hard);
    hard.erase(std::unique(hard.begin(), hard.end()), hard.end());
    r.merged.too_hard = hard;
    for (const auto* src : {&a, &b}) {
        for (const auto& iv : src->too_hard) r.disagreements.push_back({"too_hard", src->annotator, iv, "marked too hard"});
    }

    auto report_unpaired = [&](const char* kind, const VideoAnnotation& src, const std::vector<FrameInterval>& list,
                               const std::vector<bool>& used) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (!used[i]) r.disagreements.push_back({kind, src.annotator, list[i], "only annotated by " + src.annotator});
        }
    };

    const Pairing cuts = pair_by_overlap(a.cuts, b.cuts);
    for (auto [i, j] : cuts.pairs) {
        if (a.cuts[i] == b.cuts[j]) {
            if (touches_any(a.cuts[i], hard)) continue;
            r.merged.cuts.push_back(a.cuts[i]);
        } else {
            r.disagreements.push_back({"cut", a.annotator, a.cuts[i], "cut position differs"});
            r.disagreements.push_back({"cut", b.annotator, b.cuts[j], "cut position differs"});
        }
    }
    report_unpaired("cut", a, a.cuts, cuts.a_used);
    report_unpaired("cut", b, b.cuts, cuts.b_used);

    const Pairing grads = pair_by_overlap(a.graduals, b.graduals);
    std::vector<FrameInterval> merged_grads;
    for (auto [i, j] : grads.pairs) {
        const FrameInterval hull{std::min(a.graduals[i].begin, b.graduals[j].begin),
                                 std::max(a.graduals[i].end, b.graduals[j].end)};
        if (touches_any(hull, hard)) continue;
        merged_grads.push_back(hull);
    }
    report_unpaired("gradual", a, a.graduals, grads.a_used);
    report_unpaired("gradual", b, b.graduals, grads.b_used);

    r.merged.graduals = coalesce(std::move(merged_grads));
    r.merged.normalize();
    r.merged.validate("merged");
    return r;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw DataError("manifest must be a JSON array");
    const fs::path base = path.parent_path();
    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const std::string where = "manifest[" + std::to_string(i) + "]";
        for (const char* key : {"video", "frames_dir", "annotation_path"}) {
            if (!e.is_object() || !e.contains(key) || !e[key].is_string()) {
                throw DataError(where + "." + key + ": missing or not a string");
            }
        }
        ManifestEntry m{e["video"].get<std::string>(), e["frames_dir"].get<std::string>(),
                        e["annotation_path"].get<std::string>()};
        if (m.frames_dir.is_relative()) m.frames_dir = base / m.frames_dir;
        if (m.annotation_path.is_relative()) m.annotation_path = base / m.annotation_path;
        out.push_back(std::move(m));
    }
    return out;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path) {
    // Paths are stored relative to the manifest so a corpus directory can move.
    const fs::path base = fs::absolute(path).parent_path().lexically_normal();
    auto rel = [&base](const fs::path& p) {
        const fs::path r = fs::absolute(p).lexically_normal().lexically_relative(base);
        return (r.empty() ? fs::absolute(p) : r).generic_string();
    };
    json j = json::array();
    for (const auto& e : entries) {
        j.push_back({{"video", e.video}, {"frames_dir", rel(e.frames_dir)}, {"annotation_path", rel(e.annotation_path)}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/pipeline.hpp"

#include "sbd/error.hpp"
#include "sbd/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace sbd {

using nlohmann::json;

void PipelineConfig::validate() const {
    filter.validate();
    if (cut.k < 1) throw DataError("cut_k must be >= 1");
    if (!(cut.threshold >= 0.0)) throw DataError("cut_threshold must be >= 0");
    if (!(cut.kappa > 0.0)) throw DataError("cut_kappa must be > 0");
    if (!(cut.epsilon > 0.0)) throw DataError("cut_epsilon must be > 0");
    if (expansion < 1) throw DataError("expansion must be >= 1");
    if (t_seg < 2 || t_seg % 2 != 0) throw DataError("t_seg must be even and >= 2");
    if (!(gradual_threshold >= 0.0 && gradual_threshold <= 1.0)) throw DataError("gradual_threshold must lie in [0, 1]");
    if (histogram_bins < 2 || histogram_bins > 256) throw DataError("histogram_bins must lie in [2, 256]");
}

json to_json(const PipelineConfig& c) {
    return json{{"sigma", c.filter.sigma},
                {"t_static", c.filter.t_static},
                {"half_window", c.filter.half_window},
                {"scales", c.filter.scales},
                {"merge_distance", c.filter.merge_distance},
                {"cut_k", c.cut.k},
                {"cut_threshold", c.cut.threshold},
                {"cut_kappa", c.cut.kappa},
                {"cut_epsilon", c.cut.epsilon},
                {"cut_scores", c.cut_scores},
                {"expansion", c.expansion},
                {"t_seg", c.t_seg},
                {"gradual_threshold", c.gradual_threshold},
                {"toy_params", c.toy_params},
                {"histogram_bins", c.histogram_bins}};
}

PipelineConfig pipeline_config_from_json(const json& j, PipelineConfig c) {
    if (!j.is_object()) throw DataError("pipeline config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "sigma") c.filter.sigma = v.get<double>();
            else if (key == "t_static") c.filter.t_static = v.get<double>();
            else if (key == "half_window") c.filter.half_window = v.get<int>();
            else if (key == "scales") c.filter.scales = v.get<std::vector<int>>();
            else if (key == "merge_distance") c.filter.merge_distance = v.get<std::int64_t>();
            else if (key == "cut_k") c.cut.k = v.get<int>();
            else if (key == "cut_threshold") c.cut.threshold = v.get<double>();
            else if (key == "cut_kappa") c.cut.kappa = v.get<double>();
            else if (key == "cut_epsilon") c.cut.epsilon = v.get<double>();
            else if (key == "cut_scores") c.cut_scores = v.get<std::string>();
            else if (key == "expansion") c.expansion = v.get<std::int64_t>();
            else if (key == "t_seg") c.t_seg = v.get<int>();
            else if (key == "gradual_threshold") c.gradual_threshold = v.get<double>();
            else if (key == "toy_params") c.toy_params = v.get<std::string>();
            else if (key == "histogram_bins") c.histogram_bins = v.get<int>();
            else throw DataError("unknown pipeline config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bad pipeline config value: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineModels PipelineModels::load(const PipelineConfig& cfg) {
    PipelineModels m;
    if (!cfg.toy_params.empty()) {
        m.toy = load_toy_params(cfg.toy_params);
        if (m.toy->grid.window_length != cfg.t_seg) {
            throw DataError("toy scorer was trained for windows of " + std::to_string(m.toy->grid.window_length) +
                            " frames but t_seg is " + std::to_string(cfg.t_seg));
        }
    }
    if (!cfg.cut_scores.empty()) m.cut_scores = load_external_cut_scores(cfg.cut_scores);
    return m;
}

std::vector<FrameInterval> expand_candidates(const std::vector<TransitionCandidate>& survivors, std::int64_t x,
                                             std::int64_t video_length) {
    if (x < 1) throw std::invalid_argument("expansion must be >= 1");
    std::vector<FrameInterval> spans;
    for (const auto& c : survivors) {
        spans.push_back({std::max<std::int64_t>(0, c.center - x), std::min(video_length - 1, c.center + x)});
    }
    std::sort(spans.begin(), spans.end());
    std::vector<FrameInterval> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.begin <= merged.back().end) {
            merged.back().end = std::max(merged.back().end, s.end);
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

double TransitionReport::fps() const {
    const double ms = times.total_ms();
    return ms > 0.0 ? static_cast<double>(frame_count) / (ms / 1000.0) : 0.0;
}

json to_json(const TransitionReport& r, bool include_timing) {
    json cuts = json::array(), grads = json::array(), cands = json::array();
    for (const auto& c : r.cuts) cuts.push_back({{"begin", c.interval.begin}, {"end", c.interval.end}, {"score", c.score}});
    for (const auto& g : r.graduals) {
        grads.push_back({{"begin", g.interval.begin}, {"end", g.interval.end}, {"score", g.score}});
    }
    for (const auto& c : r.candidates) {
        cands.push_back({{"center", c.center}, {"scale", c.scale}, {"dissimilarity", c.dissimilarity}});
    }
    json stats = {{"frame_count", r.frame_count},
                  {"candidates",
                   {{"filtered", r.candidates.size()},
                    {"cut_confirmed", r.cut_confirmed},
                    {"gradual_windows", r.gradual_windows},
                    {"gradual_dropped_by_cut", r.dropped_by_cut}}},
                  {"frames_examined", {{"stage1", r.frames_stage1}, {"stage2_3", r.frames_later}}}};
    if (include_timing) {
        stats["fps"] = r.fps();
        stats["stage_times_ms"] = {{"extract", r.times.extract_ms},
                                   {"filter", r.times.filter_ms},
                                   {"cut", r.times.cut_ms},
                                   {"gradual", r.times.gradual_ms}};
    }
    return json{{"video", r.video}, {"cuts", cuts},   {"graduals", grads},
                {"candidates", cands}, {"stats", stats}, {"config", r.config}};
}

TypedTransitions report_transitions_from_json(const json& j) {
    TypedTransitions out;
    try {
        out.video = j.at("video").get<std::string>();
        auto read = [&](const char* key, std::vector<FrameInterval>& dst) {
            for (const auto& e : j.at(key)) {
                try {
                    dst.push_back(FrameInterval::make(e.at("begin").get<std::int64_t>(), e.at("end").get<std::int64_t>()));
                } catch (const std::invalid_argument& err) {
                    throw DataError(out.video + ": " + key + ": " + err.what());
                }
            }
        };
        read("cuts", out.cuts);
        read("graduals", out.graduals);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad report: ") + e.what());
    }
    return out;
}

TypedTransitions transitions_of(const TransitionReport& r) {
    TypedTransitions t{r.video, {}, {}};
    for (const auto& c : r.cuts) t.cuts.push_back(c.interval);
    for (const auto& g : r.graduals) t.graduals.push_back(g.interval);
    return t;
}

TypedTransitions transitions_of(const VideoAnnotation& a) { return {a.video, a.cuts, a.graduals}; }

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

struct Window {
    std::int64_t start;
    std::int64_t count;
};

std::vector<Window> windows_over(const std::vector<FrameInterval>& spans, int t_seg) {
    std::vector<Window> out;
    for (const auto& s : spans) {
        for (std::int64_t off : stitch_windows(s.length(), t_seg)) {
            out.push_back({s.begin + off, std::min<std::int64_t>(t_seg, s.length() - off)});
        }
    }
    return out;
}

}  // namespace

TransitionReport run_pipeline(const FeatureSequence& features, const PipelineConfig& cfg, const PipelineModels& models,
                              const std::string& video_id, int threads) {
    cfg.validate();
    const auto n = static_cast<std::int64_t>(features.size());
    if (n < 2) throw DataError(video_id + ": pipeline needs at least 2 frames");

    TransitionReport rep;
    rep.video = video_id;
    rep.frame_count = n;
    rep.frames_stage1 = n;
    rep.config = to_json(cfg);

    auto t0 = Clock::now();
    try {
        rep.candidates = run_initial_filter(features, cfg.filter, threads);
    } catch (const DataError& e) {
        throw DataError(std::string("initial filter: ") + e.what());
    }
    rep.times.filter_ms = elapsed_ms(t0);

    t0 = Clock::now();
    const CutScorer scorer =
        models.cut_scores ? make_external_scorer(*models.cut_scores) : make_baseline_scorer(features, cfg.cut);
    CutPartition part;
    try {
        part = classify_cuts(rep.candidates, scorer, cfg.cut.threshold, threads);
    } catch (const DataError& e) {
        throw DataError(std::string("cut detector: ") + e.what());
    }
    std::vector<bool> touched(static_cast<std::size_t>(n), false);
    for (const auto& c : rep.candidates) {
        if (models.cut_scores) {
            touched[static_cast<std::size_t>(c.center)] = touched[static_cast<std::size_t>(c.center + 1)] = true;
        } else {
            for (std::int64_t i : build_cut_window(c.center, n, cfg.cut.k).frame_indices) touched[static_cast<std::size_t>(i)] = true;
        }
    }
    for (const auto& d : part.cuts) rep.cuts.push_back({d.interval, d.score});
    std::sort(rep.cuts.begin(), rep.cuts.end(), [](const ScoredCut& a, const ScoredCut& b) { return a.interval < b.interval; });
    rep.cut_confirmed = rep.cuts.size();
    rep.times.cut_ms = elapsed_ms(t0);

    t0 = Clock::now();
    if (models.toy) {
        const SegmentGrid grid = generate_default_segments(models.toy->grid);
        const auto spans = expand_candidates(part.survivors, cfg.expansion, n);
        for (const auto& s : spans) {
            for (std::int64_t i = s.begin; i <= s.end; ++i) touched[static_cast<std::size_t>(i)] = true;
        }
        const auto windows = windows_over(spans, cfg.t_seg);
        std::vector<WindowPrediction> preds(windows.size());
        parallel_for(windows.size(), threads, [&](std::size_t i) {
            preds[i] = predict_window(*models.toy, grid, WindowFrames{&features, windows[i].start, windows[i].count});
        });
        rep.gradual_windows = windows.size();
        for (const auto& g : detect_gradual(preds, grid, cfg.gradual_threshold, n)) {
            const bool clash = std::any_of(rep.cuts.begin(), rep.cuts.end(), [&](const ScoredCut& c) {
                return overlap_frames(c.interval, g.interval) > 0;
            });
            if (clash) {
                ++rep.dropped_by_cut;
            } else {
                rep.graduals.push_back(g);
            }
        }
        std::sort(rep.graduals.begin(), rep.graduals.end(),
                  [](const GradualDetection& a, const GradualDetection& b) { return a.interval < b.interval; });
    }
    rep.times.gradual_ms = elapsed_ms(t0);
    rep.frames_later = std::count(touched.begin(), touched.end(), true);
    return rep;
}

std::vector<TrainingWindow> build_training_windows(const FeatureSequence& features, const VideoAnnotation& annotation,
                                                   const PipelineConfig& cfg, const SegmentGrid& grid) {
    const auto n = static_cast<std::int64_t>(features.size());
    if (n != annotation.frame_count) {
        throw DataError(annotation.video + ": annotation frame_count " + std::to_string(annotation.frame_count) +
                        " does not match " + std::to_string(n) + " feature frames");
    }
    const std::int64_t len = grid.config.window_length;
    std::set<std::int64_t> starts;
    std::vector<Window> windows;
    auto add = [&](std::int64_t start, std::int64_t count) {
        if (starts.insert(start * 1000003 + count).second) windows.push_back({start, count});
    };

    const auto candidates = run_initial_filter(features, cfg.filter);
    const auto part = classify_cuts(candidates, make_baseline_scorer(features, cfg.cut), cfg.cut.threshold);
    for (const auto& w : windows_over(expand_candidates(part.survivors, cfg.expansion, n), static_cast<int>(len))) {
        add(w.start, w.count);
    }
    for (const auto& g : annotation.graduals) {
        for (std::int64_t shift : {-len / 4, std::int64_t{0}, len / 4}) {
            const std::int64_t start =
                std::clamp(round_half_up(g.center()) - len / 2 + shift, std::int64_t{0}, std::max<std::int64_t>(0, n - len));
            add(start, std::min(len, n - start));
        }
    }

    std::vector<TrainingWindow> out;
    for (const auto& w : windows) {
        const FrameInterval span{w.start, w.start + w.count - 1};
        const bool hard = std::any_of(annotation.too_hard.begin(), annotation.too_hard.end(),
                                      [&](const FrameInterval& t) { return overlap_frames(t, span) > 0; });
        if (hard) continue;
        TrainingWindow tw;
        tw.summaries = AnchorSummarizer::summarize(WindowFrames{&features, w.start, w.count}, grid);
        for (const auto& g : annotation.graduals) {
            const std::int64_t b = std::max(g.begin, span.begin), e = std::min(g.end, span.end);
            if (e < b || 2 * (e - b + 1) < g.length()) continue;
            tw.gts.push_back({0.5 * static_cast<double>(b + e) - static_cast<double>(w.start), static_cast<double>(e - b + 1)});
        }
        out.push_back(std::move(tw));
    }
    return out;
}

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/synth.hpp"

#include "sbd/error.hpp"
#include "sbd/frame_io.hpp"
#include "sbd/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace sbd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(GradualKind kind) {
    switch (kind) {
        case GradualKind::Dissolve: return "dissolve";
        case GradualKind::Fade: return "fade";
        case GradualKind::Slide: return "slide";
    }
    return "dissolve";
}

GradualKind gradual_kind_from_string(const std::string& s) {
    if (s == "dissolve") return GradualKind::Dissolve;
    if (s == "fade") return GradualKind::Fade;
    if (s == "slide") return GradualKind::Slide;
    throw DataError("unknown gradual kind '" + s + "' (expected dissolve, fade or slide)");
}

namespace {

struct Span {
    std::int64_t begin, end;
    bool gradual;
};

std::vector<Span> transition_spans(const SynthSpec& spec) {
    std::vector<Span> spans;
    for (auto c : spec.cuts) spans.push_back({c, c + 1, false});
    for (const auto& g : spec.graduals) spans.push_back({g.begin, g.end, true});
    std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
    return spans;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

using Rgb = std::array<double, 3>;

// Float canvas, interleaved RGB.
struct Canvas {
    int h = 0, w = 0;
    std::vector<float> px;
    Canvas(int height, int width) : h(height), w(width), px(static_cast<std::size_t>(height) * width * 3, 0.0f) {}
    float* at(int y, int x) { return &px[(static_cast<std::size_t>(y) * w + x) * 3]; }
    const float* at(int y, int x) const { return &px[(static_cast<std::size_t>(y) * w + x) * 3]; }
};

// Channel means of consecutive shots differ by >= 60 in at least two channels,
// which keeps their colour histograms largely disjoint.
Rgb pick_anchor(Rng& rng, const Rgb* previous) {
    for (;;) {
        Rgb mu{rng.uniform(30, 225), rng.uniform(30, 225), rng.uniform(30, 225)};
        if (!previous) return mu;
        int far = 0;
        for (int c = 0; c < 3; ++c) far += std::abs(mu[c] - (*previous)[c]) >= 60.0 ? 1 : 0;
        if (far >= 2) return mu;
    }
}

Canvas make_base_image(const Rgb& mu, std::uint64_t seed, int h, int w) {
    Rng rng(seed);
    constexpr int kRegions = 5;
    struct Region {
        double x, y;
        Rgb color;
        double gx, gy;  // per-region shading ramp
    };
    std::array<Region, kRegions> regions;
    for (auto& r : regions) {
        r.x = rng.uniform(0, w);
        r.y = rng.uniform(0, h);
        for (int c = 0; c < 3; ++c) r.color[c] = mu[c] + rng.uniform(-25, 25);
        r.gx = rng.uniform(-20, 20);
        r.gy = rng.uniform(-20, 20);
    }
    Canvas img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Region* best = &regions[0];
            double best_d = 1e300;
            for (const auto& r : regions) {
                const double dx = x - r.x, dy = y - r.y;
                const double d = dx * dx + dy * dy;
                if (d < best_d) best_d = d, best = &r;
            }
            const double shade = best->gx * (x / static_cast<double>(w) - 0.5) + best->gy * (y / static_cast<double>(h) - 0.5);
            float* p = img.at(y, x);
            for (int c = 0; c < 3; ++c) {
                p[c] = static_cast<float>(std::clamp(best->color[c] + shade + rng.uniform(-8, 8), 0.0, 255.0));
            }
        }
    }
    return img;
}

struct FrameJitter {
    int dx = 0, dy = 0;
    double gain = 1.0;
};

// Shake is drawn per frame; flicker is a slow brightness oscillation whose
// period and phase come from the video seed.
FrameJitter frame_jitter(const SynthSpec& spec, std::int64_t t) {
    Rng rng(mix(spec.seed ^ 0xf1f1ULL, static_cast<std::uint64_t>(t)));
    FrameJitter j;
    const int s = spec.perturbation.shake;
    if (s > 0) {
        j.dx = static_cast<int>(rng.uniform_int(-s, s));
        j.dy = static_cast<int>(rng.uniform_int(-s, s));
    }
    if (spec.perturbation.flicker > 0.0) {
        Rng wave(mix(spec.seed, 0xf11cULL));
        const double period = wave.uniform(20.0, 60.0), phase = wave.uniform(0.0, 2.0 * std::numbers::pi);
        j.gain = 1.0 + spec.perturbation.flicker * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
    }
    return j;
}

// Shot content at frame t: cyclic shift plus brightness gain.
Canvas render_shot(const Canvas& base, const FrameJitter& j) {
    Canvas out(base.h, base.w);
    for (int y = 0; y < base.h; ++y) {
        const int sy = ((y + j.dy) % base.h + base.h) % base.h;
        for (int x = 0; x < base.w; ++x) {
            const int sx = ((x + j.dx) % base.w + base.w) % base.w;
            const float* s = base.at(sy, sx);
            float* d = out.at(y, x);
            for (int c = 0; c < 3; ++c) d[c] = static_cast<float>(s[c] * j.gain);
        }
    }
    return out;
}

}  // namespace

void SynthSpec::validate() const {
    if (length < 2) throw DataError(video + ": synthetic video needs at least 2 frames");
    if (width < 1 || height < 1) throw DataError(video + ": frame size must be positive");
    if (perturbation.shake < 0 || perturbation.flicker < 0.0 || perturbation.noise < 0.0) {
        throw DataError(video + ": perturbation amplitudes must be non-negative");
    }
    for (auto c : cuts) {
        if (c < 0 || c + 1 >= length) throw DataError(video + ": cut at " + std::to_string(c) + " outside the video");
    }
    for (const auto& g : graduals) {
        const std::int64_t len = g.end - g.begin + 1;
        if (g.begin < 0 || g.end >= length || len < 3 || len > 40) {
            throw DataError(video + ": gradual [" + std::to_string(g.begin) + ", " + std::to_string(g.end) +
                            "] must lie in the video and span 3..40 frames");
        }
    }
    const auto spans = transition_spans(*this);
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].begin - spans[i - 1].end < 5) {
            throw DataError(video + ": transitions at " + std::to_string(spans[i - 1].begin) + " and " +
                            std::to_string(spans[i].begin) + " overlap or are closer than 5 frames");
        }
    }
}

json to_json(const SynthSpec& spec) {
    json grads = json::array();
    for (const auto& g : spec.graduals) grads.push_back({{"begin", g.begin}, {"end", g.end}, {"kind", to_string(g.kind)}});
    return json{{"video", spec.video},
                {"length", spec.length},
                {"seed", spec.seed},
                {"width", spec.width},
                {"height", spec.height},
                {"cuts", spec.cuts},
                {"graduals", grads},
                {"perturbation",
                 {{"shake", spec.perturbation.shake},
                  {"flicker", spec.perturbation.flicker},
                  {"noise", spec.perturbation.noise}}}};
}

SynthSpec synth_spec_from_json(const json& j) {
    try {
        SynthSpec s;
        s.video = j.value("video", s.video);
        s.length = j.at("length").get<std::int64_t>();
        s.seed = j.value("seed", s.seed);
        s.width = j.value("width", s.width);
        s.height = j.value("height", s.height);
        s.cuts = j.value("cuts", std::vector<std::int64_t>{});
        for (const auto& g : j.value("graduals", json::array())) {
            s.graduals.push_back({g.at("begin").get<std::int64_t>(), g.at("end").get<std::int64_t>(),
                                  gradual_kind_from_string(g.value("kind", std::string("dissolve")))});
        }
        if (j.contains("perturbation")) {
            const auto& p = j["perturbation"];
            s.perturbation.shake = p.value("shake", 0);
            s.perturbation.flicker = p.value("flicker", 0.0);
            s.perturbation.noise = p.value("noise", 0.0);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw DataError(std::string("bad synth spec: ") + e.what());
    }
}

std::vector<SynthSpec> parse_synth_specs(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("malformed synth spec JSON: ") + e.what());
    }
    std::vector<SynthSpec> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(synth_spec_from_json(e));
    } else {
        out.push_back(synth_spec_from_json(j));
    }
    return out;
}

SynthVideo synthesize_video(const SynthSpec& spec) {
    spec.validate();
    const auto spans = transition_spans(spec);

    // Shot s covers the frames between transition s-1 and transition s.
    std::vector<Canvas> bases;
    Rng pool(mix(spec.seed, 0xb45eULL));
    Rgb previous{};
    for (std::size_t s = 0; s <= spans.size(); ++s) {
        const Rgb mu = pick_anchor(pool, s == 0 ? nullptr : &previous);
        bases.push_back(make_base_image(mu, mix(spec.seed, 1000 + s), spec.height, spec.width));
        previous = mu;
    }
    std::vector<GradualKind> kinds(spans.size(), GradualKind::Dissolve);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        for (const auto& g : spec.graduals) {
            if (g.begin == spans[i].begin && spans[i].gradual) kinds[i] = g.kind;
        }
    }

    SynthVideo out;
    out.frames.reserve(static_cast<std::size_t>(spec.length));
    std::size_t shot = 0;
    const double noise_scale = spec.perturbation.noise * std::sqrt(6.0);
    for (std::int64_t t = 0; t < spec.length; ++t) {
        while (shot < spans.size() && t > spans[shot].end) ++shot;
        const FrameJitter jit = frame_jitter(spec, t);
        Canvas frame(spec.height, spec.width);
        const bool in_gradual = shot < spans.size() && spans[shot].gradual && t >= spans[shot].begin;
        const bool after_cut = shot < spans.size() && !spans[shot].gradual && t == spans[shot].end;
        if (in_gradual) {
            const Canvas a = render_shot(bases[shot], jit);
            const Canvas b = render_shot(bases[shot + 1], jit);
            const double w = static_cast<double>(t - spans[shot].begin) /
                             static_cast<double>(spans[shot].end - spans[shot].begin);
            for (int y = 0; y < spec.height; ++y) {
                const int split = static_cast<int>(std::lround(spec.width * (1.0 - w)));
                for (int x = 0; x < spec.width; ++x) {
                    float* d = frame.at(y, x);
                    const float* pa = a.at(y, x);
                    for (int c = 0; c < 3; ++c) {
                        switch (kinds[shot]) {
                            case GradualKind::Dissolve:
                                d[c] = static_cast<float>((1.0 - w) * pa[c] + w * b.at(y, x)[c]);
                                break;
                            case GradualKind::Fade:
                                d[c] = static_cast<float>(w < 0.5 ? pa[c] * (1.0 - 2.0 * w) : b.at(y, x)[c] * (2.0 * w - 1.0));
                                break;
                            case GradualKind::Slide:
                                d[c] = x < split ? pa[c] : b.at(y, x - split)[c];
                                break;
                        }
                    }
                }
            }
        } else {
            frame = render_shot(bases[after_cut ? shot + 1 : shot], jit);
        }

        Image img(spec.height, spec.width);
        Rng noise(mix(spec.seed ^ 0x2a2aULL, static_cast<std::uint64_t>(t)));
        for (std::size_t i = 0; i < frame.px.size(); ++i) {
            double v = frame.px[i];
            if (noise_scale > 0.0) v += noise_scale * (noise.uniform() + noise.uniform() - 1.0);
            img.rgb[i] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
        }
        out.frames.push_back(std::move(img));
    }

    VideoAnnotation& ann = out.annotation;
    ann.video = spec.video;
    ann.frame_count = spec.length;
    ann.annotator = "synth";
    for (const auto& s : spans) (s.gradual ? ann.graduals : ann.cuts).push_back({s.begin, s.end});
    ann.validate(spec.video);
    return out;
}

ManifestEntry write_synth_video(const SynthVideo& video, const fs::path& out_dir) {
    const fs::path frames_dir = out_dir / "frames";
    fs::create_directories(frames_dir);
    for (std::size_t i = 0; i < video.frames.size(); ++i) {
        write_png(video.frames[i], frames_dir / frame_file_name(static_cast<std::int64_t>(i)));
    }
    const fs::path ann = out_dir / "annotation.json";
    write_annotations({video.annotation}, ann);
    return {video.annotation.video, frames_dir, ann};
}

std::vector<SynthSpec> plan_corpus(const std::string& prefix, int count, std::int64_t length, int total_cuts,
                                   int total_graduals, std::uint64_t seed, std::int64_t min_gap,
                                   Perturbation perturbation) {
    if (count < 1) throw DataError("corpus needs at least one video");
    if (min_gap < 5) throw DataError("min_gap must be >= 5");
    Rng rng(seed);
    std::vector<SynthSpec> specs;
    int kind_cursor = 0;
    for (int v = 0; v < count; ++v) {
        const int n_cuts = total_cuts / count + (v < total_cuts % count ? 1 : 0);
        const int n_grads = total_graduals / count + (v < total_graduals % count ? 1 : 0);

        struct Item {
            std::int64_t len;
            bool gradual;
            GradualKind kind;
        };
        std::vector<Item> items;
        for (int i = 0; i < n_cuts; ++i) items.push_back({2, false, GradualKind::Dissolve});
        for (int i = 0; i < n_grads; ++i) {
            items.push_back({rng.uniform_int(3, 40), true, static_cast<GradualKind>(kind_cursor++ % 3)});
        }
        rng.shuffle(items);

        std::int64_t occupied = 0;
        for (const auto& it : items) occupied += it.len;
        const auto gaps = static_cast<std::int64_t>(items.size() + 1);
        const std::int64_t video_len = std::max(length, occupied + gaps * min_gap);
        const std::int64_t slack = video_len - occupied - gaps * min_gap;

        std::vector<double> weights(static_cast<std::size_t>(gaps));
        double wsum = 0.0;
        for (double& w : weights) wsum += (w = rng.uniform(0.05, 1.0));
        std::vector<std::int64_t> extra(weights.size());
        std::int64_t used = 0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            extra[i] = static_cast<std::int64_t>(std::floor(slack * weights[i] / wsum));
            used += extra[i];
        }
        extra.back() += slack - used;

        SynthSpec s;
        char name[64];
        std::snprintf(name, sizeof(name), "%s%03d", prefix.c_str(), v);
        s.video = name;
        s.length = video_len;
        s.seed = rng.next();
        s.perturbation = perturbation;
        std::int64_t pos = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            pos += min_gap + extra[i];
            if (items[i].gradual) {
                s.graduals.push_back({pos, pos + items[i].len - 1, items[i].kind});
            } else {
                s.cuts.push_back(pos);
            }
            pos += items[i].len;
        }
        s.validate();
        specs.push_back(std::move(s));
    }
    return specs;
}

double annotation_consistency_margin(const FeatureSequence& features, const VideoAnnotation& annotation) {
    const auto n = static_cast<std::int64_t>(features.size());
    std::vector<bool> transitional(static_cast<std::size_t>(std::max<std::int64_t>(n - 1, 0)), false);
    for (const auto& c : annotation.cuts) transitional.at(static_cast<std::size_t>(c.begin)) = true;
    for (const auto& g : annotation.graduals) {
        for (std::int64_t i = g.begin; i < g.end; ++i) transitional.at(static_cast<std::size_t>(i)) = true;
    }
    double min_cut = 2.0, max_shot = 0.0;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
        const double d = cosine_dissimilarity(features.row(static_cast<std::size_t>(i)),
                                              features.row(static_cast<std::size_t>(i + 1)));
        if (!transitional[static_cast<std::size_t>(i)]) max_shot = std::max(max_shot, d);
    }
    for (const auto& c : annotation.cuts) {
        min_cut = std::min(min_cut, cosine_dissimilarity(features.row(static_cast<std::size_t>(c.begin)),
                                                         features.row(static_cast<std::size_t>(c.end))));
    }
    return min_cut - max_shot;
}

}  // namespace sbd

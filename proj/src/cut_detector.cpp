// SPDX-License-Identifier: Apache-2.0
#include "sbd/cut_detector.hpp"

#include "sbd/error.hpp"
#include "sbd/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace sbd {

CutWindow build_cut_window(std::int64_t center, std::int64_t video_length, int k) {
    if (k < 1) throw std::invalid_argument("cut window k must be >= 1");
    if (center < 0 || center >= video_length - 1) {
        throw std::invalid_argument("cut window center " + std::to_string(center) +
                                    " outside [0, " + std::to_string(video_length - 1) + ")");
    }
    CutWindow w;
    w.center = center;
    w.frame_indices.reserve(static_cast<std::size_t>(2 * k));
    for (std::int64_t i = center - k + 1; i <= center + k; ++i) {
        w.frame_indices.push_back(std::clamp<std::int64_t>(i, 0, video_length - 1));
    }
    return w;
}

namespace {

std::vector<double> mean_feature(const FeatureSequence& features, std::span<const std::int64_t> idx) {
    std::vector<double> m(features.dim(), 0.0);
    for (std::int64_t i : idx) {
        auto r = features.row(static_cast<std::size_t>(i));
        for (std::size_t d = 0; d < m.size(); ++d) m[d] += r[d];
    }
    for (double& v : m) v /= static_cast<double>(idx.size());
    return m;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("cut score: zero-norm feature mean");
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

}  // namespace

double baseline_cut_score(const CutWindow& window, const FeatureSequence& features, double kappa,
                          double epsilon) {
    const auto& idx = window.frame_indices;
    if (idx.empty() || idx.size() % 2 != 0) throw std::invalid_argument("malformed cut window");
    for (std::int64_t i : idx) {
        if (i < 0 || static_cast<std::size_t>(i) >= features.size()) {
            throw std::invalid_argument("cut window frame " + std::to_string(i) + " has no feature");
        }
    }
    const std::size_t k = idx.size() / 2;
    std::span<const std::int64_t> before(idx.data(), k);
    std::span<const std::int64_t> after(idx.data() + k, k);

    const double cross = 1.0 - cosine(mean_feature(features, before), mean_feature(features, after));
    double intra = 0.0;
    for (auto side : {before, after}) {
        for (std::size_t j = 0; j + 1 < side.size(); ++j) {
            intra = std::max(intra, cosine_dissimilarity(features.row(static_cast<std::size_t>(side[j])),
                                                         features.row(static_cast<std::size_t>(side[j + 1]))));
        }
    }
    return std::clamp(kappa * cross / (epsilon + intra), 0.0, 1.0);
}

CutScorer make_baseline_scorer(const FeatureSequence& features, const CutConfig& cfg) {
    const auto length = static_cast<std::int64_t>(features.size());
    return [&features, cfg, length](std::int64_t center) {
        return baseline_cut_score(build_cut_window(center, length, cfg.k), features, cfg.kappa, cfg.epsilon);
    };
}

ExternalCutScores parse_external_cut_scores(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed cut score JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("cut score file must be a JSON object of frame -> score");
    ExternalCutScores scores;
    for (const auto& [key, value] : j.items()) {
        std::int64_t frame = -1;
        auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), frame);
        if (ec != std::errc() || ptr != key.data() + key.size() || frame < 0) {
            throw DataError("cut score key '" + key + "' is not a frame index");
        }
        if (!value.is_number()) throw DataError("cut score for frame " + key + " is not a number");
        const double s = value.get<double>();
        if (!(s >= 0.0 && s <= 1.0)) {
            throw DataError("cut score for frame " + key + " out of range [0, 1]: " + std::to_string(s));
        }
        scores[frame] = s;
    }
    return scores;
}

ExternalCutScores load_external_cut_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cut score file " + path.string());
    return parse_external_cut_scores(std::string(std::istreambuf_iterator<char>(in), {}));
}

CutScorer make_external_scorer(ExternalCutScores scores) {
    return [scores = std::move(scores)](std::int64_t center) {
        auto it = scores.find(center);
        return it == scores.end() ? 0.0 : it->second;
    };
}

CutPartition classify_cuts(const std::vector<TransitionCandidate>& candidates, const CutScorer& scorer,
                           double threshold, int threads) {
    if (!(threshold >= 0.0)) throw DataError("cut threshold must be >= 0");
    std::vector<double> scores(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t i) { scores[i] = scorer(candidates[i].center); });

    CutPartition part;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        CutDecision d;
        d.center = candidates[i].center;
        d.score = scores[i];
        d.is_cut = scores[i] >= threshold;
        if (d.is_cut) {
            d.interval = FrameInterval{d.center, d.center + 1};
            part.cuts.push_back(d);
        } else {
            part.survivors.push_back(candidates[i]);
        }
        part.decisions.push_back(d);
    }
    return part;
}

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/toy_scorer.hpp"

#include "sbd/error.hpp"
#include "sbd/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sbd {

namespace {

constexpr char kParamsMagic[5] = {'S', 'B', 'D', 'T', '1'};
constexpr int kOutputs = 4;
constexpr double kProfileFloor = 0.2;

double dissimilarity(const WindowFrames& w, std::int64_t i, std::int64_t j) {
    if (i == j) return 0.0;
    return cosine_dissimilarity(w.row(i), w.row(j));
}

}  // namespace

std::vector<double> AnchorSummarizer::summarize(const WindowFrames& window, const SegmentGrid& grid) {
    constexpr int P = kProfilePoints;
    std::vector<double> out(grid.size() * kDim, 0.0);
    if (window.count < 1) return out;
    const std::int64_t last = window.count - 1;

    for (std::size_t s = 0; s < grid.size(); ++s) {
        const DefaultSegment& a = grid.segments[s];
        std::int64_t p[P];
        for (int j = 0; j < P; ++j) {
            const double pos = a.center - a.length + 2.0 * a.length * j / (P - 1);
            p[j] = std::clamp(round_half_up(pos), std::int64_t{0}, last);
        }
        double left[P - 1], right[P - 1];
        double left_max = 0.0, right_max = 0.0;
        for (int j = 1; j < P; ++j) {
            left[j - 1] = dissimilarity(window, p[0], p[j]);
            left_max = std::max(left_max, left[j - 1]);
        }
        for (int j = 0; j < P - 1; ++j) {
            right[j] = dissimilarity(window, p[j], p[P - 1]);
            right_max = std::max(right_max, right[j]);
        }

        double* f = out.data() + s * kDim;
        std::size_t k = 0;
        for (double v : left) f[k++] = v;
        for (double v : right) f[k++] = v;
        const double ln = std::max(left_max, kProfileFloor);
        const double rn = std::max(right_max, kProfileFloor);
        for (double v : left) f[k++] = v / ln;
        for (double v : right) f[k++] = v / rn;

        // Anchor body is roughly p[2] .. p[6].
        const RawSpan body = center_length_to_span(a.center, a.length);
        const std::int64_t b0 = std::clamp(body.begin, std::int64_t{0}, last);
        const std::int64_t b1 = std::clamp(body.end, std::int64_t{0}, last);
        double adj_sum = 0.0, adj_max = 0.0;
        for (std::int64_t i = b0; i < b1; ++i) {
            const double d = dissimilarity(window, i, i + 1);
            adj_sum += d;
            adj_max = std::max(adj_max, d);
        }
        f[k++] = b1 > b0 ? adj_sum / static_cast<double>(b1 - b0) : 0.0;
        f[k++] = adj_max;
        f[k++] = dissimilarity(window, b0, b1);
        f[k++] = dissimilarity(window, p[0], p[2]);
        f[k++] = dissimilarity(window, p[6], p[8]);
        f[k++] = dissimilarity(window, p[0], p[8]);
        f[k++] = 1.0;
    }
    return out;
}

ToyScorerParams ToyScorerParams::initial(const GridConfig& grid, std::uint64_t seed) {
    ToyScorerParams p;
    p.grid = grid;
    p.summary_dim = AnchorSummarizer::kDim;
    p.weights.resize(grid.lengths.size() * p.group_stride());
    Rng rng(seed);
    for (double& w : p.weights) w = 0.01 * rng.normal();
    return p;
}

void ToyScorerParams::fit_standardizer(const std::vector<std::vector<double>>& summaries) {
    const std::size_t d = summary_dim;
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    std::size_t n = 0;
    for (const auto& s : summaries) {
        if (s.size() % d != 0) throw std::invalid_argument("summary size is not a multiple of summary_dim");
        for (std::size_t off = 0; off < s.size(); off += d, ++n) {
            for (std::size_t k = 0; k < d; ++k) sum[k] += s[off + k], sq[k] += s[off + k] * s[off + k];
        }
    }
    feature_mean.assign(d, 0.0);
    feature_scale.assign(d, 1.0);
    if (n == 0) return;
    for (std::size_t k = 0; k < d; ++k) {
        const double mean = sum[k] / static_cast<double>(n);
        const double var = std::max(0.0, sq[k] / static_cast<double>(n) - mean * mean);
        if (var > 1e-12) {
            feature_mean[k] = mean;
            feature_scale[k] = std::sqrt(var);
        }
    }
}

void ToyScorerParams::standardize(std::span<const double> x, std::span<double> out) const {
    for (std::size_t k = 0; k < x.size(); ++k) {
        out[k] = feature_mean.empty() ? x[k] : (x[k] - feature_mean[k]) / feature_scale[k];
    }
}

std::vector<SegmentPrediction> score_summaries(const ToyScorerParams& params, const SegmentGrid& grid,
                                               std::span<const double> summaries) {
    const std::size_t d = params.summary_dim;
    if (summaries.size() != grid.size() * d) throw std::invalid_argument("summary size does not match the grid");
    if (params.weights.size() != grid.config.lengths.size() * params.group_stride()) {
        throw DataError("toy scorer weights do not match the grid");
    }
    if (!params.feature_mean.empty() && (params.feature_mean.size() != d || params.feature_scale.size() != d)) {
        throw DataError("toy scorer standardiser does not match summary_dim");
    }
    std::vector<SegmentPrediction> preds(grid.size());
    std::vector<double> xs(d);
    for (std::size_t s = 0; s < grid.size(); ++s) {
        params.standardize(summaries.subspan(s * d, d), xs);
        const double* x = xs.data();
        const double* w = params.weights.data() + static_cast<std::size_t>(grid.length_group[s]) * params.group_stride();
        double out[kOutputs] = {0, 0, 0, 0};
        for (int o = 0; o < kOutputs; ++o) {
            for (std::size_t k = 0; k < d; ++k) out[o] += w[o * d + k] * x[k];
        }
        preds[s] = {out[0], out[1], out[2], out[3]};
    }
    return preds;
}

WindowPrediction predict_window(const ToyScorerParams& params, const SegmentGrid& grid, const WindowFrames& window) {
    WindowPrediction wp;
    wp.start = window.start;
    wp.frame_count = window.count;
    const std::vector<double> summaries = AnchorSummarizer::summarize(window, grid);
    wp.predictions = score_summaries(params, grid, summaries);
    return wp;
}

namespace {

// Loss and (optionally) weight gradient of one window.
double window_step(const TrainingWindow& w, const SegmentGrid& grid, const ToyScorerParams& params,
                   const TrainConfig& cfg, std::vector<double>* grad) {
    const std::vector<SegmentPrediction> preds = score_summaries(params, grid, w.summaries);
    std::vector<MatchLabel> labels = match_ground_truth(grid, w.gts);
    labels = apply_mining(std::move(labels), hard_negative_mine(labels, preds, cfg.negative_ratio));
    const LossResult loss = ssbd_loss(preds, labels, cfg.lambda);
    if (grad) {
        const std::size_t d = params.summary_dim;
        std::vector<double> xs(d);
        for (std::size_t s = 0; s < grid.size(); ++s) {
            const SegmentPrediction& g = loss.grad[s];
            const double go[kOutputs] = {g.logit_bg, g.logit_fg, g.dc, g.dl};
            if (go[0] == 0.0 && go[1] == 0.0 && go[2] == 0.0 && go[3] == 0.0) continue;
            params.standardize(std::span<const double>(w.summaries).subspan(s * d, d), xs);
            const double* x = xs.data();
            double* gw = grad->data() + static_cast<std::size_t>(grid.length_group[s]) * params.group_stride();
            for (int o = 0; o < kOutputs; ++o) {
                for (std::size_t k = 0; k < d; ++k) gw[o * d + k] += go[o] * x[k];
            }
        }
    }
    return loss.loss;
}

}  // namespace

double corpus_loss(const std::vector<TrainingWindow>& corpus, const SegmentGrid& grid,
                   const ToyScorerParams& params, const TrainConfig& cfg) {
    if (corpus.empty()) throw DataError("empty training corpus");
    double total = 0.0;
    for (const auto& w : corpus) total += window_step(w, grid, params, cfg, nullptr);
    return total / static_cast<double>(corpus.size());
}

TrainResult train_toy_scorer(const std::vector<TrainingWindow>& corpus, const SegmentGrid& grid,
                             const TrainConfig& cfg, const ToyScorerParams* init) {
    if (corpus.empty()) throw DataError("empty training corpus");
    if (cfg.epochs < 0) throw DataError("epochs must be >= 0");
    TrainResult result;
    result.params = init ? *init : ToyScorerParams::initial(grid.config, cfg.seed);
    ToyScorerParams& p = result.params;
    if (!init) {
        std::vector<std::vector<double>> all;
        all.reserve(corpus.size());
        for (const auto& w : corpus) all.push_back(w.summaries);
        p.fit_standardizer(all);
    }

    std::vector<double> velocity(p.weights.size(), 0.0);
    std::vector<double> grad(p.weights.size(), 0.0);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.seed ^ 0x5bd1e995ULL);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            std::fill(grad.begin(), grad.end(), 0.0);
            epoch_loss += window_step(corpus[idx], grid, p, cfg, &grad);
            for (std::size_t k = 0; k < p.weights.size(); ++k) {
                velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
                p.weights[k] += velocity[k];
            }
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(corpus.size()));
    }
    return result;
}

void save_toy_params(const ToyScorerParams& params, const std::filesystem::path& path) {
    nlohmann::json header = {
        {"format", "sbd-toy-scorer"},
        {"version", 1},
        {"grid",
         {{"window_length", params.grid.window_length},
          {"lengths", params.grid.lengths},
          {"positive_iou", params.grid.positive_iou},
          {"negative_iou", params.grid.negative_iou}}},
        {"summary_dim", params.summary_dim},
        {"outputs", kOutputs},
        {"feature_mean", params.feature_mean},
        {"feature_scale", params.feature_scale},
    };
    const std::string text = header.dump();
    std::string out(kParamsMagic, 5);
    auto put_u32 = [&out](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put_u32(static_cast<std::uint32_t>(text.size()));
    out += text;
    put_u32(static_cast<std::uint32_t>(params.weights.size()));
    for (double w : params.weights) {
        const float f = static_cast<float>(w);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(bits);
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write toy scorer parameters to " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

ToyScorerParams load_toy_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open toy scorer parameters " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
    auto get_u32 = [&](std::size_t off) {
        if (off + 4 > bytes.size()) throw DataError("truncated toy scorer file " + path.string());
        return static_cast<std::uint32_t>(u[off]) | (static_cast<std::uint32_t>(u[off + 1]) << 8) |
               (static_cast<std::uint32_t>(u[off + 2]) << 16) | (static_cast<std::uint32_t>(u[off + 3]) << 24);
    };
    if (bytes.size() < 9 || std::memcmp(bytes.data(), kParamsMagic, 5) != 0) {
        throw DataError("not a toy scorer parameter file: " + path.string());
    }
    const std::uint32_t header_len = get_u32(5);
    if (9 + static_cast<std::size_t>(header_len) > bytes.size()) throw DataError("truncated toy scorer header");
    ToyScorerParams p;
    try {
        const auto header = nlohmann::json::parse(bytes.substr(9, header_len));
        const auto& g = header.at("grid");
        p.grid.window_length = g.at("window_length").get<int>();
        p.grid.lengths = g.at("lengths").get<std::vector<double>>();
        p.grid.positive_iou = g.at("positive_iou").get<double>();
        p.grid.negative_iou = g.at("negative_iou").get<double>();
        p.summary_dim = header.at("summary_dim").get<std::size_t>();
        if (header.at("outputs").get<int>() != kOutputs) throw DataError("unsupported toy scorer output count");
        p.feature_mean = header.value("feature_mean", std::vector<double>{});
        p.feature_scale = header.value("feature_scale", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad toy scorer header: ") + e.what());
    }
    if (p.summary_dim != AnchorSummarizer::kDim) throw DataError("toy scorer summary dimension mismatch");
    if (p.feature_mean.size() != p.feature_scale.size() || (!p.feature_mean.empty() && p.feature_mean.size() != p.summary_dim) ||
        std::any_of(p.feature_scale.begin(), p.feature_scale.end(), [](double v) { return !(v > 0.0); })) {
        throw DataError("toy scorer standardiser is malformed");
    }
    p.grid.validate();
    const std::size_t off = 9 + header_len;
    const std::uint32_t count = get_u32(off);
    if (count != p.grid.lengths.size() * p.group_stride()) throw DataError("toy scorer weight count mismatch");
    if (off + 4 + static_cast<std::size_t>(count) * 4 != bytes.size()) throw DataError("toy scorer payload size mismatch");
    p.weights.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32(off + 4 + static_cast<std::size_t>(i) * 4);
        float f;
        std::memcpy(&f, &bits, 4);
        p.weights[i] = f;
    }
    return p;
}

}  // namespace sbd

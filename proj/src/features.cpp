// SPDX-License-Identifier: Apache-2.0
#include "sbd/features.hpp"

#include "sbd/error.hpp"
#include "sbd/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace sbd {

namespace {

constexpr char kFeatureMagic[5] = {'S', 'B', 'D', 'F', '1'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

float get_f32(const unsigned char* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

FeatureSequence::FeatureSequence(std::size_t frame_count, std::size_t dim)
    : frames_(frame_count), dim_(dim), data_(frame_count * dim, 0.0f) {}

void FeatureSequence::set(std::size_t i, const FrameFeature& f) {
    if (f.values.size() != dim_) throw std::invalid_argument("feature dimension mismatch");
    std::copy(f.values.begin(), f.values.end(), data_.begin() + static_cast<std::ptrdiff_t>(i * dim_));
}

FrameFeature FeatureSequence::at(std::size_t i) const {
    auto r = row(i);
    return FrameFeature{std::vector<float>(r.begin(), r.end()), static_cast<std::int64_t>(i)};
}

void FeatureSequence::push_back(std::span<const float> values) {
    if (frames_ == 0 && dim_ == 0) dim_ = values.size();
    if (values.size() != dim_) {
        throw DataError("dimension drift at frame " + std::to_string(frames_) + ": expected " +
                        std::to_string(dim_) + ", got " + std::to_string(values.size()));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++frames_;
}

std::vector<double> channel_histograms(const Image& frame, int bins) {
    if (frame.height < 1 || frame.width < 1 || frame.rgb.empty()) {
        throw std::invalid_argument("empty image");
    }
    if (frame.rgb.size() != static_cast<std::size_t>(frame.height) * frame.width * 3) {
        throw std::invalid_argument("image buffer is not 3-channel");
    }
    if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");

    std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins) * 3, 0);
    const std::size_t pixels = static_cast<std::size_t>(frame.height) * frame.width;
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < 3; ++c) {
            const int v = frame.rgb[p * 3 + c];
            counts[static_cast<std::size_t>(c) * bins + (v * bins) / 256]++;
        }
    }
    std::vector<double> hist(counts.size());
    const double inv = 1.0 / static_cast<double>(pixels);
    for (std::size_t i = 0; i < counts.size(); ++i) hist[i] = counts[i] * inv;
    return hist;
}

FrameFeature extract_histogram_feature(const Image& frame, int bins, std::int64_t frame_index) {
    const std::vector<double> hist = channel_histograms(frame, bins);
    FrameFeature f;
    f.frame_index = frame_index;
    f.values.resize(hist.size());
    for (std::size_t i = 0; i < hist.size(); ++i) {
        f.values[i] = static_cast<float>(hist[i] + kHistogramEpsilon);
    }
    return f;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("cosine similarity: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw std::invalid_argument("cosine similarity: zero-norm vector");
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double cosine_similarity(const FrameFeature& a, const FrameFeature& b) {
    return cosine_similarity(std::span<const float>(a.values), std::span<const float>(b.values));
}

SimilaritySeries similarity_series(const FeatureSequence& frames, int scale, std::string video_id) {
    if (scale < 1) throw std::invalid_argument("scale must be >= 1");
    const std::size_t step = static_cast<std::size_t>(scale);
    const std::size_t sampled = frames.empty() ? 0 : (frames.size() - 1) / step + 1;
    if (sampled < 2) {
        throw std::invalid_argument("similarity series needs >= 2 sampled frames at scale " +
                                    std::to_string(scale));
    }
    SimilaritySeries s;
    s.video_id = std::move(video_id);
    s.scale = scale;
    s.values.reserve(sampled - 1);
    for (std::size_t k = 0; k + 1 < sampled; ++k) {
        s.values.push_back(cosine_similarity(frames.row(k * step), frames.row((k + 1) * step)));
    }
    return s;
}

FeatureSequence extract_features(std::span<const Image> frames, int bins, int threads) {
    FeatureSequence out(frames.size(), static_cast<std::size_t>(bins) * 3);
    parallel_for(frames.size(), threads, [&](std::size_t i) {
        out.set(i, extract_histogram_feature(frames[i], bins, static_cast<std::int64_t>(i)));
    });
    return out;
}

FeatureSequence parse_feature_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("malformed feature JSON: ") + e.what());
    }
    if (!j.is_array()) throw DataError("feature JSON must be an array");
    if (j.empty()) throw DataError("feature file has no frames");

    FeatureSequence seq;
    std::vector<float> row;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& item = j[i];
        const nlohmann::json* values = &item;
        if (item.is_object()) {
            if (!item.contains("values") || !item.contains("frame_index")) {
                throw DataError("feature entry " + std::to_string(i) + " needs frame_index and values");
            }
            if (item["frame_index"].get<std::int64_t>() != static_cast<std::int64_t>(i)) {
                throw DataError("non-contiguous frame index at entry " + std::to_string(i));
            }
            values = &item["values"];
        }
        if (!values->is_array()) throw DataError("feature entry " + std::to_string(i) + " is not an array");
        row.clear();
        for (const auto& v : *values) {
            if (!v.is_number()) throw DataError("non-numeric feature value at frame " + std::to_string(i));
            const double d = v.get<double>();
            if (!std::isfinite(d)) throw DataError("non-finite feature value at frame " + std::to_string(i));
            row.push_back(static_cast<float>(d));
        }
        if (row.empty()) throw DataError("empty feature vector at frame " + std::to_string(i));
        seq.push_back(row);
    }
    return seq;
}

FeatureSequence load_external_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw DataError("feature file has no frames: " + path.string());

    if (bytes.size() >= 5 && std::memcmp(bytes.data(), kFeatureMagic, 5) == 0) {
        if (bytes.size() < 13) throw DataError("truncated SBDF1 header");
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
        const std::uint32_t count = get_u32(p + 5);
        const std::uint32_t dim = get_u32(p + 9);
        if (count == 0) throw DataError("feature file has no frames");
        if (dim == 0) throw DataError("feature dimension is zero");
        const std::size_t expected = 13 + static_cast<std::size_t>(count) * dim * 4;
        if (bytes.size() != expected) {
            throw DataError("SBDF1 payload size mismatch: expected " + std::to_string(expected) +
                            " bytes, got " + std::to_string(bytes.size()));
        }
        FeatureSequence seq(count, dim);
        for (std::size_t i = 0; i < static_cast<std::size_t>(count) * dim; ++i) {
            const float f = get_f32(p + 13 + i * 4);
            if (!std::isfinite(f)) throw DataError("non-finite feature value");
            seq.row(i / dim)[i % dim] = f;
        }
        return seq;
    }
    return parse_feature_json(bytes);
}

void write_feature_file(const FeatureSequence& features, const std::filesystem::path& path) {
    std::string out(kFeatureMagic, 5);
    put_u32(out, static_cast<std::uint32_t>(features.size()));
    put_u32(out, static_cast<std::uint32_t>(features.dim()));
    for (float f : features.data()) put_f32(out, f);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot write feature file " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace sbd

// SPDX-License-Identifier: Apache-2.0
#include "sbd/error.hpp"
#include "sbd/features.hpp"
#include "sbd/frame_io.hpp"
#include "sbd/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace sbd;
using sbd::testing::TempDir;
using sbd::testing::uniform_image;

namespace {

void check_channel(const FrameFeature& f, int bins, std::vector<double> expected) {
    for (int c = 0; c < 3; ++c) {
        for (int b = 0; b < bins; ++b) {
            CHECK(f.values[static_cast<std::size_t>(c * bins + b)] == doctest::Approx(expected[static_cast<std::size_t>(b)]).epsilon(1e-6));
        }
    }
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

}  // namespace

TEST_CASE("histogram of uniform frames") {
    check_channel(extract_histogram_feature(uniform_image(4, 4, 0, 0, 0), 4), 4, {1, 0, 0, 0});
    check_channel(extract_histogram_feature(uniform_image(4, 4, 255, 255, 255), 4), 4, {0, 0, 0, 1});
}

TEST_CASE("histogram of a two-pixel frame") {
    Image img(2, 1);
    img.pixel(0, 0)[0] = img.pixel(0, 0)[1] = img.pixel(0, 0)[2] = 0;
    img.pixel(1, 0)[0] = img.pixel(1, 0)[1] = img.pixel(1, 0)[2] = 255;
    check_channel(extract_histogram_feature(img, 4), 4, {0.5, 0, 0, 0.5});
}

TEST_CASE("raw channel histograms sum to one per channel") {
    Rng rng(3);
    Image img(7, 9);
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    const auto h = channel_histograms(img, 64);
    REQUIRE(h.size() == 192);
    for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int b = 0; b < 64; ++b) s += h[static_cast<std::size_t>(c * 64 + b)];
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("extraction rejects bad input") {
    CHECK_THROWS_AS(extract_histogram_feature(Image{}, 4), std::invalid_argument);
    Image bad(2, 2);
    bad.rgb.pop_back();
    CHECK_THROWS_AS(extract_histogram_feature(bad, 4), std::invalid_argument);
    CHECK_THROWS_AS(extract_histogram_feature(uniform_image(2, 2, 1, 2, 3), 1), std::invalid_argument);
}

TEST_CASE("epsilon smoothing keeps every norm positive") {
    const auto f = extract_histogram_feature(uniform_image(3, 3, 10, 200, 90));
    REQUIRE(f.values.size() == 192);
    double norm = 0;
    for (float v : f.values) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0f);
        norm += v * v;
    }
    CHECK(norm > 0.0);
}

TEST_CASE("cosine similarity examples") {
    const std::vector<float> a{1, 1}, b{1, 0}, c{0, 1}, z{0, 0}, d3{1, 2, 3};
    CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
    CHECK(cosine_similarity(b, c) == doctest::Approx(0.0));
    CHECK(cosine_similarity(a, b) == doctest::Approx(0.707107).epsilon(1e-6));
    CHECK_THROWS_AS(cosine_similarity(a, d3), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity(a, z), std::invalid_argument);
}

TEST_CASE("cosine similarity is symmetric and bounded on random vectors") {
    Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 40));
        std::vector<float> a(n), b(n);
        for (auto& v : a) v = static_cast<float>(rng.uniform(-5, 5));
        for (auto& v : b) v = static_cast<float>(rng.uniform(-5, 5));
        a[0] += 10.0f;
        b[0] += 10.0f;
        const double s = cosine_similarity(a, b);
        CHECK(s == cosine_similarity(b, a));
        CHECK(std::abs(s) <= 1.0 + 1e-12);
    }
}

TEST_CASE("similarity series examples") {
    FeatureSequence same;
    for (int i = 0; i < 10; ++i) same.push_back(std::vector<float>{0.3f, 0.7f});
    const auto s1 = similarity_series(same, 1, "v");
    REQUIRE(s1.values.size() == 9);
    for (double v : s1.values) CHECK(v == doctest::Approx(1.0));
    CHECK(s1.scale == 1);
    CHECK(s1.video_id == "v");

    FeatureSequence eight;
    for (int i = 0; i < 8; ++i) eight.push_back(std::vector<float>{static_cast<float>(i + 1), 1.0f});
    CHECK(similarity_series(eight, 4).values.size() == 1);

    const auto black = extract_histogram_feature(uniform_image(2, 2, 0, 0, 0));
    const auto white = extract_histogram_feature(uniform_image(2, 2, 255, 255, 255));
    FeatureSequence alt;
    for (int i = 0; i < 12; ++i) alt.push_back((i % 2 == 0 ? black : white).values);
    for (double v : similarity_series(alt, 2).values) CHECK(v == doctest::Approx(1.0));
    CHECK(similarity_series(alt, 1).values[0] < 0.01);

    CHECK_THROWS_AS(similarity_series(eight, 8), std::invalid_argument);
    CHECK_THROWS_AS(similarity_series(eight, 0), std::invalid_argument);
}

TEST_CASE("series length at unit scale is N-1") {
    for (std::size_t n = 2; n < 40; n += 3) {
        FeatureSequence f;
        for (std::size_t i = 0; i < n; ++i) f.push_back(std::vector<float>{1.0f, static_cast<float>(i)});
        const auto s = similarity_series(f, 1);
        CHECK(s.values.size() == n - 1);
        for (double v : s.values) CHECK(std::abs(v) <= 1.0);
    }
}

TEST_CASE("feature JSON ingestion") {
    const auto f = parse_feature_json("[[1,2],[3,4],[5,6]]");
    CHECK(f.size() == 3);
    CHECK(f.dim() == 2);
    CHECK(f.at(2).values == std::vector<float>{5, 6});
    CHECK(f.at(2).frame_index == 2);

    const auto g = parse_feature_json(R"([{"frame_index":0,"values":[1,0]},{"frame_index":1,"values":[0,1]}])");
    CHECK(g.size() == 2);
    CHECK_THROWS_WITH_AS(parse_feature_json(R"([{"frame_index":0,"values":[1,0]},{"frame_index":2,"values":[0,1]}])"),
                         doctest::Contains("non-contiguous"), DataError);
    CHECK_THROWS_WITH_AS(parse_feature_json("[]"), doctest::Contains("no frames"), DataError);
    CHECK_THROWS_WITH_AS(parse_feature_json("[[1,2],[3]]"), doctest::Contains("dimension drift"), DataError);
    CHECK_THROWS_AS(parse_feature_json("{"), DataError);
}

TEST_CASE("feature files round-trip through SBDF1 and JSON") {
    TempDir dir;
    FeatureSequence f;
    f.push_back(std::vector<float>{1.5f, 2.0f});
    f.push_back(std::vector<float>{0.25f, -3.0f});
    f.push_back(std::vector<float>{7.0f, 8.0f});
    write_feature_file(f, dir / "f.sbdf");
    const auto g = load_external_features(dir / "f.sbdf");
    CHECK(g.size() == 3);
    CHECK(g.data() == f.data());

    write_bytes(dir / "f.json", "[[1,2],[3,4],[5,6]]");
    CHECK(load_external_features(dir / "f.json").size() == 3);

    write_bytes(dir / "empty.sbdf", "");
    CHECK_THROWS_WITH_AS(load_external_features(dir / "empty.sbdf"), doctest::Contains("no frames"), DataError);
    std::string truncated = "SBDF1";
    truncated += std::string("\x02\x00\x00\x00\x02\x00\x00\x00", 8);
    truncated += std::string(4, '\0');
    write_bytes(dir / "short.sbdf", truncated);
    CHECK_THROWS_AS(load_external_features(dir / "short.sbdf"), DataError);
    CHECK_THROWS_AS(load_external_features(dir / "missing.sbdf"), DataError);
}

TEST_CASE("extraction is deterministic and thread-count independent") {
    Rng rng(5);
    std::vector<Image> frames;
    for (int i = 0; i < 9; ++i) {
        Image img(6, 5);
        for (auto& v : img.rgb) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        frames.push_back(img);
    }
    const auto a = extract_features(frames, 64, 1);
    const auto b = extract_features(frames, 64, 4);
    CHECK(a.data() == b.data());
    CHECK(extract_features(frames, 64, 1).data() == a.data());
}

TEST_CASE("frame directories load in order and PNG is lossless") {
    TempDir dir;
    std::vector<Image> frames{uniform_image(3, 4, 10, 20, 30), uniform_image(3, 4, 200, 100, 0)};
    frames[1].pixel(2, 3)[1] = 77;
    for (std::size_t i = 0; i < frames.size(); ++i) write_png(frames[i], dir / frame_file_name(static_cast<std::int64_t>(i)));
    CHECK(frame_file_name(7) == "frame_00000007.png");
    CHECK(count_frames(dir.path()) == 2);
    const auto loaded = load_frame_directory(dir.path());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == frames[0]);
    CHECK(loaded[1] == frames[1]);

    write_png(frames[0], dir / frame_file_name(3));
    CHECK_THROWS_AS(load_frame_directory(dir.path()), DataError);
}

TEST_CASE("decoder command substitutes placeholders") {
    const auto cmd = decoder_command("dec -i {input} -o {output}/f_%d.png", "in.mp4", "out");
    REQUIRE(cmd.size() == 5);
    CHECK(cmd[0] == "dec");
    CHECK(cmd[2] == "in.mp4");
    CHECK(cmd[4] == "out/f_%d.png");
}

TEST_CASE("decoder failures surface as data errors") {
    TempDir dir;
    write_bytes(dir / "in.bin", "x");
    CHECK_THROWS_AS(decode_video_frames(dir / "in.bin", dir / "out", "/nonexistent/decoder {input} {output}"), DataError);
    CHECK_THROWS_AS(decode_video_frames(dir / "in.bin", dir / "out", "false {input} {output}"), DataError);
}

TEST_CASE("external decoder contract: numbered frames in the output directory") {
    TempDir dir;
    write_png(uniform_image(2, 2, 1, 2, 3), dir / "src.png");
    write_bytes(dir / "in.bin", "x");
    write_bytes(dir / "dec.sh", "cp \"$(dirname \"$1\")/src.png\" \"$2/frame_00000000.png\"\n"
                                "cp \"$(dirname \"$1\")/src.png\" \"$2/frame_00000001.png\"\n");
    const std::string tmpl = "sh " + (dir / "dec.sh").string() + " {input} {output}";
    CHECK(decode_video_frames(dir / "in.bin", dir / "out", tmpl) == 2);
    CHECK(load_frame_directory(dir / "out").size() == 2);
}

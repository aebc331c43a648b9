// SPDX-License-Identifier: Apache-2.0
#include "sbd/dataset.hpp"
#include "sbd/error.hpp"
#include "sbd/rng.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>

using namespace sbd;
using sbd::testing::TempDir;

namespace {

VideoAnnotation random_annotation(Rng& rng, const std::string& annotator) {
    VideoAnnotation a;
    a.video = "v";
    a.frame_count = 400;
    a.annotator = annotator;
    std::int64_t t = rng.uniform_int(0, 10);
    while (true) {
        const double u = rng.uniform();
        const std::int64_t len = u < 0.4 ? 2 : rng.uniform_int(3, 30);
        if (t + len > a.frame_count) break;
        const FrameInterval iv{t, t + len - 1};
        if (u < 0.4) a.cuts.push_back(iv);
        else if (u < 0.9) a.graduals.push_back(iv);
        else a.too_hard.push_back(iv);
        t += len + rng.uniform_int(1, 40);
    }
    return a;
}

using DisagreementKey = std::tuple<std::string, std::string, std::int64_t, std::int64_t, std::string>;

std::vector<DisagreementKey> sorted_keys(const std::vector<Disagreement>& d) {
    std::vector<DisagreementKey> k;
    for (const auto& x : d) k.emplace_back(x.kind, x.annotator, x.interval.begin, x.interval.end, x.reason);
    std::sort(k.begin(), k.end());
    return k;
}

}  // namespace

TEST_CASE("annotation write/parse round trip") {
    TempDir dir;
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<VideoAnnotation> recs{random_annotation(rng, "alice")};
        if (trial % 2) recs.push_back(random_annotation(rng, "bob"));
        write_annotations(recs, dir / "a.json");
        REQUIRE(parse_annotations(dir / "a.json") == recs);
    }
}

TEST_CASE("annotation validation") {
    const auto base = R"({"video":"v","frame_count":100,"annotator":"a","cuts":[[10,11]],"graduals":[[20,30]],"too_hard":[]})";
    CHECK(parse_annotations_text(base).size() == 1);
    CHECK_THROWS_AS(parse_annotations_text(R"({"video":"v","frame_count":100,"annotator":"a","cuts":[[10,12]],"graduals":[],"too_hard":[]})"),
                    DataError);
    CHECK_THROWS_AS(
        parse_annotations_text(R"({"video":"v","frame_count":100,"annotator":"a","cuts":[],"graduals":[[20,30],[30,40]],"too_hard":[]})"),
        DataError);
    CHECK_THROWS_AS(parse_annotations_text(R"({"video":"v","frame_count":100,"annotator":"a","cuts":[],"graduals":[[90,100]],"too_hard":[]})"),
                    DataError);
    CHECK_THROWS_AS(parse_annotations_text(R"({"video":"v","cuts":[]})"), DataError);
    // Absent lists default to empty.
    CHECK(parse_annotations_text(R"({"video":"v","frame_count":100})")[0].cuts.empty());
    CHECK_THROWS_AS(parse_annotations_text("[1,2"), DataError);
    try {
        parse_annotations_text(R"([{"video":"v","frame_count":100,"annotator":"a","cuts":[[10,13]],"graduals":[],"too_hard":[]}])");
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("cuts") != std::string::npos);
    }
}

TEST_CASE("double annotation merge examples") {
    VideoAnnotation a{"v", 300, "a", {{50, 51}}, {{100, 120}}, {}};
    VideoAnnotation b{"v", 300, "b", {{50, 51}}, {{102, 123}}, {}};
    auto r = merge_double_annotations(a, a);
    CHECK(r.merged.cuts == a.cuts);
    CHECK(r.merged.graduals == a.graduals);
    CHECK(r.disagreements.empty());

    r = merge_double_annotations(a, b);
    CHECK(r.merged.graduals == std::vector<FrameInterval>{{100, 123}});
    CHECK(r.merged.annotator == "a+b");
    CHECK(r.disagreements.empty());

    a.cuts.push_back({200, 201});
    r = merge_double_annotations(a, b);
    CHECK(r.merged.cuts == std::vector<FrameInterval>{{50, 51}});
    REQUIRE(r.disagreements.size() == 1);
    CHECK(r.disagreements[0].kind == "cut");
    CHECK(r.disagreements[0].annotator == "a");

    // Cuts must coincide exactly.
    b.cuts = {{51, 52}};
    a.cuts = {{50, 51}};
    r = merge_double_annotations(a, b);
    CHECK(r.merged.cuts.empty());
    CHECK(r.disagreements.size() == 2);

    // Too-hard regions are reported and exclude what they touch.
    b.cuts = {{50, 51}};
    b.too_hard = {{115, 140}};
    r = merge_double_annotations(a, b);
    CHECK(r.merged.graduals.empty());
    CHECK(r.merged.too_hard == b.too_hard);
    CHECK(sorted_keys(r.disagreements) == std::vector<DisagreementKey>{{"too_hard", "b", 115, 140, "marked too hard"}});

    CHECK_THROWS_AS(merge_double_annotations(a, VideoAnnotation{"w", 300, "b", {}, {}, {}}), DataError);
    CHECK_THROWS_AS(merge_double_annotations(a, VideoAnnotation{"v", 301, "b", {}, {}, {}}), DataError);
}

TEST_CASE("merge is commutative up to report order") {
    Rng rng(15);
    for (int trial = 0; trial < 300; ++trial) {
        const auto a = random_annotation(rng, "a");
        const auto b = random_annotation(rng, "b");
        const auto ab = merge_double_annotations(a, b);
        const auto ba = merge_double_annotations(b, a);
        REQUIRE(ab.merged == ba.merged);
        REQUIRE(sorted_keys(ab.disagreements) == sorted_keys(ba.disagreements));
        ab.merged.validate();
    }
}

TEST_CASE("manifest round trip with relative paths") {
    TempDir dir;
    std::filesystem::create_directories(dir / "corpus/v1/frames");
    const std::vector<ManifestEntry> entries{{"v1", dir / "corpus/v1/frames", dir / "corpus/v1/annotation.json"}};
    write_manifest(entries, dir / "corpus/manifest.json");
    std::ifstream in(dir / "corpus/manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j[0]["frames_dir"] == "v1/frames");

    // Moving the whole corpus keeps the manifest valid.
    std::filesystem::rename(dir / "corpus", dir / "moved");
    const auto back = load_manifest(dir / "moved/manifest.json");
    REQUIRE(back.size() == 1);
    CHECK(back[0].video == "v1");
    CHECK(std::filesystem::equivalent(back[0].frames_dir, dir / "moved/v1/frames"));

    std::ofstream(dir / "bad.json") << R"([{"video":"v"}])";
    CHECK_THROWS_AS(load_manifest(dir / "bad.json"), DataError);
    CHECK_THROWS_AS(load_manifest(dir / "missing.json"), DataError);
}

// SPDX-License-Identifier: Apache-2.0
#include "sbd/annotation_service.hpp"
#include "sbd/synth.hpp"
#include "test_support.hpp"

#include "httplib.h"
#include <doctest.h>

#include <fstream>
#include <thread>

using namespace sbd;
using nlohmann::json;
using sbd::testing::TempDir;

namespace {

std::vector<ManifestEntry> make_corpus(const std::filesystem::path& root) {
    SynthSpec s;
    s.video = "clip";
    s.length = 100;
    s.cuts = {49};
    return {write_synth_video(synthesize_video(s), root / "clip")};
}

// Store plus a live server on an ephemeral port.
class Harness {
public:
    Harness(const std::vector<ManifestEntry>& corpus, const std::filesystem::path& store_dir)
        : store_(corpus, store_dir), server_(store_) {
        port_ = server_.bind("127.0.0.1", 0);
        REQUIRE(port_ > 0);
        thread_ = std::thread([this] { server_.listen_after_bind(); });
    }
    ~Harness() {
        server_.stop();
        thread_.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(10, 0);
        return c;
    }
    AnnotationStore& store() { return store_; }

private:
    AnnotationStore store_;
    AnnotationServer server_;
    int port_ = -1;
    std::thread thread_;
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

httplib::Result post_json(httplib::Client& c, const std::string& path, const json& body) {
    return c.Post(path, body.dump(), "application/json");
}

json transition(std::int64_t begin, std::int64_t end, const std::string& label, std::int64_t center,
                const std::string& annotator = "alice") {
    return {{"begin", begin}, {"end", end}, {"label", label}, {"too_hard", false}, {"annotator", annotator}, {"center", center}};
}

}  // namespace

TEST_CASE("page geometry") {
    CHECK(page_count(100) == 3);
    CHECK(page_count(45) == 1);
    CHECK(page_count(46) == 2);
    auto w = page_window(100, 2);
    REQUIRE(w);
    CHECK(w->begin == 90);
    CHECK(w->end == 99);
    CHECK(w->center == 94);
    CHECK_FALSE(page_window(100, 3));
    const auto r = recentred_window(100, 0, 30);
    CHECK(r.begin == 8);
    CHECK(r.end == 52);
    CHECK(r.center == 30);
}

TEST_CASE("pages over HTTP") {
    TempDir dir;
    Harness h(make_corpus(dir / "corpus"), dir / "store");
    auto c = h.client();

    auto videos = body_of(c.Get("/videos"));
    REQUIRE(videos.size() == 1);
    CHECK(videos[0]["video"] == "clip");
    CHECK(videos[0]["frame_count"] == 100);

    auto res = c.Get("/videos/clip/pages/0");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto page = json::parse(res->body);
    CHECK(page["begin"] == 0);
    CHECK(page["end"] == 44);
    CHECK(page["center"] == 22);
    CHECK(page["frames"].size() == 45);

    page = body_of(c.Get("/videos/clip/pages/2"));
    CHECK(page["begin"] == 90);
    CHECK(page["end"] == 99);
    CHECK(page["center"] == 94);

    CHECK(c.Get("/videos/clip/pages/3")->status == 404);
    CHECK(c.Get("/videos/nope/pages/0")->status == 404);
}

TEST_CASE("posting annotations over HTTP") {
    TempDir dir;
    Harness h(make_corpus(dir / "corpus"), dir / "store");
    auto c = h.client();

    auto res = post_json(c, "/videos/clip/annotations", transition(20, 30, "gradual", 22));
    REQUIRE(res);
    CHECK(res->status == 201);
    CHECK(json::parse(res->body)["id"] == 1);

    res = post_json(c, "/videos/clip/annotations", transition(24, 30, "gradual", 22, "bob"));
    CHECK(res->status == 422);
    CHECK(json::parse(res->body)["error"].get<std::string>().find("cross center") != std::string::npos);

    CHECK(post_json(c, "/videos/clip/annotations", transition(22, 23, "cut", 22, "bob"))->status == 201);
    CHECK(post_json(c, "/videos/clip/annotations", transition(22, 25, "cut", 22, "carol"))->status == 422);

    // At most one transition per page and annotator.
    CHECK(post_json(c, "/videos/clip/annotations", transition(21, 23, "gradual", 22))->status == 422);

    // Malformed payloads.
    CHECK(post_json(c, "/videos/clip/annotations", json{{"begin", 1}})->status == 422);
    CHECK(post_json(c, "/videos/clip/annotations", transition(20, 30, "wipe", 22, "dan"))->status == 422);
    CHECK(post_json(c, "/videos/clip/annotations", transition(20, 30, "gradual", 22, "../evil"))->status == 422);
    CHECK(post_json(c, "/videos/clip/annotations", transition(90, 100, "gradual", 94, "dan"))->status == 422);
    CHECK(c.Post("/videos/clip/annotations", "{not json", "application/json")->status == 400);
    CHECK(post_json(c, "/videos/nope/annotations", transition(20, 30, "gradual", 22))->status == 404);

    // Stored records show up on the pages they overlap.
    const auto page = body_of(c.Get("/videos/clip/pages/0"));
    CHECK(page["annotations"].size() == 2);
    CHECK(body_of(c.Get("/videos/clip/pages/2"))["annotations"].empty());

    // Per-annotator files hold valid annotations.
    CHECK(std::filesystem::exists(dir / "store/clip/alice.json"));
    CHECK(std::filesystem::exists(dir / "store/clip/bob.json"));
    const auto alice = parse_annotations(dir / "store/clip/alice.json");
    REQUIRE(alice.size() == 1);
    CHECK(alice[0].graduals == std::vector<FrameInterval>{{20, 30}});
    CHECK(alice[0].cuts.empty());
    CHECK(parse_annotations(dir / "store/clip/bob.json")[0].cuts == std::vector<FrameInterval>{{22, 23}});
}

TEST_CASE("make center over HTTP") {
    TempDir dir;
    Harness h(make_corpus(dir / "corpus"), dir / "store");
    auto c = h.client();

    auto page = body_of(post_json(c, "/videos/clip/pages/0/make_center", {{"frame", 30}}));
    CHECK(page["begin"] == 8);
    CHECK(page["end"] == 52);
    CHECK(page["center"] == 30);
    page = body_of(post_json(c, "/videos/clip/pages/0/make_center", {{"frame", 10}}));
    CHECK(page["begin"] == 0);
    CHECK(page["end"] == 32);
    CHECK(page["center"] == 10);
    CHECK(post_json(c, "/videos/clip/pages/0/make_center", {{"frame", 60}})->status == 422);
    CHECK(post_json(c, "/videos/clip/pages/0/make_center", {{"frame", "x"}})->status == 422);
    CHECK(post_json(c, "/videos/clip/pages/9/make_center", {{"frame", 30}})->status == 404);

    // A recentred view lets the annotator add a second transition from the same page.
    CHECK(post_json(c, "/videos/clip/annotations", transition(20, 24, "gradual", 22))->status == 201);
    CHECK(post_json(c, "/videos/clip/annotations", transition(30, 36, "gradual", 33))->status == 201);
    // Overlapping graduals still fail validation.
    CHECK(post_json(c, "/videos/clip/annotations", transition(35, 40, "gradual", 38))->status == 422);
}

TEST_CASE("annotations survive a restart") {
    TempDir dir;
    const auto corpus = make_corpus(dir / "corpus");
    {
        Harness h(corpus, dir / "store");
        auto c = h.client();
        REQUIRE(post_json(c, "/videos/clip/annotations", transition(48, 49, "cut", 48))->status == 201);
    }
    Harness h(corpus, dir / "store");
    auto c = h.client();
    const auto page = body_of(c.Get("/videos/clip/pages/1"));
    REQUIRE(page["annotations"].size() == 1);
    CHECK(page["annotations"][0]["begin"] == 48);
    CHECK(post_json(c, "/videos/clip/annotations", transition(47, 48, "cut", 48))->status == 422);
    const auto a = h.store().annotation_of("clip", "alice");
    REQUIRE(a);
    CHECK(a->cuts == std::vector<FrameInterval>{{48, 49}});
}

TEST_CASE("frames are served from the corpus") {
    TempDir dir;
    const auto corpus = make_corpus(dir / "corpus");
    Harness h(corpus, dir / "store");
    auto c = h.client();
    auto res = c.Get("/videos/clip/frames/5");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Content-Type") == "image/png");
    std::ifstream in(corpus[0].frames_dir / "frame_00000005.png", std::ios::binary);
    CHECK(res->body == std::string(std::istreambuf_iterator<char>(in), {}));
    CHECK(c.Get("/videos/clip/frames/100")->status == 404);
}

TEST_CASE("concurrent posts from several annotators") {
    TempDir dir;
    Harness h(make_corpus(dir / "corpus"), dir / "store");
    std::vector<std::thread> workers;
    std::atomic<int> created{0};
    for (int a = 0; a < 4; ++a) {
        workers.emplace_back([&, a] {
            auto c = h.client();
            for (int page = 0; page < 2; ++page) {
                const std::int64_t center = 22 + 45 * page;
                const auto r = post_json(c, "/videos/clip/annotations",
                                         transition(center - 2, center + 2, "gradual", center, "ann" + std::to_string(a)));
                if (r && r->status == 201) ++created;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(created == 8);
    for (int a = 0; a < 4; ++a) {
        const auto ann = parse_annotations(dir / ("store/clip/ann" + std::to_string(a) + ".json"));
        CHECK(ann[0].graduals.size() == 2);
    }
}

// SPDX-License-Identifier: Apache-2.0
#include "sbd/frame_io.hpp"

#include "sbd/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cstdio>
#include <cstring>
#include <spawn.h>
#include <sstream>
#include <sys/wait.h>

extern char** environ;

namespace sbd {

namespace fs = std::filesystem;

std::string frame_file_name(std::int64_t index, const std::string& extension) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%08lld", static_cast<long long>(index));
    return std::string(buf) + extension;
}

namespace {

fs::path find_frame(const fs::path& dir, std::int64_t index) {
    for (const char* ext : {".png", ".jpg", ".jpeg"}) {
        fs::path p = dir / frame_file_name(index, ext);
        if (fs::exists(p)) return p;
    }
    return {};
}

}  // namespace

Image read_image(const fs::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image img(rgb.rows, rgb.cols);
    for (int y = 0; y < rgb.rows; ++y) {
        std::memcpy(img.pixel(y, 0), rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3);
    }
    return img;
}

void write_png(const Image& image, const fs::path& path) {
    cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), bgr)) throw DataError("cannot write image " + path.string());
}

std::size_t count_frames(const fs::path& dir) {
    std::size_t n = 0;
    while (!find_frame(dir, static_cast<std::int64_t>(n)).empty()) ++n;
    return n;
}

std::vector<Image> load_frame_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("frame directory not found: " + dir.string());
    std::vector<Image> frames;
    for (std::int64_t i = 0;; ++i) {
        const fs::path p = find_frame(dir, i);
        if (p.empty()) break;
        frames.push_back(read_image(p));
        if (frames.back().height != frames.front().height || frames.back().width != frames.front().width) {
            throw DataError("frame size changes at " + p.string());
        }
    }
    if (frames.empty()) throw DataError("no frames (expected frame_00000000.png) in " + dir.string());
    std::size_t named = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string ext = entry.path().extension().string();
        if (name.rfind("frame_", 0) == 0 && (ext == ".png" || ext == ".jpg" || ext == ".jpeg")) ++named;
    }
    if (named != frames.size()) {
        throw DataError("non-contiguous frame files in " + dir.string() + ": " + std::to_string(named) +
                        " present, sequence stops after " + std::to_string(frames.size()));
    }
    return frames;
}

std::vector<std::string> decoder_command(const std::string& command_template, const fs::path& input,
                                         const fs::path& output_dir) {
    std::vector<std::string> argv;
    std::istringstream in(command_template);
    std::string token;
    while (in >> token) {
        for (auto [key, value] : {std::pair<std::string, std::string>{"{input}", input.string()},
                                  {"{output}", output_dir.string()}}) {
            for (std::size_t pos = token.find(key); pos != std::string::npos; pos = token.find(key, pos + value.size())) {
                token.replace(pos, key.size(), value);
            }
        }
        argv.push_back(token);
    }
    if (argv.empty()) throw DataError("empty decoder command");
    return argv;
}

std::size_t decode_video_frames(const fs::path& video, const fs::path& output_dir,
                                const std::string& command_template) {
    if (!fs::exists(video)) throw DataError("video not found: " + video.string());
    fs::create_directories(output_dir);
    std::vector<std::string> args = decoder_command(command_template, video, output_dir);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    if (posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ) != 0) {
        throw DataError("cannot start decoder '" + args[0] + "'");
    }
    int status = 0;
    if (waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw DataError("decoder '" + args[0] + "' failed on " + video.string());
    }
    const std::size_t n = count_frames(output_dir);
    if (n == 0) throw DataError("decoder produced no frames for " + video.string());
    return n;
}

}  // namespace sbd

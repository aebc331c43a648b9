// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "sbd/features.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sbd {

/// frame_%08d.png
std::string frame_file_name(std::int64_t index, const std::string& extension = ".png");

/// Reads frame_00000000.{png,jpg}, frame_00000001..., stopping at the first
/// missing index. Throws DataError when the directory holds no frame 0.
std::vector<Image> load_frame_directory(const std::filesystem::path& dir);

/// Counts the contiguous numbered frames without decoding them.
std::size_t count_frames(const std::filesystem::path& dir);

Image read_image(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

/// Decoder contract: the command template is split on whitespace, "{input}"
/// and "{output}" are substituted, and the program must leave numbered
/// frames (frame_%08d.png starting at 0) in the output directory.
inline constexpr const char* kDefaultDecoderTemplate =
    "ffmpeg -nostdin -loglevel error -i {input} -start_number 0 {output}/frame_%08d.png";

std::vector<std::string> decoder_command(const std::string& command_template,
                                         const std::filesystem::path& input,
                                         const std::filesystem::path& output_dir);

/// Runs the decoder as a subprocess and returns the number of frames produced.
std::size_t decode_video_frames(const std::filesystem::path& video,
                                const std::filesystem::path& output_dir,
                                const std::string& command_template = kDefaultDecoderTemplate);

}  // namespace sbd

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace qinpaint::imaging::detail {

/// Decoded PNG samples, interleaved, without alpha. `channels` is 1 (gray) or 3.
struct RawPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int channels = 0;
    int bit_depth = 8;  // 8 or 16
    std::vector<std::uint16_t> samples;
};

RawPng read_png(const std::filesystem::path& path);

/// Writes 8-bit gray (channels == 1) or RGB (channels == 3).
void write_png(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height, int channels,
               const std::vector<std::uint8_t>& samples);

}  // namespace qinpaint::imaging::detail

#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>

#include "qinpaint/qtensor.hpp"

namespace qinpaint::imaging {

/// RGB image with samples normalized to [0, 1]. Pixel (y, x) is row y*width + x
/// of `pixels`; columns are the r, g, b planes.
struct RgbImage {
    using Planes = Eigen::Matrix<double, Eigen::Dynamic, 3>;

    Index height = 0;
    Index width = 0;
    Planes pixels;

    RgbImage() = default;
    RgbImage(Index h, Index w) : height(h), width(w), pixels(Planes::Zero(h * w, 3)) {}

    Index size() const { return height * width; }
    Index index(Index y, Index x) const { return y * width + x; }
    std::array<double, 3> at(Index y, Index x) const {
        const Index i = index(y, x);
        return {pixels(i, 0), pixels(i, 1), pixels(i, 2)};
    }
    void set(Index y, Index x, const std::array<double, 3>& rgb) {
        const Index i = index(y, x);
        pixels(i, 0) = rgb[0];
        pixels(i, 1) = rgb[1];
        pixels(i, 2) = rgb[2];
    }

    friend bool operator==(const RgbImage& a, const RgbImage& b) {
        return a.height == b.height && a.width == b.width && a.pixels == b.pixels;
    }
};

/// Pure-quaternion encoding: 0 + r i + g j + b k, one quaternion channel.
QTensor encode(const RgbImage& img);

/// Drops the real plane and clamps the imaginary planes to [0, 1].
RgbImage decode(const QTensor& t);

/// Reads 8- or 16-bit PNG (gray, gray+alpha, RGB, RGBA, palette). Alpha is ignored,
/// gray is replicated, 16-bit samples are divided by 65535.
RgbImage load_png(const std::filesystem::path& path);

/// Writes 8-bit RGB; samples are clamped and rounded half away from zero.
void save_png(const RgbImage& img, const std::filesystem::path& path);

/// 8-bit quantization used by save_png.
std::uint8_t quantize8(double v);

/// Sets every sample to its 8-bit quantized value / 255.
RgbImage quantized(const RgbImage& img);

/// Copies a height x width window starting at (top, left).
RgbImage crop(const RgbImage& img, Index top, Index left, Index height, Index width);

/// Reflect-pads bottom and right so both sides become multiples of `multiple`.
RgbImage reflect_pad(const RgbImage& img, Index multiple);

}  // namespace qinpaint::imaging

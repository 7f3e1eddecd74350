#include "qinpaint/imaging/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "png_io.hpp"
#include "reflect.hpp"

namespace qinpaint::imaging {

QTensor encode(const RgbImage& img) {
    QTensor t(1, img.height, img.width);
    t.plane(X) = img.pixels.col(0);
    t.plane(Y) = img.pixels.col(1);
    t.plane(Z) = img.pixels.col(2);
    return t;
}

RgbImage decode(const QTensor& t) {
    if (t.channels() != 1)
        throw ShapeError("decode: expected 1 quaternion channel, got " + std::to_string(t.channels()));
    RgbImage img(t.height(), t.width());
    for (int c = 0; c < 3; ++c) img.pixels.col(c) = t.plane(X + c).cwiseMax(0.0).cwiseMin(1.0);
    return img;
}

std::uint8_t quantize8(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

RgbImage quantized(const RgbImage& img) {
    RgbImage out = img;
    out.pixels = img.pixels.unaryExpr([](double v) { return quantize8(v) / 255.0; });
    return out;
}

RgbImage load_png(const std::filesystem::path& path) {
    const detail::RawPng raw = detail::read_png(path);
    const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
    RgbImage img(raw.height, raw.width);
    for (Index i = 0; i < img.size(); ++i)
        for (int c = 0; c < 3; ++c) {
            const int src = raw.channels == 1 ? 0 : c;
            img.pixels(i, c) = raw.samples[static_cast<std::size_t>(i) * raw.channels + src] / scale;
        }
    return img;
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> samples(static_cast<std::size_t>(img.size()) * 3);
    for (Index i = 0; i < img.size(); ++i)
        for (int c = 0; c < 3; ++c) samples[static_cast<std::size_t>(i) * 3 + c] = quantize8(img.pixels(i, c));
    detail::write_png(path, static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height), 3,
                      samples);
}

RgbImage crop(const RgbImage& img, Index top, Index left, Index height, Index width) {
    if (top < 0 || left < 0 || height < 0 || width < 0 || top + height > img.height || left + width > img.width)
        throw GeometryError("crop window exceeds image bounds");
    RgbImage out(height, width);
    for (Index y = 0; y < height; ++y)
        for (Index x = 0; x < width; ++x) out.pixels.row(out.index(y, x)) = img.pixels.row(img.index(top + y, left + x));
    return out;
}

RgbImage reflect_pad(const RgbImage& img, Index multiple) {
    if (multiple < 1) throw GeometryError("reflect_pad: multiple must be >= 1");
    const Index h = detail::round_up(img.height, multiple), w = detail::round_up(img.width, multiple);
    RgbImage out(h, w);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            out.pixels.row(out.index(y, x)) =
                img.pixels.row(img.index(detail::reflect_index(y, img.height), detail::reflect_index(x, img.width)));
    return out;
}

}  // namespace qinpaint::imaging

#include "qinpaint/imaging/mask.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "png_io.hpp"
#include "reflect.hpp"

namespace qinpaint::imaging {

namespace {

void require_spatial(const Mask& m, Index h, Index w, const char* op) {
    if (m.height() != h || m.width() != w)
        throw ShapeError(std::string(op) + ": mask " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                         " vs data " + std::to_string(h) + "x" + std::to_string(w));
}

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
using Glyph = std::array<std::uint8_t, 7>;

Glyph glyph_for(char ch) {
    static const Glyph letters[26] = {
        {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
        {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},
        {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
        {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
        {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
        {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
        {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
        {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
        {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
        {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
        {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
        {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
    };
    static const Glyph digits[10] = {
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
    };
    const unsigned char u = static_cast<unsigned char>(std::toupper(static_cast<unsigned char>(ch)));
    if (u >= 'A' && u <= 'Z') return letters[u - 'A'];
    if (u >= '0' && u <= '9') return digits[u - '0'];
    switch (u) {
        case '.': return {0, 0, 0, 0, 0, 0x0C, 0x0C};
        case '-': return {0, 0, 0, 0x1F, 0, 0, 0};
        case '!': return {0x04, 0x04, 0x04, 0x04, 0x04, 0, 0x04};
        default: return {0, 0, 0, 0, 0, 0, 0};
    }
}

double distance_to_segment(double py, double px, const Stroke& s) {
    const double dy = s.y1 - s.y0, dx = s.x1 - s.x0;
    const double len2 = dy * dy + dx * dx;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((py - s.y0) * dy + (px - s.x0) * dx) / len2, 0.0, 1.0);
    const double ey = py - (s.y0 + t * dy), ex = px - (s.x0 + t * dx);
    return std::sqrt(ey * ey + ex * ex);
}

Mask text_overlay(Index height, Index width, const StructuralParams& p) {
    if (p.glyph_scale < 1) throw std::invalid_argument("text-overlay: glyph scale must be >= 1");
    if (p.line_gap < 0) throw std::invalid_argument("text-overlay: line gap must be >= 0");
    Mask m = Mask::full(height, width);
    const std::string text = p.text.empty() ? std::string("TEXT") : p.text + " ";
    const Index cell = p.glyph_scale;
    const Index advance = 6 * cell;  // 5 columns + 1 blank
    const Index pitch = 7 * cell + p.line_gap;
    const Index period = advance * static_cast<Index>(text.size());

    for (Index row = 0; p.line_gap / 2 + row * pitch < height; ++row) {
        const Index top = p.line_gap / 2 + row * pitch;
        const Index shift = (row * 3 * advance + static_cast<Index>(p.seed % 997) * cell) % period;
        for (Index y = top; y < std::min(height, top + 7 * cell); ++y) {
            const Index gy = (y - top) / cell;
            for (Index x = 0; x < width; ++x) {
                const Index u = (x + shift) % period;
                const Index gx = (u % advance) / cell;
                if (gx >= 5) continue;
                const Glyph g = glyph_for(text[static_cast<std::size_t>(u / advance)]);
                if (g[gy] & (0x10 >> gx)) m.set(y, x, false);
            }
        }
    }
    return m;
}

Mask scratch_lines(Index height, Index width, const StructuralParams& p) {
    if (p.lines < 0) throw std::invalid_argument("scratch-lines: line count must be >= 0");
    if (!(p.line_width > 0.0)) throw std::invalid_argument("scratch-lines: line width must be positive");
    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> uy(0.0, double(height - 1)), ux(0.0, double(width - 1));
    std::uniform_real_distribution<double> angle(0.0, M_PI), frac(0.3, 1.0);
    const double extent = double(std::max(height, width));

    std::vector<Stroke> strokes;
    for (int i = 0; i < p.lines; ++i) {
        const double cy = uy(rng), cx = ux(rng), a = angle(rng), half = 0.5 * frac(rng) * extent;
        strokes.push_back({cy - half * std::sin(a), cx - half * std::cos(a), cy + half * std::sin(a),
                           cx + half * std::cos(a)});
    }
    return rasterize_strokes(height, width, strokes, p.line_width);
}

}  // namespace

QTensor apply_mask(const QTensor& t, const Mask& m) {
    require_spatial(m, t.height(), t.width(), "apply_mask");
    QTensor out(t.shape());
    const Index n = t.spatial();
    for (int p = 0; p < 4; ++p)
        for (Index c = 0; c < t.channels(); ++c)
            for (Index i = 0; i < n; ++i)
                if (m.observed(i)) out.plane(p)(c * n + i) = t.plane(p)(c * n + i);
    return out;
}

RgbImage apply_mask(const RgbImage& img, const Mask& m) {
    require_spatial(m, img.height, img.width, "apply_mask");
    RgbImage out(img.height, img.width);
    for (Index i = 0; i < img.size(); ++i)
        if (m.observed(i)) out.pixels.row(i) = img.pixels.row(i);
    return out;
}

Mask gen_random_mask(Index height, Index width, double sr, std::uint64_t seed) {
    if (!(sr >= 0.0 && sr <= 1.0)) throw std::invalid_argument("sampling rate must lie in [0, 1]");
    if (height < 0 || width < 0) throw GeometryError("mask extents must be non-negative");
    const Index total = height * width;
    const Index count = static_cast<Index>(std::llround(sr * static_cast<double>(total)));

    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Mask m = Mask::empty(height, width);
    for (Index i = 0; i < count; ++i) m.bits().data()[order[static_cast<std::size_t>(i)]] = true;
    return m;
}

StructuralPattern pattern_from_string(const std::string& name) {
    if (name == "text-overlay") return StructuralPattern::TextOverlay;
    if (name == "scratch-lines") return StructuralPattern::ScratchLines;
    throw std::invalid_argument("unknown mask pattern '" + name + "' (expected text-overlay or scratch-lines)");
}

std::string to_string(StructuralPattern p) {
    return p == StructuralPattern::TextOverlay ? "text-overlay" : "scratch-lines";
}

Mask rasterize_strokes(Index height, Index width, const std::vector<Stroke>& strokes, double line_width) {
    Mask m = Mask::full(height, width);
    const double half = 0.5 * line_width;
    for (Index y = 0; y < height; ++y)
        for (Index x = 0; x < width; ++x)
            for (const auto& s : strokes)
                if (distance_to_segment(double(y), double(x), s) <= half) {
                    m.set(y, x, false);
                    break;
                }
    return m;
}

Mask gen_structural_mask(Index height, Index width, StructuralPattern pattern, const StructuralParams& params) {
    if (height < 1 || width < 1) throw GeometryError("structural mask extents must be positive");
    return pattern == StructuralPattern::TextOverlay ? text_overlay(height, width, params)
                                                     : scratch_lines(height, width, params);
}

void save_mask(const Mask& m, const std::filesystem::path& path) {
    std::vector<std::uint8_t> samples(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.size(); ++i) samples[static_cast<std::size_t>(i)] = m.observed(i) ? 255 : 0;
    detail::write_png(path, static_cast<std::uint32_t>(m.width()), static_cast<std::uint32_t>(m.height()), 1,
                      samples);
}

Mask load_mask(const std::filesystem::path& path) {
    const detail::RawPng raw = detail::read_png(path);
    Mask m = Mask::empty(raw.height, raw.width);
    const double to8 = raw.bit_depth == 16 ? 1.0 / 257.0 : 1.0;
    for (Index i = 0; i < m.size(); ++i) {
        const std::size_t o = static_cast<std::size_t>(i) * raw.channels;
        double luma;
        if (raw.channels == 1) {
            luma = raw.samples[o] * to8;
        } else {
            luma = (299.0 * raw.samples[o] + 587.0 * raw.samples[o + 1] + 114.0 * raw.samples[o + 2]) / 1000.0 * to8;
        }
        m.bits().data()[i] = luma >= 128.0;
    }
    return m;
}

Mask load_mask(const std::filesystem::path& path, Index expected_height, Index expected_width) {
    Mask m = load_mask(path);
    if (m.height() != expected_height || m.width() != expected_width)
        throw ShapeError(path.string() + ": mask is " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                         ", image is " + std::to_string(expected_height) + "x" + std::to_string(expected_width));
    return m;
}

Mask reflect_pad(const Mask& m, Index multiple) {
    if (multiple < 1) throw GeometryError("reflect_pad: multiple must be >= 1");
    const Index h = detail::round_up(m.height(), multiple), w = detail::round_up(m.width(), multiple);
    Mask out = Mask::empty(h, w);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            out.set(y, x, m.observed(detail::reflect_index(y, m.height()), detail::reflect_index(x, m.width())));
    return out;
}

}  // namespace qinpaint::imaging

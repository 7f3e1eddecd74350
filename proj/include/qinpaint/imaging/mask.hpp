#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qinpaint/imaging/image.hpp"
#include "qinpaint/qtensor.hpp"

namespace qinpaint::imaging {

/// Per-pixel observation set: true marks an observed pixel. A missing pixel
/// loses all colour channels (and all quaternion components) together.
class Mask {
public:
    using Bits = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Mask() = default;
    Mask(Index height, Index width, bool observed = true) : bits_(Bits::Constant(height, width, observed)) {}
    explicit Mask(Bits bits) : bits_(std::move(bits)) {}

    static Mask full(Index h, Index w) { return Mask(h, w, true); }
    static Mask empty(Index h, Index w) { return Mask(h, w, false); }

    Index height() const { return bits_.rows(); }
    Index width() const { return bits_.cols(); }
    Index size() const { return bits_.size(); }

    bool observed(Index y, Index x) const { return bits_(y, x); }
    void set(Index y, Index x, bool v) { bits_(y, x) = v; }
    /// Observedness of flat pixel index y*width + x.
    bool observed(Index flat) const { return bits_.data()[flat]; }

    const Bits& bits() const { return bits_; }
    Bits& bits() { return bits_; }

    Index observed_count() const { return bits_.count(); }
    double sampling_rate() const {
        return size() == 0 ? 0.0 : static_cast<double>(observed_count()) / static_cast<double>(size());
    }

    friend bool operator==(const Mask& a, const Mask& b) {
        return a.height() == b.height() && a.width() == b.width() && (a.bits_ == b.bits_).all();
    }

private:
    Bits bits_;
};

/// P_Omega: copies observed entries (every channel, all four planes), zeroes the rest.
QTensor apply_mask(const QTensor& t, const Mask& m);

/// Zeroes every channel of unobserved pixels.
RgbImage apply_mask(const RgbImage& img, const Mask& m);

/// Exactly round(sr*h*w) observed pixels chosen uniformly without replacement.
Mask gen_random_mask(Index height, Index width, double sr, std::uint64_t seed);

enum class StructuralPattern { TextOverlay, ScratchLines };

StructuralPattern pattern_from_string(const std::string& name);
std::string to_string(StructuralPattern p);

/// Straight stroke between pixel centres (row, column coordinates).
struct Stroke {
    double y0, x0, y1, x1;
};

struct StructuralParams {
    // scratch-lines
    int lines = 8;
    double line_width = 3.0;
    // text-overlay
    std::string text = "QUATERNION";
    int glyph_scale = 2;    // pixels per font cell
    int line_gap = 6;       // blank pixels between text rows
    std::uint64_t seed = 0;
};

/// Marks every pixel whose centre lies within line_width/2 of a stroke as missing.
Mask rasterize_strokes(Index height, Index width, const std::vector<Stroke>& strokes, double line_width);

Mask gen_structural_mask(Index height, Index width, StructuralPattern pattern, const StructuralParams& params);

/// Grayscale PNG: observed pixels 255, missing 0.
void save_mask(const Mask& m, const std::filesystem::path& path);

/// Pixels with 8-bit luminance < 128 are missing. Colour files use Rec. 601 luma.
Mask load_mask(const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path, Index expected_height, Index expected_width);

/// Reflect-pads bottom and right to multiples of `multiple`, mirroring observedness.
Mask reflect_pad(const Mask& m, Index multiple);

}  // namespace qinpaint::imaging

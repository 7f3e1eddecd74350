#include "png_io.hpp"

#include <png.h>

#include <cerrno>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "qinpaint/errors.hpp"

namespace qinpaint::imaging::detail {

namespace {

// libpng reports errors through longjmp. Every function that calls into libpng
// installs its own jump target and only touches trivially destructible locals.
struct ErrorSlot {
    char message[256];
};

void on_error(png_structp png, png_const_charp msg) {
    auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
    std::snprintf(slot->message, sizeof slot->message, "%s", msg);
    png_longjmp(png, 1);
}

void on_warning(png_structp, png_const_charp) {}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
    std::FILE* f = std::fopen(path.c_str(), mode);
    if (!f) throw IoError(path.string() + ": " + std::strerror(errno));
    return File(f);
}

struct Header {
    png_uint_32 width;
    png_uint_32 height;
    int channels;
    int bit_depth;
    png_size_t rowbytes;
};

bool read_header(png_structp png, png_infop info, std::FILE* fp, Header* out) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    out->channels = png_get_channels(png, info);
    out->bit_depth = png_get_bit_depth(png, info);
    out->rowbytes = png_get_rowbytes(png, info);
    return true;
}

bool read_rows(png_structp png, png_infop info, png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    png_read_end(png, info);
    return true;
}

bool write_rows(png_structp png, png_infop info, std::FILE* fp, png_uint_32 w, png_uint_32 h, int color,
                png_bytepp rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, info);
    return true;
}

}  // namespace

RawPng read_png(const std::filesystem::path& path) {
    File fp = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError(path.string() + ": not a PNG file");

    ErrorSlot slot{};
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, on_error, on_warning);
    if (!png) throw IoError(path.string() + ": libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    Header h{};
    if (!info || !read_header(png, info, fp.get(), &h))
        throw IoError(path.string() + ": " + (slot.message[0] ? slot.message : "invalid PNG header"));
    if (h.channels != 1 && h.channels != 3)
        throw IoError(path.string() + ": unsupported channel layout (" + std::to_string(h.channels) + ")");

    std::vector<png_byte> buffer(h.rowbytes * h.height);
    std::vector<png_bytep> rows(h.height);
    for (png_uint_32 y = 0; y < h.height; ++y) rows[y] = buffer.data() + y * h.rowbytes;
    if (!read_rows(png, info, rows.data()))
        throw IoError(path.string() + ": " + (slot.message[0] ? slot.message : "corrupt PNG data"));

    RawPng raw;
    raw.width = h.width;
    raw.height = h.height;
    raw.channels = h.channels;
    raw.bit_depth = h.bit_depth;
    const std::size_t n = static_cast<std::size_t>(h.width) * h.height * h.channels;
    raw.samples.resize(n);
    if (h.bit_depth == 16) {
        for (png_uint_32 y = 0; y < h.height; ++y)
            for (std::size_t i = 0; i < std::size_t(h.width) * h.channels; ++i)
                raw.samples[y * h.width * h.channels + i] =
                    static_cast<std::uint16_t>((rows[y][2 * i] << 8) | rows[y][2 * i + 1]);
    } else {
        for (png_uint_32 y = 0; y < h.height; ++y)
            for (std::size_t i = 0; i < std::size_t(h.width) * h.channels; ++i)
                raw.samples[y * h.width * h.channels + i] = rows[y][i];
    }
    return raw;
}

void write_png(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height, int channels,
               const std::vector<std::uint8_t>& samples) {
    if (channels != 1 && channels != 3) throw std::invalid_argument("write_png: channels must be 1 or 3");
    if (samples.size() != std::size_t(width) * height * channels)
        throw std::invalid_argument("write_png: sample count does not match geometry");

    File fp = open_file(path, "wb");
    ErrorSlot slot{};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, on_error, on_warning);
    if (!png) throw IoError(path.string() + ": libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    std::vector<png_bytep> rows(height);
    for (std::uint32_t y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(samples.data() + std::size_t(y) * width * channels);
    const int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    if (!info || !write_rows(png, info, fp.get(), width, height, color, rows.data()))
        throw IoError(path.string() + ": " + (slot.message[0] ? slot.message : "PNG write failed"));
    if (std::fflush(fp.get()) != 0) throw IoError(path.string() + ": " + std::strerror(errno));
}

}  // namespace qinpaint::imaging::detail

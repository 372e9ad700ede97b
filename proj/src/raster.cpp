#include "wayfarer/raster.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <stdexcept>

namespace wayfarer {

namespace {

// 3x5 bitmaps for digits 0-9; each row is 3 bits, MSB on the left.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigitGlyphs = {{
    {0b111, 0b101, 0b101, 0b101, 0b111},
    {0b010, 0b110, 0b010, 0b010, 0b111},
    {0b111, 0b001, 0b111, 0b100, 0b111},
    {0b111, 0b001, 0b111, 0b001, 0b111},
    {0b101, 0b101, 0b111, 0b001, 0b001},
    {0b111, 0b100, 0b111, 0b001, 0b111},
    {0b111, 0b100, 0b111, 0b101, 0b111},
    {0b111, 0b001, 0b010, 0b010, 0b010},
    {0b111, 0b101, 0b111, 0b101, 0b111},
    {0b111, 0b101, 0b111, 0b001, 0b111},
}};

struct PngReadCursor {
    std::span<const std::uint8_t> data;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->data.size()) png_error(png, "truncated PNG");
    std::memcpy(out, cursor->data.data() + cursor->offset, length);
    cursor->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

}  // namespace

Raster::Raster(int w, int h, Rgb fill) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill.r;
        pixels[i + 1] = fill.g;
        pixels[i + 2] = fill.b;
    }
}

Rgb Raster::at(int x, int y) const {
    auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
}

void Raster::set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto i = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
}

void Raster::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width - 1);
    y1 = std::min(y1, height - 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) set(x, y, c);
    }
}

void Raster::outline_rect(int x0, int y0, int x1, int y1, Rgb c, int thickness) {
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0; x <= x1; ++x) {
            set(x, y0 + t, c);
            set(x, y1 - t, c);
        }
        for (int y = y0; y <= y1; ++y) {
            set(x0 + t, y, c);
            set(x1 - t, y, c);
        }
    }
}

std::pair<int, int> number_extent(int value, int scale) {
    auto digits = static_cast<int>(std::to_string(std::max(value, 0)).size());
    return {digits * 4 * scale - scale, 5 * scale};
}

void Raster::draw_number(int x, int y, int value, Rgb fg, int scale) {
    auto text = std::to_string(std::max(value, 0));
    int cursor = x;
    for (char ch : text) {
        const auto& glyph = kDigitGlyphs[static_cast<std::size_t>(ch - '0')];
        for (int row = 0; row < 5; ++row) {
            for (int col = 0; col < 3; ++col) {
                if (glyph[row] & (0b100 >> col)) {
                    fill_rect(cursor + col * scale, y + row * scale, cursor + (col + 1) * scale - 1,
                              y + (row + 1) * scale - 1, fg);
                }
            }
        }
        cursor += 4 * scale;
    }
}

void Raster::draw_crosshair(int cx, int cy, Rgb c, int arm) {
    for (int d = -arm; d <= arm; ++d) {
        set(cx + d, cy, c);
        set(cx, cy + d, c);
        set(cx + d, cy + 1, c);
        set(cx + 1, cy + d, c);
    }
}

std::vector<std::uint8_t> encode_png(const Raster& raster) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width), static_cast<png_uint_32>(raster.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < raster.height; ++y) {
        auto* row = const_cast<png_bytep>(raster.pixels.data() + static_cast<std::size_t>(y) * raster.width * 3);
        png_write_row(png, row);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Raster decode_png(std::span<const std::uint8_t> data) {
    if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) throw std::runtime_error("not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngReadCursor cursor{data, 0};
    Raster raster;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("PNG decoding failed");
    }
    png_set_read_fn(png, &cursor, png_read_from_span);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    raster.width = static_cast<int>(png_get_image_width(png, info));
    raster.height = static_cast<int>(png_get_image_height(png, info));
    raster.pixels.assign(static_cast<std::size_t>(raster.width) * raster.height * 3, 0);
    std::vector<png_bytep> rows(static_cast<std::size_t>(raster.height));
    for (int y = 0; y < raster.height; ++y) rows[y] = raster.pixels.data() + static_cast<std::size_t>(y) * raster.width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return raster;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    auto n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    std::string clean;
    clean.reserve(text.size());
    for (char c : text) {
        if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
    }
    if (clean.size() % 4 != 0) throw std::runtime_error("base64 length not a multiple of 4");
    std::vector<std::uint8_t> out(clean.size() / 4 * 3);
    auto n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                             static_cast<int>(clean.size()));
    if (n < 0) throw std::runtime_error("invalid base64");
    std::size_t padding = 0;
    if (!clean.empty() && clean.back() == '=') ++padding;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

}  // namespace wayfarer

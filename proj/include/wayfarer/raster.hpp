#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wayfarer {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Packed 8-bit RGB image, row-major, origin top-left.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    Raster() = default;
    Raster(int w, int h, Rgb fill = {255, 255, 255});

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
    void outline_rect(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1);
    // Draws a decimal number with a built-in 3x5 glyph set scaled by `scale`.
    void draw_number(int x, int y, int value, Rgb fg, int scale = 2);
    void draw_crosshair(int cx, int cy, Rgb c, int arm = 12);
};

using RasterHandle = std::shared_ptr<const Raster>;

// Size in pixels of the box draw_number covers for `value`.
std::pair<int, int> number_extent(int value, int scale = 2);

std::vector<std::uint8_t> encode_png(const Raster& raster);
// Throws std::runtime_error on malformed input.
Raster decode_png(std::span<const std::uint8_t> data);

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace wayfarer

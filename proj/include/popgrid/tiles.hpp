#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace popgrid {

// Dense stack of per-cell image tiles, one tile per grid cell, laid out in
// row-major cell order. Each tile is (y, x, band) row-major, u8. Cell
// geometry comes from the companion raster; the stack itself carries only
// dimensions, which is exactly what the PGTS file stores.
struct TileStack {
    int rows = 0;
    int cols = 0;
    int tile_h = 0;
    int tile_w = 0;
    int bands = 0;
    std::vector<std::uint8_t> pixels;

    TileStack() = default;
    TileStack(int rows_, int cols_, int th, int tw, int b)
        : rows(rows_),
          cols(cols_),
          tile_h(th),
          tile_w(tw),
          bands(b),
          pixels(static_cast<std::size_t>(rows_) * cols_ * th * tw * b, 0) {}

    std::size_t tile_size() const {
        return static_cast<std::size_t>(tile_h) * tile_w * bands;
    }

    std::uint8_t* tile(int i, int j) {
        return pixels.data() + (static_cast<std::size_t>(i) * cols + j) * tile_size();
    }
    const std::uint8_t* tile(int i, int j) const {
        return pixels.data() + (static_cast<std::size_t>(i) * cols + j) * tile_size();
    }

    bool operator==(const TileStack&) const = default;
};

// PGTS v1 binary codec: magic "PGTS", version u16, rows/cols/tile_h/tile_w/
// bands u32, then the pixel payload. All integers little-endian.
void write_tiles(const TileStack& stack, const std::filesystem::path& path);
TileStack read_tiles(const std::filesystem::path& path);

// Nearest-neighbor resample with pixel-center alignment:
// out(y,x,b) = src(floor((y+0.5)*h/th), floor((x+0.5)*w/tw), b).
std::vector<std::uint8_t> resample_tile(const std::uint8_t* src, int h, int w,
                                        int bands, int th, int tw);

// Resample every tile of a stack to th x tw.
TileStack resample_tiles(const TileStack& stack, int th, int tw);

}  // namespace popgrid

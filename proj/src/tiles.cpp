#include "popgrid/tiles.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "popgrid/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "PGTS/PGNN codecs assume a little-endian host");

namespace popgrid {

namespace {

constexpr char kMagic[4] = {'P', 'G', 'T', 'S'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
    out.write(reinterpret_cast<const char*>(&v), 2);
}
void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint16_t get_u16(std::istream& in) {
    std::uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}
std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void write_tiles(const TileStack& stack, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(kMagic, 4);
    put_u16(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(stack.rows));
    put_u32(out, static_cast<std::uint32_t>(stack.cols));
    put_u32(out, static_cast<std::uint32_t>(stack.tile_h));
    put_u32(out, static_cast<std::uint32_t>(stack.tile_w));
    put_u32(out, static_cast<std::uint32_t>(stack.bands));
    out.write(reinterpret_cast<const char*>(stack.pixels.data()),
              static_cast<std::streamsize>(stack.pixels.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

TileStack read_tiles(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open tile stack: " + path.string());

    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ParseError(ParseError::Kind::BadMagic, 0,
                         "not a PGTS file: " + path.string());
    }
    std::uint16_t version = get_u16(in);
    if (!in || version != kVersion) {
        throw ParseError(ParseError::Kind::BadVersion, 0,
                         "unsupported PGTS version " + std::to_string(version));
    }

    TileStack stack;
    stack.rows = static_cast<int>(get_u32(in));
    stack.cols = static_cast<int>(get_u32(in));
    stack.tile_h = static_cast<int>(get_u32(in));
    stack.tile_w = static_cast<int>(get_u32(in));
    stack.bands = static_cast<int>(get_u32(in));
    if (!in) throw ParseError(ParseError::Kind::Truncated, 0, "truncated PGTS header");

    std::uint64_t payload = static_cast<std::uint64_t>(stack.rows) * stack.cols *
                            stack.tile_h * stack.tile_w * stack.bands;
    stack.pixels.resize(payload);
    in.read(reinterpret_cast<char*>(stack.pixels.data()),
            static_cast<std::streamsize>(payload));
    if (static_cast<std::uint64_t>(in.gcount()) != payload) {
        throw ParseError(ParseError::Kind::Truncated, 0,
                         "truncated PGTS payload: expected " + std::to_string(payload) +
                             " bytes");
    }
    // Anything after the payload means the header lied about the shape.
    in.peek();
    if (!in.eof()) {
        throw ParseError(ParseError::Kind::DimensionMismatch, 0,
                         "trailing bytes after PGTS payload");
    }
    return stack;
}

std::vector<std::uint8_t> resample_tile(const std::uint8_t* src, int h, int w,
                                        int bands, int th, int tw) {
    if (h < 1 || w < 1 || bands < 1) throw DataError("resample source is empty");
    if (th < 1 || tw < 1) throw DataError("resample target dims must be >= 1");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(th) * tw * bands);
    for (int y = 0; y < th; ++y) {
        // floor((y + 0.5) * h / th) in exact integer arithmetic
        int sy = static_cast<int>((2LL * y + 1) * h / (2LL * th));
        for (int x = 0; x < tw; ++x) {
            int sx = static_cast<int>((2LL * x + 1) * w / (2LL * tw));
            const std::uint8_t* sp = src + (static_cast<std::size_t>(sy) * w + sx) * bands;
            std::uint8_t* dp = out.data() + (static_cast<std::size_t>(y) * tw + x) * bands;
            std::memcpy(dp, sp, static_cast<std::size_t>(bands));
        }
    }
    return out;
}

TileStack resample_tiles(const TileStack& stack, int th, int tw) {
    TileStack out(stack.rows, stack.cols, th, tw, stack.bands);
    for (int i = 0; i < stack.rows; ++i) {
        for (int j = 0; j < stack.cols; ++j) {
            auto t = resample_tile(stack.tile(i, j), stack.tile_h, stack.tile_w,
                                   stack.bands, th, tw);
            std::memcpy(out.tile(i, j), t.data(), t.size());
        }
    }
    return out;
}

}  // namespace popgrid

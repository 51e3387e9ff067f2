#include "popgrid/raster_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "popgrid/textio.hpp"

namespace popgrid {

namespace {

void write_header(std::ostream& out, const GeoTransform& geo) {
    out << "ncols " << geo.cols << "\n";
    out << "nrows " << geo.rows << "\n";
    out << "xllcorner " << format_double(geo.origin_lon) << "\n";
    out << "yllcorner " << format_double(geo.south_lat) << "\n";
    out << "cellsize " << format_double(geo.cell_size) << "\n";
    out << "NODATA_value " << format_int(static_cast<long long>(kAscNoData)) << "\n";
}

template <typename T, typename Fmt>
void write_impl(const Grid<T>& grid, const std::filesystem::path& path, Fmt fmt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    write_header(out, grid.geo);
    std::string line;
    for (int i = 0; i < grid.geo.rows; ++i) {
        line.clear();
        for (int j = 0; j < grid.geo.cols; ++j) {
            if (j) line += ' ';
            if (grid.is_nodata(i, j)) {
                line += format_int(static_cast<long long>(kAscNoData));
            } else {
                line += fmt(grid.at(i, j));
            }
        }
        line += '\n';
        out << line;
    }
    if (!out) throw DataError("write failed: " + path.string());
}

// One header line "key value"; key compared case-insensitively.
double parse_header_line(std::istream& in, const char* key, int line_no) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError(ParseError::Kind::MalformedHeader, line_no,
                         std::string("missing header line '") + key + "'");
    }
    auto toks = split_ws(line);
    if (toks.size() != 2) {
        throw ParseError(ParseError::Kind::MalformedHeader, line_no,
                         "expected 'key value', got '" + line + "'");
    }
    std::string k(toks[0]);
    std::string want(key);
    if (k.size() != want.size()) {
        throw ParseError(ParseError::Kind::MalformedHeader, line_no,
                         "expected header key '" + want + "', got '" + k + "'");
    }
    for (std::size_t c = 0; c < k.size(); ++c) {
        if (std::tolower(static_cast<unsigned char>(k[c])) !=
            std::tolower(static_cast<unsigned char>(want[c]))) {
            throw ParseError(ParseError::Kind::MalformedHeader, line_no,
                             "expected header key '" + want + "', got '" + k + "'");
        }
    }
    auto v = parse_double(toks[1]);
    if (!v) {
        throw ParseError(ParseError::Kind::BadToken, line_no,
                         "unparsable header value '" + std::string(toks[1]) + "'");
    }
    return *v;
}

}  // namespace

void write_grid(const PopulationGrid& grid, const std::filesystem::path& path) {
    write_impl(grid, path, [](double v) { return format_double(v); });
}

void write_grid(const Grid<std::int32_t>& grid, const std::filesystem::path& path) {
    write_impl(grid, path, [](std::int32_t v) { return format_int(v); });
}

void write_grid(const ClassGrid& grid, const std::filesystem::path& path) {
    write_grid(static_cast<const Grid<std::int32_t>&>(grid), path);
}

Grid<double> read_raw_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open raster: " + path.string());

    double ncols = parse_header_line(in, "ncols", 1);
    double nrows = parse_header_line(in, "nrows", 2);
    double xll = parse_header_line(in, "xllcorner", 3);
    double yll = parse_header_line(in, "yllcorner", 4);
    double cell = parse_header_line(in, "cellsize", 5);
    double nodata = parse_header_line(in, "NODATA_value", 6);

    if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
        throw ParseError(ParseError::Kind::MalformedHeader, 1, "invalid grid dimensions");
    }
    if (!(cell > 0)) {
        throw ParseError(ParseError::Kind::MalformedHeader, 5, "cellsize must be positive");
    }

    GeoTransform geo;
    geo.origin_lon = xll;
    geo.south_lat = yll;
    geo.cell_size = cell;
    geo.rows = static_cast<int>(nrows);
    geo.cols = static_cast<int>(ncols);

    Grid<double> grid(geo);
    std::size_t want = grid.values.size();
    std::size_t got = 0;
    std::string line;
    int line_no = 6;
    while (std::getline(in, line)) {
        ++line_no;
        for (auto tok : split_ws(line)) {
            if (got >= want) {
                throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                                 "more values than nrows*ncols");
            }
            auto v = parse_double(tok);
            if (!v) {
                throw ParseError(ParseError::Kind::BadToken, line_no,
                                 "unparsable token '" + std::string(tok) + "'");
            }
            if (*v == nodata) {
                grid.nodata[got] = 1;
                grid.values[got] = 0;
            } else {
                grid.values[got] = *v;
            }
            ++got;
        }
    }
    if (got != want) {
        throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                         "expected " + std::to_string(want) + " values, got " +
                             std::to_string(got));
    }
    return grid;
}

PopulationGrid read_population_grid(const std::filesystem::path& path) {
    Grid<double> g = read_raw_grid(path);
    for (std::size_t k = 0; k < g.values.size(); ++k) {
        if (!g.nodata[k] && !(g.values[k] >= 0.0)) {
            throw DataError("negative population value in " + path.string());
        }
    }
    return g;
}

ClassGrid read_class_grid(const std::filesystem::path& path) {
    Grid<double> g = read_raw_grid(path);
    ClassGrid out(g.geo);
    out.nodata = g.nodata;
    std::int32_t k_max = 0;
    for (std::size_t k = 0; k < g.values.size(); ++k) {
        if (g.nodata[k]) continue;
        double v = g.values[k];
        if (v < 0 || v != std::floor(v)) {
            throw DataError("class raster has a non-integer or negative value in " +
                            path.string());
        }
        out.values[k] = static_cast<std::int32_t>(v);
        if (out.values[k] > k_max) k_max = out.values[k];
    }
    out.k_max = k_max;
    return out;
}

}  // namespace popgrid

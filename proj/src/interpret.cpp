#include "popgrid/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "popgrid/textio.hpp"

namespace popgrid {

Grid<double> probability_map(const ProbGrid& probs, int cls) {
    if (cls < 0 || cls >= probs.n_classes)
        throw DataError("class " + std::to_string(cls) + " out of range [0, " +
                        std::to_string(probs.n_classes) + ")");
    Grid<double> out(probs.geo);
    out.nodata = probs.nodata;
    for (int i = 0; i < probs.geo.rows; ++i)
        for (int j = 0; j < probs.geo.cols; ++j)
            if (!probs.is_nodata(i, j)) out.at(i, j) = probs.cell(i, j)[cls];
    return out;
}

TopKResult top_k_tiles(const ProbGrid& probs, const ClassGrid& truth, int cls, int k) {
    if (cls < 0 || cls >= probs.n_classes)
        throw DataError("class " + std::to_string(cls) + " out of range");
    if (!(truth.geo == probs.geo))
        throw DataError("truth grid and probability grid are misaligned");

    std::vector<TopTile> candidates;
    for (int i = 0; i < probs.geo.rows; ++i) {
        for (int j = 0; j < probs.geo.cols; ++j) {
            if (probs.is_nodata(i, j) || truth.is_nodata(i, j)) continue;
            if (truth.at(i, j) != cls) continue;
            const double* vec = probs.cell(i, j);
            int argmax = 0;
            for (int c = 1; c < probs.n_classes; ++c)
                if (vec[c] > vec[argmax]) argmax = c;
            if (argmax != cls) continue;
            candidates.push_back({i, j, vec[cls]});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const TopTile& a, const TopTile& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    TopKResult res;
    res.short_of_k = static_cast<int>(candidates.size()) < k;
    candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(k)));
    res.tiles = std::move(candidates);
    return res;
}

ErrorGrid error_map(const ClassGrid& truth, const ClassGrid& predicted) {
    if (!(truth.geo == predicted.geo))
        throw DataError("truth and predicted class grids are misaligned");
    ErrorGrid out(truth.geo);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        if (truth.nodata[k] || predicted.nodata[k]) {
            out.nodata[k] = 1;
        } else {
            out.values[k] = predicted.values[k] - truth.values[k];
        }
    }
    return out;
}

ErrorSummary summarize_errors(const ErrorGrid& errors, int top_n) {
    ErrorSummary summary;
    const int rows = errors.geo.rows;
    const int cols = errors.geo.cols;
    for (std::size_t k = 0; k < errors.values.size(); ++k) {
        if (errors.nodata[k]) continue;
        if (errors.values[k] > 0)
            ++summary.n_over;
        else if (errors.values[k] < 0)
            ++summary.n_under;
        else
            ++summary.n_zero;
    }

    std::vector<std::uint8_t> seen(errors.values.size(), 0);
    std::vector<ErrorComponent> components;
    std::vector<int> stack;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            std::size_t flat = static_cast<std::size_t>(i) * cols + j;
            if (seen[flat] || errors.nodata[flat] || errors.values[flat] == 0) continue;
            int sign = errors.values[flat] > 0 ? 1 : -1;
            ErrorComponent comp;
            comp.sign = sign;
            comp.min_i = comp.max_i = comp.peak_i = i;
            comp.min_j = comp.max_j = comp.peak_j = j;
            stack.assign(1, static_cast<int>(flat));
            seen[flat] = 1;
            while (!stack.empty()) {
                int cur = stack.back();
                stack.pop_back();
                int ci = cur / cols;
                int cj = cur % cols;
                int e = errors.values[static_cast<std::size_t>(cur)];
                ++comp.size;
                comp.sum_abs += std::abs(e);
                comp.min_i = std::min(comp.min_i, ci);
                comp.max_i = std::max(comp.max_i, ci);
                comp.min_j = std::min(comp.min_j, cj);
                comp.max_j = std::max(comp.max_j, cj);
                if (std::abs(e) > std::abs(comp.peak_error)) {
                    comp.peak_error = e;
                    comp.peak_i = ci;
                    comp.peak_j = cj;
                }
                const int di[4] = {-1, 1, 0, 0};
                const int dj[4] = {0, 0, -1, 1};
                for (int s = 0; s < 4; ++s) {
                    int ni = ci + di[s];
                    int nj = cj + dj[s];
                    if (ni < 0 || ni >= rows || nj < 0 || nj >= cols) continue;
                    std::size_t nflat = static_cast<std::size_t>(ni) * cols + nj;
                    if (seen[nflat] || errors.nodata[nflat]) continue;
                    int ne = errors.values[nflat];
                    if (ne == 0 || (ne > 0 ? 1 : -1) != sign) continue;
                    seen[nflat] = 1;
                    stack.push_back(static_cast<int>(nflat));
                }
            }
            components.push_back(comp);
        }
    }
    std::sort(components.begin(), components.end(),
              [](const ErrorComponent& a, const ErrorComponent& b) {
                  if (a.sum_abs != b.sum_abs) return a.sum_abs > b.sum_abs;
                  if (a.min_i != b.min_i) return a.min_i < b.min_i;
                  return a.min_j < b.min_j;
              });
    if (static_cast<int>(components.size()) > top_n) components.resize(static_cast<std::size_t>(top_n));
    summary.components = std::move(components);
    return summary;
}

void write_pgm(const std::filesystem::path& path, const Grid<double>& grid) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "P2\n" << grid.geo.cols << " " << grid.geo.rows << "\n255\n";
    for (int i = 0; i < grid.geo.rows; ++i) {
        for (int j = 0; j < grid.geo.cols; ++j) {
            int v = 0;
            if (!grid.is_nodata(i, j)) {
                double clamped = std::clamp(grid.at(i, j), 0.0, 1.0);
                v = static_cast<int>(std::lround(clamped * 255.0));
            }
            out << v << (j + 1 == grid.geo.cols ? "\n" : " ");
        }
    }
}

void write_ppm_diverging(const std::filesystem::path& path, const ErrorGrid& errors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    int max_abs = 1;
    for (std::size_t k = 0; k < errors.values.size(); ++k)
        if (!errors.nodata[k]) max_abs = std::max(max_abs, std::abs(errors.values[k]));
    out << "P3\n" << errors.geo.cols << " " << errors.geo.rows << "\n255\n";
    for (int i = 0; i < errors.geo.rows; ++i) {
        for (int j = 0; j < errors.geo.cols; ++j) {
            int r = 0;
            int g = 0;
            int b = 0;
            if (!errors.is_nodata(i, j)) {
                int e = errors.at(i, j);
                int s = static_cast<int>(std::lround(
                    255.0 * std::abs(e) / static_cast<double>(max_abs)));
                if (e > 0) {  // over-prediction: red
                    r = 255;
                    g = b = 255 - s;
                } else if (e < 0) {  // under-prediction: blue
                    b = 255;
                    r = g = 255 - s;
                } else {
                    r = g = b = 255;
                }
            }
            out << r << " " << g << " " << b << (j + 1 == errors.geo.cols ? "\n" : "  ");
        }
    }
}

void write_tile_pgm(const std::filesystem::path& path, const std::uint8_t* tile,
                    int tile_h, int tile_w, int bands) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "P2\n" << tile_w << " " << tile_h << "\n255\n";
    for (int y = 0; y < tile_h; ++y) {
        for (int x = 0; x < tile_w; ++x) {
            int v = tile[(static_cast<std::size_t>(y) * tile_w + x) * bands];
            out << v << (x + 1 == tile_w ? "\n" : " ");
        }
    }
}

void write_topk_csv(const std::filesystem::path& path, const TopKResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "rank,i,j,confidence\n";
    for (std::size_t r = 0; r < result.tiles.size(); ++r) {
        const TopTile& t = result.tiles[r];
        out << (r + 1) << ',' << t.i << ',' << t.j << ',' << format_double(t.confidence)
            << "\n";
    }
}

void write_error_components_csv(const std::filesystem::path& path,
                                const ErrorSummary& summary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "rank,size,sum_abs,sign,min_i,min_j,max_i,max_j,peak_i,peak_j,peak_error\n";
    for (std::size_t r = 0; r < summary.components.size(); ++r) {
        const ErrorComponent& c = summary.components[r];
        out << (r + 1) << ',' << c.size << ',' << c.sum_abs << ',' << c.sign << ','
            << c.min_i << ',' << c.min_j << ',' << c.max_i << ',' << c.max_j << ','
            << c.peak_i << ',' << c.peak_j << ',' << c.peak_error << "\n";
    }
}

}  // namespace popgrid

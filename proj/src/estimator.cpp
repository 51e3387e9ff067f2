#include "popgrid/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "popgrid/nn/train.hpp"
#include "popgrid/raster_io.hpp"
#include "popgrid/textio.hpp"

namespace popgrid {

void predict_region(const nn::Checkpoint& ckpt, const TileStack& tiles,
                    const Rect& region, PredictOutput& out, int batch_size) {
    if (tiles.tile_h != ckpt.spec.in_h || tiles.tile_w != ckpt.spec.in_w ||
        tiles.bands != ckpt.spec.in_bands)
        throw DataError("tile dimensions do not match the checkpoint input");
    nn::Network net(ckpt.spec);
    net.params() = ckpt.params;
    net.bn_state() = ckpt.bn_state;
    const int k = ckpt.spec.n_classes;

    std::vector<std::pair<int, int>> cells;
    for (int i = region.row0; i < region.row1; ++i)
        for (int j = region.col0; j < region.col1; ++j)
            if (!out.probs.is_nodata(i, j)) cells.emplace_back(i, j);

    for (std::size_t start = 0; start < cells.size();
         start += static_cast<std::size_t>(batch_size)) {
        std::size_t count = std::min<std::size_t>(batch_size, cells.size() - start);
        nn::Tensor batch =
            nn::make_batch(tiles, cells, start, count, ckpt.band_min, ckpt.band_max);
        nn::Tensor probs = net.forward(batch, nn::Mode::Infer);
        for (std::size_t s = 0; s < count; ++s) {
            const auto& [i, j] = cells[start + s];
            const double* row = probs.data.data() + s * static_cast<std::size_t>(k);
            std::copy(row, row + k, out.probs.cell(i, j));
            int argmax = 0;
            for (int c = 1; c < k; ++c)
                if (row[c] > row[argmax]) argmax = c;  // ties keep the lower class
            out.classes.at(i, j) = argmax;
            if (argmax > out.classes.k_max) out.classes.k_max = argmax;
        }
    }
}

PredictOutput predict_grid(const nn::Checkpoint& ckpt, const TileStack& tiles,
                           const GeoTransform& geo,
                           const std::vector<std::uint8_t>& nodata_mask,
                           int batch_size) {
    if (geo.rows != tiles.rows || geo.cols != tiles.cols)
        throw DataError("tile stack and reference grid dimensions disagree");
    PredictOutput out;
    out.probs = ProbGrid(geo, ckpt.spec.n_classes);
    out.probs.nodata = nodata_mask;
    out.classes = ClassGrid(geo);
    out.classes.nodata = nodata_mask;
    predict_region(ckpt, tiles, Rect{0, geo.rows, 0, geo.cols}, out, batch_size);
    return out;
}

void save_prob_grid(const std::filesystem::path& dir, const ProbGrid& grid) {
    std::filesystem::create_directories(dir);
    for (int c = 0; c < grid.n_classes; ++c) {
        PopulationGrid layer(grid.geo);
        layer.nodata = grid.nodata;
        for (int i = 0; i < grid.geo.rows; ++i)
            for (int j = 0; j < grid.geo.cols; ++j)
                if (!grid.is_nodata(i, j)) layer.at(i, j) = grid.cell(i, j)[c];
        char name[32];
        std::snprintf(name, sizeof(name), "prob_c%02d.asc", c);
        write_grid(layer, dir / name);
    }
}

ProbGrid load_prob_grid(const std::filesystem::path& dir) {
    std::vector<Grid<double>> layers;
    for (int c = 0;; ++c) {
        char name[32];
        std::snprintf(name, sizeof(name), "prob_c%02d.asc", c);
        auto path = dir / name;
        if (!std::filesystem::exists(path)) break;
        layers.push_back(read_raw_grid(path));
    }
    if (layers.empty())
        throw DataError("no prob_cNN.asc layers found under " + dir.string());
    ProbGrid grid(layers[0].geo, static_cast<int>(layers.size()));
    grid.nodata = layers[0].nodata;
    for (std::size_t c = 1; c < layers.size(); ++c) {
        if (!(layers[c].geo == layers[0].geo) || layers[c].nodata != layers[0].nodata)
            throw DataError("probability layers disagree on geometry or mask");
    }
    for (int i = 0; i < grid.geo.rows; ++i) {
        for (int j = 0; j < grid.geo.cols; ++j) {
            if (grid.is_nodata(i, j)) continue;
            double sum = 0.0;
            for (std::size_t c = 0; c < layers.size(); ++c) {
                double v = layers[c].at(i, j);
                grid.cell(i, j)[c] = v;
                sum += v;
            }
            if (std::fabs(sum - 1.0) > 1e-6)
                throw DataError("probability vector at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") sums to " + format_double(sum));
        }
    }
    return grid;
}

namespace {

bool on_segment(double px, double py, double ax, double ay, double bx, double by) {
    double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
    if (cross != 0.0) return false;
    double dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay);
    double len2 = (bx - ax) * (bx - ax) + (by - ay) * (by - ay);
    return dot >= 0.0 && dot <= len2;
}

}  // namespace

bool point_in_polygon(double lon, double lat, const std::vector<Ring>& rings) {
    // Boundary counts as inside; interior by even-odd ray casting.
    for (const auto& ring : rings) {
        for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
            if (on_segment(lon, lat, ring[k].first, ring[k].second, ring[k + 1].first,
                           ring[k + 1].second))
                return true;
        }
    }
    bool inside = false;
    for (const auto& ring : rings) {
        for (std::size_t k = 0; k + 1 < ring.size(); ++k) {
            double ax = ring[k].first;
            double ay = ring[k].second;
            double bx = ring[k + 1].first;
            double by = ring[k + 1].second;
            if ((ay > lat) != (by > lat)) {
                double t = (lat - ay) / (by - ay);
                double x = ax + t * (bx - ax);
                if (x > lon) inside = !inside;
            }
        }
    }
    return inside;
}

CountyAssignment assign_counties(const GeoTransform& geo,
                                 const std::vector<CountyFeature>& counties) {
    for (const auto& county : counties) {
        if (county.rings.empty())
            throw DataError("county '" + county.id + "' has no rings");
        for (const auto& ring : county.rings)
            if (ring.size() < 4 || ring.front() != ring.back())
                throw DataError("county '" + county.id + "' has an unclosed ring");
    }

    struct Bbox {
        double min_lon, max_lon, min_lat, max_lat;
    };
    std::vector<Bbox> boxes;
    boxes.reserve(counties.size());
    for (const auto& county : counties) {
        Bbox b{1e300, -1e300, 1e300, -1e300};
        for (const auto& ring : county.rings) {
            for (const auto& [lon, lat] : ring) {
                b.min_lon = std::min(b.min_lon, lon);
                b.max_lon = std::max(b.max_lon, lon);
                b.min_lat = std::min(b.min_lat, lat);
                b.max_lat = std::max(b.max_lat, lat);
            }
        }
        boxes.push_back(b);
    }

    CountyAssignment out;
    for (const auto& county : counties) out.ids.push_back(county.id);
    out.cell_county.assign(static_cast<std::size_t>(geo.cell_count()), -1);
    out.cells.resize(counties.size());

    const int rows = geo.rows;
    const int cols = geo.cols;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            auto [lon, lat] = cell_centroid(geo, i, j);
            for (std::size_t c = 0; c < counties.size(); ++c) {
                const Bbox& b = boxes[c];
                if (lon < b.min_lon || lon > b.max_lon || lat < b.min_lat ||
                    lat > b.max_lat)
                    continue;
                if (point_in_polygon(lon, lat, counties[c].rings)) {
                    out.cell_county[static_cast<std::size_t>(i) * cols + j] =
                        static_cast<int>(c);
                    break;  // earliest county in input order wins
                }
            }
        }
    }
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            int c = out.cell_county[static_cast<std::size_t>(i) * cols + j];
            if (c >= 0) out.cells[static_cast<std::size_t>(c)].push_back(i * cols + j);
        }
    return out;
}

std::vector<double> aggregate_convraw(const ClassGrid& classes,
                                      const CountyAssignment& assignment) {
    if (assignment.cell_county.size() != classes.values.size())
        throw DataError("assignment and class grid dimensions disagree");
    std::vector<double> out(assignment.ids.size(), 0.0);
    for (std::size_t c = 0; c < assignment.cells.size(); ++c) {
        double sum = 0.0;
        for (int flat : assignment.cells[c]) {
            if (classes.nodata[static_cast<std::size_t>(flat)]) continue;
            sum += unbin_midpoint(classes.values[static_cast<std::size_t>(flat)]);
        }
        out[c] = sum;
    }
    return out;
}

CountyFeatureVectors county_features(const ProbGrid& probs,
                                     const CountyAssignment& assignment) {
    if (assignment.cell_county.size() != probs.nodata.size())
        throw DataError("assignment and probability grid dimensions disagree");
    CountyFeatureVectors out;
    out.ids = assignment.ids;
    out.n_classes = probs.n_classes;
    out.features.assign(assignment.ids.size() * static_cast<std::size_t>(probs.n_classes),
                        0.0);
    out.cell_counts.assign(assignment.ids.size(), 0.0);
    for (std::size_t c = 0; c < assignment.cells.size(); ++c) {
        double* feat = out.features.data() + c * static_cast<std::size_t>(probs.n_classes);
        for (int flat : assignment.cells[c]) {
            if (probs.nodata[static_cast<std::size_t>(flat)]) continue;
            const double* vec =
                probs.probs.data() +
                static_cast<std::size_t>(flat) * static_cast<std::size_t>(probs.n_classes);
            for (int k = 0; k < probs.n_classes; ++k) feat[k] += vec[k];
            out.cell_counts[c] += 1.0;
        }
    }
    return out;
}

void write_features_csv(const std::filesystem::path& path,
                        const CountyFeatureVectors& features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "id";
    for (int k = 0; k < features.n_classes; ++k) out << ",f" << k;
    out << ",cells\n";
    for (std::size_t c = 0; c < features.ids.size(); ++c) {
        out << features.ids[c];
        const double* feat =
            features.features.data() + c * static_cast<std::size_t>(features.n_classes);
        for (int k = 0; k < features.n_classes; ++k) out << ',' << format_double(feat[k]);
        out << ',' << format_double(features.cell_counts[c]) << "\n";
    }
}

CountyFeatureVectors read_features_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open features CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(ParseError::Kind::MalformedHeader, 1, "empty features CSV");
    auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "id" || header.back() != "cells")
        throw ParseError(ParseError::Kind::MalformedHeader, 1,
                         "expected header 'id,f0,...,cells'");
    CountyFeatureVectors out;
    out.n_classes = static_cast<int>(header.size()) - 2;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw ParseError(ParseError::Kind::DimensionMismatch, line_no,
                             "field count differs from header");
        out.ids.emplace_back(fields[0]);
        for (int k = 0; k < out.n_classes; ++k) {
            auto v = parse_double(fields[static_cast<std::size_t>(k) + 1]);
            if (!v)
                throw ParseError(ParseError::Kind::BadToken, line_no,
                                 "unparsable feature value");
            out.features.push_back(*v);
        }
        auto cellv = parse_double(fields.back());
        if (!cellv)
            throw ParseError(ParseError::Kind::BadToken, line_no, "unparsable cell count");
        out.cell_counts.push_back(*cellv);
    }
    return out;
}

ConvAugResult convaug(const CountyFeatureVectors& train_features,
                      const std::map<std::string, double>& train_truths,
                      const CountyFeatureVectors& test_features, const GBRTConfig& cfg,
                      bool include_cell_count) {
    if (train_features.n_classes != test_features.n_classes)
        throw DataError("train and test feature dimensions disagree");
    if (train_features.ids.size() != train_truths.size())
        throw DataError("county id sets differ between features and truths");
    for (const auto& id : train_features.ids)
        if (!train_truths.count(id))
            throw DataError("no truth value for county '" + id + "'");

    const int base_d = train_features.n_classes;
    const int d = base_d + (include_cell_count ? 1 : 0);
    const int n = static_cast<int>(train_features.ids.size());

    auto assemble = [&](const CountyFeatureVectors& f, std::size_t row) {
        std::vector<double> x(static_cast<std::size_t>(d));
        const double* src = f.features.data() + row * static_cast<std::size_t>(base_d);
        std::copy(src, src + base_d, x.data());
        if (include_cell_count) x[static_cast<std::size_t>(base_d)] = f.cell_counts[row];
        return x;
    };

    std::vector<double> X;
    X.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        auto x = assemble(train_features, static_cast<std::size_t>(r));
        X.insert(X.end(), x.begin(), x.end());
        y[static_cast<std::size_t>(r)] =
            train_truths.at(train_features.ids[static_cast<std::size_t>(r)]);
    }

    ConvAugResult res;
    res.model = gbrt_fit(X, n, d, y, cfg);
    res.ids = test_features.ids;
    for (std::size_t r = 0; r < test_features.ids.size(); ++r) {
        auto x = assemble(test_features, r);
        res.estimates.push_back(res.model.predict(x));
    }
    return res;
}

MetricsResult compute_metrics(const std::vector<double>& estimates,
                              const std::vector<double>& truths) {
    if (estimates.empty() || estimates.size() != truths.size())
        throw DataError("metrics need equal-length nonempty estimate/truth vectors");

    MetricsResult res;
    res.n = static_cast<int>(estimates.size());

    std::vector<double> abs_err(estimates.size());
    double sum_abs = 0.0;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        abs_err[k] = std::fabs(estimates[k] - truths[k]);
        sum_abs += abs_err[k];
    }
    res.mean_ae = sum_abs / static_cast<double>(estimates.size());

    std::sort(abs_err.begin(), abs_err.end());
    std::size_t m = abs_err.size();
    res.median_ae = (m % 2 == 1) ? abs_err[m / 2]
                                 : (abs_err[m / 2 - 1] + abs_err[m / 2]) / 2.0;

    double mean_truth = 0.0;
    for (double t : truths) mean_truth += t;
    mean_truth /= static_cast<double>(truths.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t k = 0; k < truths.size(); ++k) {
        ss_res += (truths[k] - estimates[k]) * (truths[k] - estimates[k]);
        ss_tot += (truths[k] - mean_truth) * (truths[k] - mean_truth);
    }
    if (ss_tot > 0.0) res.r2 = 1.0 - ss_res / ss_tot;

    double mape_sum = 0.0;
    int mape_n = 0;
    for (std::size_t k = 0; k < truths.size(); ++k) {
        if (truths[k] > 0.0) {
            mape_sum += std::fabs(estimates[k] - truths[k]) / truths[k];
            ++mape_n;
        } else {
            ++res.mape_excluded;
        }
    }
    if (mape_n > 0) res.mape = 100.0 * mape_sum / static_cast<double>(mape_n);
    return res;
}

UniformBaseline baseline_uniform(const std::vector<double>& county_truths,
                                 const CountyAssignment& assignment,
                                 const GeoTransform& geo) {
    if (county_truths.size() != assignment.ids.size())
        throw DataError("county truth count differs from assignment");
    UniformBaseline out;
    out.surface = PopulationGrid(geo);
    // Cells outside every county carry no estimate.
    for (std::size_t k = 0; k < assignment.cell_county.size(); ++k)
        if (assignment.cell_county[k] < 0) out.surface.nodata[k] = 1;
    for (std::size_t c = 0; c < assignment.cells.size(); ++c) {
        if (assignment.cells[c].empty()) {
            out.undistributable.push_back(assignment.ids[c]);
            continue;
        }
        double share =
            county_truths[c] / static_cast<double>(assignment.cells[c].size());
        for (int flat : assignment.cells[c])
            out.surface.values[static_cast<std::size_t>(flat)] = share;
    }
    return out;
}

std::vector<double> prior_probabilities(const ClassHistogram& hist) {
    if (hist.total <= 0) throw DataError("empty histogram");
    std::vector<double> out(hist.counts.size());
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        out[k] = static_cast<double>(hist.counts[k]) / static_cast<double>(hist.total);
    return out;
}

}  // namespace popgrid

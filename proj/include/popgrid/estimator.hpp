#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "popgrid/gbrt.hpp"
#include "popgrid/geojson.hpp"
#include "popgrid/grid.hpp"
#include "popgrid/nn/checkpoint.hpp"
#include "popgrid/sampler.hpp"
#include "popgrid/tiles.hpp"

namespace popgrid {

// Per-cell softmax vectors over population classes.
struct ProbGrid {
    GeoTransform geo;
    int n_classes = 0;
    std::vector<double> probs;  // rows * cols * n_classes
    std::vector<std::uint8_t> nodata;

    ProbGrid() = default;
    ProbGrid(const GeoTransform& g, int k)
        : geo(g),
          n_classes(k),
          probs(static_cast<std::size_t>(g.cell_count()) * k, 0.0),
          nodata(static_cast<std::size_t>(g.cell_count()), 0) {}

    double* cell(int i, int j) {
        return probs.data() +
               (static_cast<std::size_t>(i) * geo.cols + j) * static_cast<std::size_t>(n_classes);
    }
    const double* cell(int i, int j) const {
        return probs.data() +
               (static_cast<std::size_t>(i) * geo.cols + j) * static_cast<std::size_t>(n_classes);
    }
    bool is_nodata(int i, int j) const {
        return nodata[static_cast<std::size_t>(i) * geo.cols + j] != 0;
    }
};

struct PredictOutput {
    ProbGrid probs;
    ClassGrid classes;  // argmax, ties toward the lower class
};

// Run one model over a region of the grid (the whole grid by default).
// mask/geo come from the companion raster; nodata cells propagate.
PredictOutput predict_grid(const nn::Checkpoint& ckpt, const TileStack& tiles,
                           const GeoTransform& geo,
                           const std::vector<std::uint8_t>& nodata_mask,
                           int batch_size = 256);
void predict_region(const nn::Checkpoint& ckpt, const TileStack& tiles,
                    const Rect& region, PredictOutput& out, int batch_size = 256);

// Per-class probability rasters prob_cNN.asc under a directory.
void save_prob_grid(const std::filesystem::path& dir, const ProbGrid& grid);
ProbGrid load_prob_grid(const std::filesystem::path& dir);

// Cell-centroid-in-polygon county assignment (even-odd ray casting). A
// centroid exactly on a boundary goes to the earliest county in input order;
// cells in no county map to -1.
struct CountyAssignment {
    std::vector<std::string> ids;         // county order as given
    std::vector<int> cell_county;         // rows*cols, -1 = none
    std::vector<std::vector<int>> cells;  // per county: flat cell indices
};

CountyAssignment assign_counties(const GeoTransform& geo,
                                 const std::vector<CountyFeature>& counties);

bool point_in_polygon(double lon, double lat, const std::vector<Ring>& rings);

// CONVRAW: sum of class-bin midpoints over member cells; nodata excluded.
std::vector<double> aggregate_convraw(const ClassGrid& classes,
                                      const CountyAssignment& assignment);

// Per-county elementwise sums of member-cell probability vectors, plus the
// member cell count (optional extra regression feature).
struct CountyFeatureVectors {
    std::vector<std::string> ids;
    int n_classes = 0;
    std::vector<double> features;  // counties x n_classes
    std::vector<double> cell_counts;
};

CountyFeatureVectors county_features(const ProbGrid& probs,
                                     const CountyAssignment& assignment);

void write_features_csv(const std::filesystem::path& path,
                        const CountyFeatureVectors& features);
CountyFeatureVectors read_features_csv(const std::filesystem::path& path);

// CONVAUG: fit GBRT on year-0 (features, truth), predict year-1 counties.
struct ConvAugResult {
    GBRTModel model;
    std::vector<std::string> ids;  // test county order
    std::vector<double> estimates;
};

ConvAugResult convaug(const CountyFeatureVectors& train_features,
                      const std::map<std::string, double>& train_truths,
                      const CountyFeatureVectors& test_features, const GBRTConfig& cfg,
                      bool include_cell_count = false);

// Mean AE, median AE (even count: mean of the middle two), coefficient of
// determination r^2 (undefined when all truths are equal), MAPE over rows
// with truth > 0 (excluded row count reported, undefined if none remain).
struct MetricsResult {
    double mean_ae = 0;
    double median_ae = 0;
    std::optional<double> r2;
    std::optional<double> mape;
    int n = 0;
    int mape_excluded = 0;
};

MetricsResult compute_metrics(const std::vector<double>& estimates,
                              const std::vector<double>& truths);

// Uniform areal interpolation: county truth spread evenly over its cells.
// Counties with no cells cannot be distributed and are reported.
struct UniformBaseline {
    PopulationGrid surface;
    std::vector<std::string> undistributable;
};

UniformBaseline baseline_uniform(const std::vector<double>& county_truths,
                                 const CountyAssignment& assignment,
                                 const GeoTransform& geo);

// Prior-proportional classifier: the training class frequencies as one fixed
// probability vector.
std::vector<double> prior_probabilities(const ClassHistogram& hist);

}  // namespace popgrid

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "popgrid/grid.hpp"
#include "popgrid/nn/adam.hpp"
#include "popgrid/nn/checkpoint.hpp"
#include "popgrid/nn/network.hpp"
#include "popgrid/sampler.hpp"
#include "popgrid/tiles.hpp"

namespace popgrid::nn {

struct TrainConfig {
    int batch_size = 512;
    int epochs = 30;
    AdamHyper adam;
    std::uint64_t seed = 0;
};

// Per-band min/max over the given cells' tiles (training samples only).
void compute_band_minmax(const TileStack& tiles,
                         const std::vector<std::pair<int, int>>& cells,
                         std::vector<double>& band_min, std::vector<double>& band_max);

// Gather tiles into a [N, bands, h, w] batch scaled to [0,1] per band.
// A constant band (min == max) normalizes to 0.
Tensor make_batch(const TileStack& tiles,
                  const std::vector<std::pair<int, int>>& cells, std::size_t first,
                  std::size_t count, const std::vector<double>& band_min,
                  const std::vector<double>& band_max);

// Full training loop: seeded shuffles per epoch, Adam updates, per-epoch
// train loss and validation loss / top-1 / top-3, returning the weights of
// the epoch with the lowest validation loss. Deterministic in config.seed.
Checkpoint train_model(const TileStack& tiles, const ClassGrid& labels,
                       const SampleSet& samples, const ArchitectureSpec& spec,
                       const TrainConfig& cfg);

struct EvalResult {
    double top1 = 0;
    double top3 = 0;
    double mean_loss = 0;
};

// Inference-mode evaluation over explicit cells; labels from the class grid.
EvalResult evaluate_model(const Checkpoint& ckpt, const TileStack& tiles,
                          const std::vector<std::pair<int, int>>& cells,
                          const ClassGrid& labels, int batch_size = 256);

}  // namespace popgrid::nn

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "popgrid/nn/arch.hpp"
#include "popgrid/nn/tensor.hpp"

namespace popgrid::nn {

struct EpochStats {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double val_loss = -1;  // -1 when no validation set was given
    double val_top1 = -1;
    double val_top3 = -1;

    bool operator==(const EpochStats&) const = default;
};

// A trained model: architecture, the weights of the best-validation epoch,
// batchnorm running statistics, per-band input normalization from the
// training samples, and the full training history.
struct Checkpoint {
    ArchitectureSpec spec;
    ParamSet params;
    ParamSet bn_state;
    std::vector<double> band_min;
    std::vector<double> band_max;
    std::vector<EpochStats> history;
    std::uint64_t seed = 0;

    bool operator==(const Checkpoint&) const = default;
};

// PGNN v1: magic "PGNN", version u16, u64 header length, JSON header
// (architecture, normalization, history, tensor shapes), then the raw
// little-endian f64 tensor payloads in declaration order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace popgrid::nn

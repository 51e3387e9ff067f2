#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace popgrid {

// Pipeline knobs with paper-era defaults: 0.01 degree cells, 74x74x7 tiles,
// 1000-cell chunks, 1/10 train and 1/100 validation fractions, batch 512,
// 30 epochs, Adam defaults. Loaded from a flat key=value file; CLI flags
// override file values; unknown keys are rejected.
struct Config {
    double cell_size = 0.01;
    double origin_lon = -124.849;
    double origin_lat = 49.3844;  // NW corner
    int tile_h = 74;
    int tile_w = 74;
    int bands = 7;
    int chunk_size = 1000;
    double train_frac = 0.1;
    double val_frac = 0.01;
    int batch_size = 512;
    int epochs = 30;
    double adam_alpha = 0.001;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::string preset = "vgg-a-paper";
    int n_classes = 0;  // 0 = derive from the data (max class + 1)
    int gbrt_rounds = 100;
    int gbrt_depth = 3;
    double gbrt_shrinkage = 0.1;
    bool gbrt_log_target = false;
    bool gbrt_cell_count_feature = false;
    std::uint64_t seed = 0;

    void validate() const;  // throws UsageError
    std::map<std::string, std::string> to_kv() const;
};

Config load_config(const std::filesystem::path& path);
void apply_config_entry(Config& cfg, const std::string& key, const std::string& value);

}  // namespace popgrid

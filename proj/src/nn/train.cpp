#include "popgrid/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "popgrid/rng.hpp"

namespace popgrid::nn {

namespace {

int label_at(const ClassGrid& labels, int i, int j, int n_classes) {
    if (i < 0 || i >= labels.geo.rows || j < 0 || j >= labels.geo.cols)
        throw DataError("sample cell (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") outside the label grid");
    if (labels.is_nodata(i, j))
        throw DataError("sample cell (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is nodata");
    int c = labels.at(i, j);
    if (c < 0 || c >= n_classes)
        throw DataError("label " + std::to_string(c) + " outside [0, " +
                        std::to_string(n_classes) + ") at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
    return c;
}

}  // namespace

void compute_band_minmax(const TileStack& tiles,
                         const std::vector<std::pair<int, int>>& cells,
                         std::vector<double>& band_min, std::vector<double>& band_max) {
    const int nb = tiles.bands;
    band_min.assign(static_cast<std::size_t>(nb), 255.0);
    band_max.assign(static_cast<std::size_t>(nb), 0.0);
    const std::size_t per_tile = static_cast<std::size_t>(tiles.tile_h) * tiles.tile_w;
    for (const auto& [i, j] : cells) {
        const std::uint8_t* t = tiles.tile(i, j);
        for (std::size_t p = 0; p < per_tile; ++p) {
            for (int b = 0; b < nb; ++b) {
                double v = t[p * static_cast<std::size_t>(nb) + static_cast<std::size_t>(b)];
                band_min[static_cast<std::size_t>(b)] =
                    std::min(band_min[static_cast<std::size_t>(b)], v);
                band_max[static_cast<std::size_t>(b)] =
                    std::max(band_max[static_cast<std::size_t>(b)], v);
            }
        }
    }
}

Tensor make_batch(const TileStack& tiles,
                  const std::vector<std::pair<int, int>>& cells, std::size_t first,
                  std::size_t count, const std::vector<double>& band_min,
                  const std::vector<double>& band_max) {
    const int nb = tiles.bands;
    const int th = tiles.tile_h;
    const int tw = tiles.tile_w;
    Tensor batch({static_cast<int>(count), nb, th, tw});
    std::vector<double> scale(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        double range = band_max[static_cast<std::size_t>(b)] - band_min[static_cast<std::size_t>(b)];
        scale[static_cast<std::size_t>(b)] = range > 0.0 ? 1.0 / range : 0.0;
    }
    for (std::size_t s = 0; s < count; ++s) {
        const auto& [i, j] = cells[first + s];
        const std::uint8_t* t = tiles.tile(i, j);
        for (int b = 0; b < nb; ++b) {
            double* dst = batch.data.data() +
                          ((s * static_cast<std::size_t>(nb)) + static_cast<std::size_t>(b)) *
                              static_cast<std::size_t>(th) * tw;
            for (int y = 0; y < th; ++y) {
                for (int x = 0; x < tw; ++x) {
                    double v = t[(static_cast<std::size_t>(y) * tw + x) * nb + b];
                    dst[static_cast<std::size_t>(y) * tw + x] =
                        (v - band_min[static_cast<std::size_t>(b)]) * scale[static_cast<std::size_t>(b)];
                }
            }
        }
    }
    return batch;
}

Checkpoint train_model(const TileStack& tiles, const ClassGrid& labels,
                       const SampleSet& samples, const ArchitectureSpec& spec,
                       const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw UsageError("epochs must be >= 1");
    if (cfg.batch_size < 1) throw UsageError("batch_size must be >= 1");
    if (samples.train.empty()) throw DataError("training sample set is empty");
    if (tiles.tile_h != spec.in_h || tiles.tile_w != spec.in_w || tiles.bands != spec.in_bands)
        throw DataError("tile dimensions do not match the architecture input");

    // Validate all labels up front.
    for (const auto& [i, j] : samples.train) label_at(labels, i, j, spec.n_classes);
    for (const auto& [i, j] : samples.validation) label_at(labels, i, j, spec.n_classes);

    std::vector<double> band_min;
    std::vector<double> band_max;
    compute_band_minmax(tiles, samples.train, band_min, band_max);

    Network net(spec);
    net.init_params(cfg.seed);
    AdamState adam = AdamState::like(net.params());
    ParamSet grads = net.zero_grads();

    Checkpoint best;
    best.spec = spec;
    best.band_min = band_min;
    best.band_max = band_max;
    best.seed = cfg.seed;
    double best_val = std::numeric_limits<double>::infinity();
    bool have_best = false;

    std::vector<std::pair<int, int>> order = samples.train;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        SplitMix64 shuffle_rng(mix_seed(cfg.seed, 0x5E, static_cast<std::uint64_t>(epoch)));
        deterministic_shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t count = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            Tensor batch = make_batch(tiles, order, start, count, band_min, band_max);
            std::vector<int> batch_labels(count);
            for (std::size_t s = 0; s < count; ++s) {
                const auto& [i, j] = order[start + s];
                batch_labels[s] = labels.at(i, j);
            }
            std::uint64_t dropout_key =
                mix_seed(cfg.seed, 0xD0, static_cast<std::uint64_t>(epoch), batch_index);
            double loss =
                net.loss_and_backward(batch, batch_labels, grads, Mode::Train, dropout_key);
            if (!std::isfinite(loss)) throw NumericError("training loss diverged");
            adam_step(net.params(), grads, adam, cfg.adam);
            loss_sum += loss * static_cast<double>(count);
            seen += count;
            ++batch_index;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(seen);

        if (!samples.validation.empty()) {
            Checkpoint probe;
            probe.spec = spec;
            probe.params = net.params();
            probe.bn_state = net.bn_state();
            probe.band_min = band_min;
            probe.band_max = band_max;
            EvalResult val = evaluate_model(probe, tiles, samples.validation, labels,
                                            cfg.batch_size);
            stats.val_loss = val.mean_loss;
            stats.val_top1 = val.top1;
            stats.val_top3 = val.top3;
            if (val.mean_loss < best_val) {
                best_val = val.mean_loss;
                best.params = net.params();
                best.bn_state = net.bn_state();
                have_best = true;
            }
        }
        best.history.push_back(stats);
    }

    if (!have_best) {
        best.params = net.params();
        best.bn_state = net.bn_state();
    }
    return best;
}

EvalResult evaluate_model(const Checkpoint& ckpt, const TileStack& tiles,
                          const std::vector<std::pair<int, int>>& cells,
                          const ClassGrid& labels, int batch_size) {
    if (cells.empty()) throw DataError("evaluation set is empty");
    Network net(ckpt.spec);
    net.params() = ckpt.params;
    net.bn_state() = ckpt.bn_state;

    const int k = ckpt.spec.n_classes;
    double loss_sum = 0.0;
    long long hit1 = 0;
    long long hit3 = 0;
    for (std::size_t start = 0; start < cells.size(); start += batch_size) {
        std::size_t count = std::min<std::size_t>(batch_size, cells.size() - start);
        Tensor batch =
            make_batch(tiles, cells, start, count, ckpt.band_min, ckpt.band_max);
        Tensor probs = net.forward(batch, Mode::Infer);
        std::vector<int> batch_labels(count);
        for (std::size_t s = 0; s < count; ++s)
            batch_labels[s] = label_at(labels, cells[start + s].first,
                                       cells[start + s].second, k);
        loss_sum += Network::cross_entropy(probs, batch_labels, k) *
                    static_cast<double>(count);
        for (std::size_t s = 0; s < count; ++s) {
            const double* row = probs.data.data() + s * static_cast<std::size_t>(k);
            if (topk_hit(row, k, batch_labels[s], 1)) ++hit1;
            if (topk_hit(row, k, batch_labels[s], 3)) ++hit3;
        }
    }
    EvalResult res;
    res.mean_loss = loss_sum / static_cast<double>(cells.size());
    res.top1 = static_cast<double>(hit1) / static_cast<double>(cells.size());
    res.top3 = static_cast<double>(hit3) / static_cast<double>(cells.size());
    return res;
}

}  // namespace popgrid::nn

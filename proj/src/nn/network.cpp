#include "popgrid/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "popgrid/errors.hpp"
#include "popgrid/nn/kernels.hpp"
#include "popgrid/rng.hpp"

namespace popgrid::nn {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;  // running = m*running + (1-m)*batch
constexpr double kLogClamp = 1e-15;

int batch_of(const Tensor& t) { return t.shape.empty() ? 0 : t.shape[0]; }

// (count, stride) pairs for batchnorm: 4D tensors normalize per channel over
// (N,H,W); 2D tensors per feature over N.
struct BnLayout {
    int channels;
    std::size_t per_channel;  // elements per channel in one sample
    std::size_t sample_size;
    int n;
};

BnLayout bn_layout(const Tensor& t) {
    BnLayout l{};
    if (t.shape.size() == 4) {
        l.n = t.shape[0];
        l.channels = t.shape[1];
        l.per_channel = static_cast<std::size_t>(t.shape[2]) * t.shape[3];
    } else {
        l.n = t.shape[0];
        l.channels = t.shape[1];
        l.per_channel = 1;
    }
    l.sample_size = static_cast<std::size_t>(l.channels) * l.per_channel;
    return l;
}

double dropout_uniform(std::uint64_t key, std::uint64_t layer, std::uint64_t idx) {
    return static_cast<double>(mix_seed(key, layer, idx) >> 11) * 0x1.0p-53;
}

}  // namespace

Network::Network(ArchitectureSpec spec) : spec_(std::move(spec)) {
    shapes_ = trace_shapes(spec_);
    params_.resize(spec_.layers.size());
    state_.resize(spec_.layers.size());
    ActShape in{false, spec_.in_bands, spec_.in_h, spec_.in_w};
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const LayerSpec& layer = spec_.layers[li];
        switch (layer.kind) {
            case LayerKind::Conv3x3:
                params_[li].push_back(Tensor({layer.units, in.c, 3, 3}));
                params_[li].push_back(Tensor({layer.units}));
                break;
            case LayerKind::Dense:
                params_[li].push_back(Tensor({layer.units, in.features()}));
                params_[li].push_back(Tensor({layer.units}));
                break;
            case LayerKind::BatchNorm: {
                int f = in.c;  // per-channel for spatial input, per-feature for flat
                Tensor gamma({f});
                std::fill(gamma.data.begin(), gamma.data.end(), 1.0);
                params_[li].push_back(std::move(gamma));
                params_[li].push_back(Tensor({f}));  // beta
                state_[li].push_back(Tensor({f}));   // running mean
                Tensor rv({f});
                std::fill(rv.data.begin(), rv.data.end(), 1.0);
                state_[li].push_back(std::move(rv));  // running var
                break;
            }
            default:
                break;
        }
        in = shapes_[li];
    }
}

void Network::init_params(std::uint64_t seed) {
    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const LayerSpec& layer = spec_.layers[li];
        if (layer.kind != LayerKind::Conv3x3 && layer.kind != LayerKind::Dense) continue;
        Tensor& w = params_[li][0];
        int fan_in = layer.kind == LayerKind::Conv3x3 ? w.shape[1] * 9 : w.shape[1];
        double limit = std::sqrt(6.0 / fan_in);
        SplitMix64 rng(mix_seed(seed, 0xA11, li));
        for (double& v : w.data) v = rng.next_uniform(-limit, limit);
        // biases stay zero
    }
}

ParamSet Network::zero_grads() const {
    ParamSet grads(params_.size());
    for (std::size_t li = 0; li < params_.size(); ++li)
        for (const Tensor& t : params_[li]) grads[li].push_back(Tensor(t.shape));
    return grads;
}

Tensor Network::forward(const Tensor& input, Mode mode, ForwardCache* cache,
                        std::uint64_t dropout_key, bool update_running) {
    if (input.shape.size() != 4 || input.shape[1] != spec_.in_bands ||
        input.shape[2] != spec_.in_h || input.shape[3] != spec_.in_w) {
        throw DataError("input batch shape does not match the architecture input");
    }
    if (cache) {
        cache->layers.clear();
        cache->layers.resize(spec_.layers.size());
    }

    const int n = batch_of(input);
    Tensor cur = input;

    for (std::size_t li = 0; li < spec_.layers.size(); ++li) {
        const LayerSpec& layer = spec_.layers[li];
        LayerCache* lc = cache ? &cache->layers[li] : nullptr;
        switch (layer.kind) {
            case LayerKind::Conv3x3: {
                if (lc) lc->input = cur;
                const int ic = cur.shape[1];
                const int h = cur.shape[2];
                const int w = cur.shape[3];
                Tensor out({n, layer.units, h, w});
                kern::conv3x3_forward(cur.data.data(), params_[li][0].data.data(),
                                      params_[li][1].data.data(), out.data.data(), n, ic,
                                      h, w, layer.units);
                cur = std::move(out);
                break;
            }
            case LayerKind::MaxPool2x2: {
                const int c = cur.shape[1];
                const int h = cur.shape[2];
                const int w = cur.shape[3];
                Tensor out({n, c, h / 2, w / 2});
                std::vector<std::size_t> argmax(out.size());
                kern::maxpool2x2_forward(cur.data.data(), out.data.data(), argmax.data(),
                                         n, c, h, w);
                if (lc) {
                    lc->input = std::move(cur);
                    lc->pool_argmax = std::move(argmax);
                }
                cur = std::move(out);
                break;
            }
            case LayerKind::Relu: {
                if (lc) lc->input = cur;
                for (double& v : cur.data)
                    if (v < 0.0) v = 0.0;
                break;
            }
            case LayerKind::Flatten: {
                cur.shape = {n, shapes_[li].c};
                break;
            }
            case LayerKind::Dense: {
                if (lc) lc->input = cur;
                const int fin = cur.shape[1];
                Tensor out({n, layer.units});
                kern::dense_forward(cur.data.data(), params_[li][0].data.data(),
                                    params_[li][1].data.data(), out.data.data(), n, fin,
                                    layer.units);
                cur = std::move(out);
                break;
            }
            case LayerKind::Dropout: {
                if (mode != Mode::Train || layer.rate <= 0.0) {
                    if (lc) lc->dropout_mask.clear();
                    break;
                }
                const double keep_scale = 1.0 / (1.0 - layer.rate);
                if (lc) lc->dropout_mask.resize(cur.size());
                for (std::size_t k = 0; k < cur.size(); ++k) {
                    double mask =
                        dropout_uniform(dropout_key, li, k) < layer.rate ? 0.0 : keep_scale;
                    cur.data[k] *= mask;
                    if (lc) lc->dropout_mask[k] = mask;
                }
                break;
            }
            case LayerKind::BatchNorm: {
                BnLayout bl = bn_layout(cur);
                const double* gamma = params_[li][0].data.data();
                const double* beta = params_[li][1].data.data();
                double* run_mean = state_[li][0].data.data();
                double* run_var = state_[li][1].data.data();
                const bool use_batch_stats = mode != Mode::Infer;
                if (lc) {
                    lc->input = cur;
                    lc->bn_xhat.resize(cur.size());
                    lc->bn_var.resize(static_cast<std::size_t>(bl.channels));
                }
                const std::size_t m =
                    static_cast<std::size_t>(bl.n) * bl.per_channel;  // elems per channel
                for (int ch = 0; ch < bl.channels; ++ch) {
                    double mean;
                    double var;
                    if (use_batch_stats) {
                        double sum = 0.0;
                        for (int b = 0; b < bl.n; ++b) {
                            const double* p = cur.data.data() + b * bl.sample_size +
                                              ch * bl.per_channel;
                            for (std::size_t k = 0; k < bl.per_channel; ++k) sum += p[k];
                        }
                        mean = sum / static_cast<double>(m);
                        double sq = 0.0;
                        for (int b = 0; b < bl.n; ++b) {
                            const double* p = cur.data.data() + b * bl.sample_size +
                                              ch * bl.per_channel;
                            for (std::size_t k = 0; k < bl.per_channel; ++k) {
                                double d = p[k] - mean;
                                sq += d * d;
                            }
                        }
                        var = sq / static_cast<double>(m);
                        if (mode == Mode::Train && update_running) {
                            run_mean[ch] = kBnMomentum * run_mean[ch] + (1 - kBnMomentum) * mean;
                            run_var[ch] = kBnMomentum * run_var[ch] + (1 - kBnMomentum) * var;
                        }
                    } else {
                        mean = run_mean[ch];
                        var = run_var[ch];
                    }
                    const double istd = 1.0 / std::sqrt(var + kBnEps);
                    for (int b = 0; b < bl.n; ++b) {
                        double* p = cur.data.data() + b * bl.sample_size + ch * bl.per_channel;
                        const std::size_t base = static_cast<std::size_t>(b) * bl.sample_size +
                                                 static_cast<std::size_t>(ch) * bl.per_channel;
                        for (std::size_t k = 0; k < bl.per_channel; ++k) {
                            double xhat = (p[k] - mean) * istd;
                            if (lc) lc->bn_xhat[base + k] = xhat;
                            p[k] = gamma[ch] * xhat + beta[ch];
                        }
                    }
                    if (lc) lc->bn_var[static_cast<std::size_t>(ch)] = var;
                }
                break;
            }
            case LayerKind::Softmax: {
                const int k = cur.shape[1];
                for (int b = 0; b < n; ++b) {
                    double* row = cur.data.data() + static_cast<std::size_t>(b) * k;
                    double mx = row[0];
                    for (int c = 1; c < k; ++c) mx = std::max(mx, row[c]);
                    double sum = 0.0;
                    for (int c = 0; c < k; ++c) {
                        row[c] = std::exp(row[c] - mx);
                        sum += row[c];
                    }
                    for (int c = 0; c < k; ++c) row[c] /= sum;
                }
                break;
            }
        }
    }

    if (cache) cache->probs = cur;
    return cur;
}

double Network::cross_entropy(const Tensor& probs, const std::vector<int>& labels,
                              int n_classes) {
    const int n = probs.shape[0];
    if (static_cast<std::size_t>(n) != labels.size())
        throw DataError("label count does not match batch size");
    double total = 0.0;
    for (int b = 0; b < n; ++b) {
        int label = labels[static_cast<std::size_t>(b)];
        if (label < 0 || label >= n_classes)
            throw DataError("label " + std::to_string(label) + " out of range [0, " +
                            std::to_string(n_classes) + ")");
        double p = probs.data[static_cast<std::size_t>(b) * n_classes + label];
        total += -std::log(std::max(p, kLogClamp));
    }
    return total / n;
}

double Network::loss_and_backward(const Tensor& input, const std::vector<int>& labels,
                                  ParamSet& grads, Mode mode, std::uint64_t dropout_key) {
    ForwardCache cache;
    Tensor probs = forward(input, mode, &cache, dropout_key, /*update_running=*/true);
    const int n = probs.shape[0];
    const int k = spec_.n_classes;
    double loss = cross_entropy(probs, labels, k);

    if (grads.size() != params_.size()) grads = zero_grads();

    // Fused softmax + cross-entropy gradient w.r.t. the softmax input.
    Tensor delta = probs;
    for (int b = 0; b < n; ++b) {
        double* row = delta.data.data() + static_cast<std::size_t>(b) * k;
        row[labels[static_cast<std::size_t>(b)]] -= 1.0;
        for (int c = 0; c < k; ++c) row[c] /= n;
    }

    // Walk backwards, skipping the softmax layer itself.
    for (int li = static_cast<int>(spec_.layers.size()) - 2; li >= 0; --li) {
        const LayerSpec& layer = spec_.layers[static_cast<std::size_t>(li)];
        LayerCache& lc = cache.layers[static_cast<std::size_t>(li)];
        switch (layer.kind) {
            case LayerKind::Conv3x3: {
                const Tensor& in = lc.input;
                const int ic = in.shape[1];
                const int h = in.shape[2];
                const int w = in.shape[3];
                Tensor& dw = grads[static_cast<std::size_t>(li)][0];
                Tensor& db = grads[static_cast<std::size_t>(li)][1];
                kern::conv3x3_backward_params(delta.data.data(), in.data.data(),
                                              dw.data.data(), db.data.data(), n, ic, h, w,
                                              layer.units);
                Tensor din(in.shape);
                kern::conv3x3_backward_input(delta.data.data(),
                                             params_[static_cast<std::size_t>(li)][0].data.data(),
                                             din.data.data(), n, ic, h, w, layer.units);
                delta = std::move(din);
                break;
            }
            case LayerKind::MaxPool2x2: {
                const Tensor& in = lc.input;
                Tensor din(in.shape);
                kern::maxpool2x2_backward(delta.data.data(), lc.pool_argmax.data(),
                                          din.data.data(), n, in.shape[1], in.shape[2],
                                          in.shape[3]);
                delta = std::move(din);
                break;
            }
            case LayerKind::Relu: {
                const Tensor& in = lc.input;
                for (std::size_t idx = 0; idx < delta.size(); ++idx)
                    if (in.data[idx] <= 0.0) delta.data[idx] = 0.0;
                break;
            }
            case LayerKind::Flatten: {
                if (li == 0) {
                    delta.shape = {n, spec_.in_bands, spec_.in_h, spec_.in_w};
                } else {
                    const ActShape& prev = shapes_[static_cast<std::size_t>(li) - 1];
                    delta.shape = {n, prev.c, prev.h, prev.w};
                }
                break;
            }
            case LayerKind::Dense: {
                const Tensor& in = lc.input;
                const int fin = in.shape[1];
                Tensor& dw = grads[static_cast<std::size_t>(li)][0];
                Tensor& db = grads[static_cast<std::size_t>(li)][1];
                kern::dense_backward_params(delta.data.data(), in.data.data(),
                                            dw.data.data(), db.data.data(), n, fin,
                                            layer.units);
                Tensor din(in.shape);
                kern::dense_backward_input(delta.data.data(),
                                           params_[static_cast<std::size_t>(li)][0].data.data(),
                                           din.data.data(), n, fin, layer.units);
                delta = std::move(din);
                break;
            }
            case LayerKind::Dropout: {
                if (!lc.dropout_mask.empty())
                    for (std::size_t idx = 0; idx < delta.size(); ++idx)
                        delta.data[idx] *= lc.dropout_mask[idx];
                break;
            }
            case LayerKind::BatchNorm: {
                BnLayout bl = bn_layout(lc.input);
                const double* gamma = params_[static_cast<std::size_t>(li)][0].data.data();
                Tensor& dgamma = grads[static_cast<std::size_t>(li)][0];
                Tensor& dbeta = grads[static_cast<std::size_t>(li)][1];
                const double m = static_cast<double>(bl.n) * static_cast<double>(bl.per_channel);
                Tensor din(lc.input.shape);
                for (int ch = 0; ch < bl.channels; ++ch) {
                    const double istd =
                        1.0 / std::sqrt(lc.bn_var[static_cast<std::size_t>(ch)] + kBnEps);
                    double sum_dy = 0.0;
                    double sum_dy_xhat = 0.0;
                    for (int b = 0; b < bl.n; ++b) {
                        const std::size_t base =
                            static_cast<std::size_t>(b) * bl.sample_size +
                            static_cast<std::size_t>(ch) * bl.per_channel;
                        for (std::size_t k2 = 0; k2 < bl.per_channel; ++k2) {
                            sum_dy += delta.data[base + k2];
                            sum_dy_xhat += delta.data[base + k2] * lc.bn_xhat[base + k2];
                        }
                    }
                    dgamma.data[static_cast<std::size_t>(ch)] = sum_dy_xhat;
                    dbeta.data[static_cast<std::size_t>(ch)] = sum_dy;
                    const double g = gamma[ch];
                    for (int b = 0; b < bl.n; ++b) {
                        const std::size_t base =
                            static_cast<std::size_t>(b) * bl.sample_size +
                            static_cast<std::size_t>(ch) * bl.per_channel;
                        for (std::size_t k2 = 0; k2 < bl.per_channel; ++k2) {
                            din.data[base + k2] =
                                g * istd / m *
                                (m * delta.data[base + k2] - sum_dy -
                                 lc.bn_xhat[base + k2] * sum_dy_xhat);
                        }
                    }
                }
                delta = std::move(din);
                break;
            }
            case LayerKind::Softmax:
                break;  // unreachable: softmax is always last
        }
    }
    return loss;
}

bool topk_hit(const double* probs, int n_classes, int label, int k) {
    // Rank of `label`: classes strictly more probable, plus equal-probability
    // classes with a lower index (ties break toward the lower class).
    int rank = 0;
    const double p = probs[label];
    for (int c = 0; c < n_classes; ++c) {
        if (probs[c] > p || (probs[c] == p && c < label)) ++rank;
    }
    return rank < k;
}

}  // namespace popgrid::nn

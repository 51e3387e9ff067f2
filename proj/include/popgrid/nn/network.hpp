#pragma once

#include <cstdint>
#include <vector>

#include "popgrid/nn/arch.hpp"
#include "popgrid/nn/tensor.hpp"

namespace popgrid::nn {

enum class Mode {
    Train,      // dropout active, batchnorm uses batch statistics
    Infer,      // dropout off, batchnorm uses running averages
    GradCheck,  // batchnorm uses batch statistics, dropout off
};

struct LayerCache {
    Tensor input;
    std::vector<std::size_t> pool_argmax;
    std::vector<double> dropout_mask;
    std::vector<double> bn_xhat;  // normalized activations
    std::vector<double> bn_var;   // per-channel batch variance
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Tensor probs;
};

// Feed-forward network over the fixed layer set, with hand-derived reverse
// mode gradients. Parameters per layer: conv {W [oc,ic,3,3], b [oc]}, dense
// {W [out,in], b [out]}, batchnorm {gamma, beta} plus non-trainable running
// {mean, var} state.
class Network {
public:
    explicit Network(ArchitectureSpec spec);

    const ArchitectureSpec& spec() const { return spec_; }
    const std::vector<ActShape>& shapes() const { return shapes_; }

    // He-uniform fan-in initialization, deterministic in the seed.
    void init_params(std::uint64_t seed);

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    ParamSet& bn_state() { return state_; }
    const ParamSet& bn_state() const { return state_; }

    ParamSet zero_grads() const;

    // Input [N, bands, h, w] -> probabilities [N, n_classes]. Each row sums
    // to 1 within 1e-9 (softmax with max subtraction). update_running only
    // applies to Mode::Train.
    Tensor forward(const Tensor& input, Mode mode, ForwardCache* cache = nullptr,
                   std::uint64_t dropout_key = 0, bool update_running = true);

    // Mean categorical cross entropy of probabilities against labels.
    static double cross_entropy(const Tensor& probs, const std::vector<int>& labels,
                                int n_classes);

    // Forward + full reverse-mode pass; returns the loss and fills grads
    // (same nesting as params()).
    double loss_and_backward(const Tensor& input, const std::vector<int>& labels,
                             ParamSet& grads, Mode mode = Mode::Train,
                             std::uint64_t dropout_key = 0);

private:
    ArchitectureSpec spec_;
    std::vector<ActShape> shapes_;
    ParamSet params_;
    ParamSet state_;
};

// Classes ranked by (probability desc, class asc); true top-k membership.
bool topk_hit(const double* probs, int n_classes, int label, int k);

}  // namespace popgrid::nn

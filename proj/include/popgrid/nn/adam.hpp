#pragma once

#include "popgrid/nn/tensor.hpp"

namespace popgrid::nn {

// Published Adam defaults; the optimizer is used "with default parameters".
struct AdamHyper {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    ParamSet m;
    ParamSet v;
    long long t = 0;

    static AdamState like(const ParamSet& params);
};

// theta <- theta - alpha * m_hat / (sqrt(v_hat) + eps), with bias-corrected
// m_hat = m/(1-beta1^t), v_hat = v/(1-beta2^t). t is the post-increment step.
void adam_update_tensor(Tensor& w, const Tensor& g, Tensor& m, Tensor& v, long long t,
                        const AdamHyper& hp);

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamHyper& hp);

}  // namespace popgrid::nn

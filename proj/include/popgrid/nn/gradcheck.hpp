#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popgrid/nn/arch.hpp"

namespace popgrid::nn {

struct LayerGradCheck {
    int layer = 0;
    std::string kind;
    int n_params = 0;
    double max_rel_err = 0;
    bool skipped = false;  // dropout: non-differentiable sampling, not checked
};

struct GradCheckReport {
    std::vector<LayerGradCheck> layers;
    double max_rel_err = 0;
};

// Compares every parameter's analytic gradient against central finite
// differences at the given step, on a random batch drawn from the seed.
// Dropout layers are disabled during the check and marked skipped; batchnorm
// runs on batch statistics, which is the differentiable training path.
GradCheckReport grad_check(const ArchitectureSpec& spec, std::uint64_t seed,
                           int batch_size = 2, double fd_step = 1e-5);

}  // namespace popgrid::nn

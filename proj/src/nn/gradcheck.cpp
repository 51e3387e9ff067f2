#include "popgrid/nn/gradcheck.hpp"

#include <cmath>

#include "popgrid/nn/network.hpp"
#include "popgrid/rng.hpp"

namespace popgrid::nn {

namespace {

// Both-negligible pairs are below what central differences can resolve at
// step 1e-5 on an O(1) loss; treat them as matching.
constexpr double kNegligible = 1e-7;

double rel_err(double analytic, double numeric) {
    double denom = std::fabs(analytic) + std::fabs(numeric);
    if (denom < kNegligible) return 0.0;
    return std::fabs(analytic - numeric) / denom;
}

}  // namespace

GradCheckReport grad_check(const ArchitectureSpec& spec, std::uint64_t seed,
                           int batch_size, double fd_step) {
    Network net(spec);
    net.init_params(seed);

    SplitMix64 rng(mix_seed(seed, 0xF0));
    Tensor input({batch_size, spec.in_bands, spec.in_h, spec.in_w});
    for (double& v : input.data) v = rng.next_double();
    std::vector<int> labels(static_cast<std::size_t>(batch_size));
    for (auto& l : labels)
        l = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.n_classes)));

    ParamSet grads = net.zero_grads();
    net.loss_and_backward(input, labels, grads, Mode::GradCheck);

    auto loss_at = [&]() {
        Tensor probs = net.forward(input, Mode::GradCheck, nullptr, 0,
                                   /*update_running=*/false);
        return Network::cross_entropy(probs, labels, spec.n_classes);
    };

    GradCheckReport report;
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const LayerSpec& layer = spec.layers[li];
        if (layer.kind == LayerKind::Dropout) {
            report.layers.push_back(
                {static_cast<int>(li), layer_kind_name(layer.kind), 0, 0.0, true});
            continue;
        }
        if (net.params()[li].empty()) continue;

        LayerGradCheck lg;
        lg.layer = static_cast<int>(li);
        lg.kind = layer_kind_name(layer.kind);
        for (std::size_t ti = 0; ti < net.params()[li].size(); ++ti) {
            Tensor& w = net.params()[li][ti];
            for (std::size_t k = 0; k < w.size(); ++k) {
                const double saved = w.data[k];
                w.data[k] = saved + fd_step;
                const double lp = loss_at();
                w.data[k] = saved - fd_step;
                const double lm = loss_at();
                w.data[k] = saved;
                const double numeric = (lp - lm) / (2.0 * fd_step);
                const double analytic = grads[li][ti].data[k];
                lg.max_rel_err = std::max(lg.max_rel_err, rel_err(analytic, numeric));
                ++lg.n_params;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, lg.max_rel_err);
        report.layers.push_back(std::move(lg));
    }
    return report;
}

}  // namespace popgrid::nn

#include "popgrid/nn/adam.hpp"

#include <cmath>

#include "popgrid/errors.hpp"

namespace popgrid::nn {

AdamState AdamState::like(const ParamSet& params) {
    AdamState st;
    st.m.resize(params.size());
    st.v.resize(params.size());
    for (std::size_t li = 0; li < params.size(); ++li) {
        for (const Tensor& t : params[li]) {
            st.m[li].push_back(Tensor(t.shape));
            st.v[li].push_back(Tensor(t.shape));
        }
    }
    return st;
}

void adam_update_tensor(Tensor& w, const Tensor& g, Tensor& m, Tensor& v, long long t,
                        const AdamHyper& hp) {
    if (w.shape != g.shape || w.shape != m.shape || w.shape != v.shape)
        throw DataError("adam update: tensor shapes disagree");
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < w.size(); ++k) {
        m.data[k] = hp.beta1 * m.data[k] + (1.0 - hp.beta1) * g.data[k];
        v.data[k] = hp.beta2 * v.data[k] + (1.0 - hp.beta2) * g.data[k] * g.data[k];
        const double m_hat = m.data[k] / bc1;
        const double v_hat = v.data[k] / bc2;
        w.data[k] -= hp.alpha * m_hat / (std::sqrt(v_hat) + hp.eps);
    }
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamHyper& hp) {
    if (params.size() != grads.size()) throw DataError("adam step: grads mismatch params");
    ++state.t;
    for (std::size_t li = 0; li < params.size(); ++li) {
        for (std::size_t ti = 0; ti < params[li].size(); ++ti) {
            adam_update_tensor(params[li][ti], grads[li][ti], state.m[li][ti],
                               state.v[li][ti], state.t, hp);
        }
    }
}

}  // namespace popgrid::nn

#include "popgrid/nn/kernels.hpp"

// Serial reference kernels. The OpenMP versions in kernels_omp.cpp must keep
// these exact loop bodies and inner orderings so results stay bit-identical.

namespace popgrid::nn::kern::serial {

void conv3x3_forward(const double* in, const double* weights, const double* bias,
                     double* out, int n, int ic, int h, int w, int oc) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < n; ++b) {
        for (int o = 0; o < oc; ++o) {
            const double* wo = weights + static_cast<std::size_t>(o) * ic * 9;
            double* op = out + (static_cast<std::size_t>(b) * oc + o) * plane;
            const double bv = bias[o];
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double acc = bv;
                    for (int c = 0; c < ic; ++c) {
                        const double* ip = in + (static_cast<std::size_t>(b) * ic + c) * plane;
                        const double* wp = wo + static_cast<std::size_t>(c) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int sx = x + kx - 1;
                                if (sx < 0 || sx >= w) continue;
                                acc += wp[ky * 3 + kx] * ip[static_cast<std::size_t>(sy) * w + sx];
                            }
                        }
                    }
                    op[static_cast<std::size_t>(y) * w + x] = acc;
                }
            }
        }
    }
}

void conv3x3_backward_input(const double* dout, const double* weights, double* din,
                            int n, int ic, int h, int w, int oc) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int b = 0; b < n; ++b) {
        for (int c = 0; c < ic; ++c) {
            double* dp = din + (static_cast<std::size_t>(b) * ic + c) * plane;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double acc = 0.0;
                    for (int o = 0; o < oc; ++o) {
                        const double* gp = dout + (static_cast<std::size_t>(b) * oc + o) * plane;
                        const double* wp =
                            weights + (static_cast<std::size_t>(o) * ic + c) * 9;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int ty = y - ky + 1;
                            if (ty < 0 || ty >= h) continue;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int tx = x - kx + 1;
                                if (tx < 0 || tx >= w) continue;
                                acc += wp[ky * 3 + kx] * gp[static_cast<std::size_t>(ty) * w + tx];
                            }
                        }
                    }
                    dp[static_cast<std::size_t>(y) * w + x] = acc;
                }
            }
        }
    }
}

void conv3x3_backward_params(const double* dout, const double* in, double* dweights,
                             double* dbias, int n, int ic, int h, int w, int oc) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int o = 0; o < oc; ++o) {
        for (int c = 0; c < ic; ++c) {
            double* dw = dweights + (static_cast<std::size_t>(o) * ic + c) * 9;
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    double acc = 0.0;
                    for (int b = 0; b < n; ++b) {
                        const double* gp =
                            dout + (static_cast<std::size_t>(b) * oc + o) * plane;
                        const double* ip =
                            in + (static_cast<std::size_t>(b) * ic + c) * plane;
                        for (int y = 0; y < h; ++y) {
                            const int sy = y + ky - 1;
                            if (sy < 0 || sy >= h) continue;
                            for (int x = 0; x < w; ++x) {
                                const int sx = x + kx - 1;
                                if (sx < 0 || sx >= w) continue;
                                acc += gp[static_cast<std::size_t>(y) * w + x] *
                                       ip[static_cast<std::size_t>(sy) * w + sx];
                            }
                        }
                    }
                    dw[ky * 3 + kx] = acc;
                }
            }
        }
    }
    for (int o = 0; o < oc; ++o) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) {
            const double* gp = dout + (static_cast<std::size_t>(b) * oc + o) * plane;
            for (std::size_t k = 0; k < plane; ++k) acc += gp[k];
        }
        dbias[o] = acc;
    }
}

void dense_forward(const double* in, const double* weights, const double* bias,
                   double* out, int n, int fin, int fout) {
    for (int b = 0; b < n; ++b) {
        const double* ip = in + static_cast<std::size_t>(b) * fin;
        double* op = out + static_cast<std::size_t>(b) * fout;
        for (int o = 0; o < fout; ++o) {
            const double* wp = weights + static_cast<std::size_t>(o) * fin;
            double acc = bias[o];
            for (int i = 0; i < fin; ++i) acc += wp[i] * ip[i];
            op[o] = acc;
        }
    }
}

void dense_backward_input(const double* dout, const double* weights, double* din,
                          int n, int fin, int fout) {
    for (int b = 0; b < n; ++b) {
        const double* gp = dout + static_cast<std::size_t>(b) * fout;
        double* dp = din + static_cast<std::size_t>(b) * fin;
        for (int i = 0; i < fin; ++i) {
            double acc = 0.0;
            for (int o = 0; o < fout; ++o)
                acc += gp[o] * weights[static_cast<std::size_t>(o) * fin + i];
            dp[i] = acc;
        }
    }
}

void dense_backward_params(const double* dout, const double* in, double* dweights,
                           double* dbias, int n, int fin, int fout) {
    for (int o = 0; o < fout; ++o) {
        for (int i = 0; i < fin; ++i) {
            double acc = 0.0;
            for (int b = 0; b < n; ++b)
                acc += dout[static_cast<std::size_t>(b) * fout + o] *
                       in[static_cast<std::size_t>(b) * fin + i];
            dweights[static_cast<std::size_t>(o) * fin + i] = acc;
        }
    }
    for (int o = 0; o < fout; ++o) {
        double acc = 0.0;
        for (int b = 0; b < n; ++b) acc += dout[static_cast<std::size_t>(b) * fout + o];
        dbias[o] = acc;
    }
}

void maxpool2x2_forward(const double* in, double* out, std::size_t* argmax, int n,
                        int c, int h, int w) {
    const int oh = h / 2;
    const int ow = w / 2;
    const std::size_t in_plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(oh) * ow;
    for (int b = 0; b < n; ++b) {
        for (int ch = 0; ch < c; ++ch) {
            const std::size_t in_base = (static_cast<std::size_t>(b) * c + ch) * in_plane;
            const std::size_t out_base = (static_cast<std::size_t>(b) * c + ch) * out_plane;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    std::size_t best = in_base + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
                    double best_v = in[best];
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            std::size_t idx =
                                in_base + static_cast<std::size_t>(2 * oy + dy) * w + (2 * ox + dx);
                            if (in[idx] > best_v) {
                                best_v = in[idx];
                                best = idx;
                            }
                        }
                    }
                    out[out_base + static_cast<std::size_t>(oy) * ow + ox] = best_v;
                    argmax[out_base + static_cast<std::size_t>(oy) * ow + ox] = best;
                }
            }
        }
    }
}

void maxpool2x2_backward(const double* dout, const std::size_t* argmax, double* din,
                         int n, int c, int h, int w) {
    const int oh = h / 2;
    const int ow = w / 2;
    const std::size_t in_total = static_cast<std::size_t>(n) * c * h * w;
    const std::size_t out_total = static_cast<std::size_t>(n) * c * oh * ow;
    for (std::size_t k = 0; k < in_total; ++k) din[k] = 0.0;
    // Pool windows are disjoint, so each input index appears at most once.
    for (std::size_t k = 0; k < out_total; ++k) din[argmax[k]] += dout[k];
}

}  // namespace popgrid::nn::kern::serial

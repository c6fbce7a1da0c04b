#include "plabel/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "plabel/prob_label.hpp"

namespace plabel::kernels {

void dense_forward(std::span<const double> in, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> out) {
    const std::size_t n_in = in.size();
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double* w = weights.data() + j * n_in;
        double acc = bias[j];
        for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * in[i];
        out[j] = acc;
    }
}

void dense_backward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> dout, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> din) {
    const std::size_t n_in = in.size();
    if (!din.empty()) std::fill(din.begin(), din.end(), 0.0);
    for (std::size_t j = 0; j < dout.size(); ++j) {
        const double g = dout[j];
        dbias[j] += g;
        if (g == 0.0) continue;
        double* dw = dweights.data() + j * n_in;
        for (std::size_t i = 0; i < n_in; ++i) dw[i] += g * in[i];
        if (!din.empty()) {
            const double* w = weights.data() + j * n_in;
            for (std::size_t i = 0; i < n_in; ++i) din[i] += g * w[i];
        }
    }
}

namespace {

// valid output index range [lo, hi) for kernel offset k in {0,1,2}
inline void valid_range(std::size_t k, std::size_t extent, std::size_t& lo, std::size_t& hi) {
    lo = k == 0 ? 1 : 0;
    hi = k == 2 ? extent - 1 : extent;
}

}  // namespace

void conv3x3_forward(std::span<const double> in, std::size_t channels, std::size_t height,
                     std::size_t width, std::span<const double> weights, std::span<const double> bias,
                     std::size_t filters, std::span<double> out) {
    const std::size_t plane = height * width;
    for (std::size_t f = 0; f < filters; ++f) {
        double* o = out.data() + f * plane;
        std::fill(o, o + plane, bias[f]);
        for (std::size_t c = 0; c < channels; ++c) {
            const double* src = in.data() + c * plane;
            const double* w = weights.data() + (f * channels + c) * 9;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                std::size_t y0, y1;
                valid_range(ky, height, y0, y1);
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    std::size_t x0, x1;
                    valid_range(kx, width, x0, x1);
                    const double wv = w[ky * 3 + kx];
                    for (std::size_t y = y0; y < y1; ++y) {
                        const double* s = src + (y + ky - 1) * width;
                        double* d = o + y * width;
                        for (std::size_t x = x0; x < x1; ++x) d[x] += wv * s[x + kx - 1];
                    }
                }
            }
        }
    }
}

void conv3x3_backward(std::span<const double> in, std::size_t channels, std::size_t height,
                      std::size_t width, std::span<const double> weights, std::size_t filters,
                      std::span<const double> dout, std::span<double> dweights, std::span<double> dbias,
                      std::span<double> din) {
    const std::size_t plane = height * width;
    if (!din.empty()) std::fill(din.begin(), din.end(), 0.0);
    for (std::size_t f = 0; f < filters; ++f) {
        const double* g = dout.data() + f * plane;
        double bsum = 0.0;
        for (std::size_t p = 0; p < plane; ++p) bsum += g[p];
        dbias[f] += bsum;
        for (std::size_t c = 0; c < channels; ++c) {
            const double* src = in.data() + c * plane;
            const double* w = weights.data() + (f * channels + c) * 9;
            double* dw = dweights.data() + (f * channels + c) * 9;
            double* di = din.empty() ? nullptr : din.data() + c * plane;
            for (std::size_t ky = 0; ky < 3; ++ky) {
                std::size_t y0, y1;
                valid_range(ky, height, y0, y1);
                for (std::size_t kx = 0; kx < 3; ++kx) {
                    std::size_t x0, x1;
                    valid_range(kx, width, x0, x1);
                    const double wv = w[ky * 3 + kx];
                    double acc = 0.0;
                    for (std::size_t y = y0; y < y1; ++y) {
                        const std::size_t row = (y + ky - 1) * width;
                        const double* s = src + row;
                        const double* gy = g + y * width;
                        for (std::size_t x = x0; x < x1; ++x) acc += gy[x] * s[x + kx - 1];
                        if (di) {
                            double* d = di + row;
                            for (std::size_t x = x0; x < x1; ++x) d[x + kx - 1] += wv * gy[x];
                        }
                    }
                    dw[ky * 3 + kx] += acc;
                }
            }
        }
    }
}

void maxpool2_forward(std::span<const double> in, std::size_t channels, std::size_t height,
                      std::size_t width, std::span<double> out, std::span<std::size_t> argmax) {
    const std::size_t oh = height / 2, ow = width / 2;
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const std::size_t base = c * height * width + 2 * y * width + 2 * x;
                const std::size_t cand[4] = {base, base + 1, base + width, base + width + 1};
                std::size_t best = cand[0];
                for (std::size_t q = 1; q < 4; ++q)
                    if (in[cand[q]] > in[best]) best = cand[q];
                const std::size_t o = c * oh * ow + y * ow + x;
                out[o] = in[best];
                argmax[o] = best;
            }
        }
    }
}

void maxpool2_backward(std::span<const double> dout, std::span<const std::size_t> argmax,
                       std::span<double> din) {
    std::fill(din.begin(), din.end(), 0.0);
    for (std::size_t o = 0; o < dout.size(); ++o) din[argmax[o]] += dout[o];
}

void relu_forward(std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(std::span<const double> out, std::span<const double> dout, std::span<double> din) {
    for (std::size_t i = 0; i < out.size(); ++i) din[i] = out[i] > 0.0 ? dout[i] : 0.0;
}

void sigmoid_forward(std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = sigmoid(in[i]);
}

void sigmoid_backward(std::span<const double> out, std::span<const double> dout, std::span<double> din) {
    for (std::size_t i = 0; i < out.size(); ++i) din[i] = dout[i] * out[i] * (1.0 - out[i]);
}

void softmax_forward(std::span<const double> in, std::span<double> out) {
    const double top = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = std::exp(in[i] - top);
        total += out[i];
    }
    for (std::size_t i = 0; i < in.size(); ++i) out[i] /= total;
}

}  // namespace plabel::kernels

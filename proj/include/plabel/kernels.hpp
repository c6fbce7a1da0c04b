#pragma once

#include <cstddef>
#include <span>

// Single-sample layer kernels. Tensors are channel-major (C x H x W).
// Backward kernels accumulate into the weight/bias gradients and overwrite the
// input gradient.
namespace plabel::kernels {

void dense_forward(std::span<const double> in, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> out);

void dense_backward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> dout, std::span<double> dweights, std::span<double> dbias,
                    std::span<double> din);  // din may be empty

void conv3x3_forward(std::span<const double> in, std::size_t channels, std::size_t height,
                     std::size_t width, std::span<const double> weights, std::span<const double> bias,
                     std::size_t filters, std::span<double> out);

void conv3x3_backward(std::span<const double> in, std::size_t channels, std::size_t height,
                      std::size_t width, std::span<const double> weights, std::size_t filters,
                      std::span<const double> dout, std::span<double> dweights, std::span<double> dbias,
                      std::span<double> din);  // din may be empty

void maxpool2_forward(std::span<const double> in, std::size_t channels, std::size_t height,
                      std::size_t width, std::span<double> out, std::span<std::size_t> argmax);

void maxpool2_backward(std::span<const double> dout, std::span<const std::size_t> argmax,
                       std::span<double> din);

void relu_forward(std::span<const double> in, std::span<double> out);
void relu_backward(std::span<const double> out, std::span<const double> dout, std::span<double> din);
void sigmoid_forward(std::span<const double> in, std::span<double> out);
void sigmoid_backward(std::span<const double> out, std::span<const double> dout, std::span<double> din);
void softmax_forward(std::span<const double> in, std::span<double> out);

}  // namespace plabel::kernels

#pragma once

#include <cstddef>

#include "salgrain/tensor.hpp"

// 3x3 convolutions with zero padding 1, lowered to GEMM through im2col.
namespace salgrain::conv {

inline constexpr std::size_t kKernel = 3;

std::size_t output_size(std::size_t input, std::size_t stride);

// x [C,H,W], weight [O,C,3,3], bias [O] -> [O,Ho,Wo].
Tensor forward(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride);

// Accumulates into d_weight and d_bias; writes d_x when non-null.
void backward(const Tensor& x, const Tensor& weight, const Tensor& d_out, std::size_t stride, Tensor* d_x,
              Tensor& d_weight, Tensor& d_bias);

// Adjoint of forward(): x [Ci,h,w], weight [Ci,Co,3,3], bias [Co] -> [Co,out_h,out_w].
// out_h/out_w must map back to h/w under output_size(); contributions that fall
// outside the requested extent are cropped.
Tensor transposed_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
                          std::size_t out_h, std::size_t out_w);

void transposed_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out, std::size_t stride,
                         Tensor* d_x, Tensor& d_weight, Tensor& d_bias);

}  // namespace salgrain::conv

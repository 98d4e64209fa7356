#include "salgrain/conv.hpp"

#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "salgrain/error.hpp"

namespace salgrain::conv {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

struct Geometry {
  std::size_t channels, in_h, in_w, out_h, out_w, stride;
  std::size_t patch() const { return channels * kKernel * kKernel; }
  std::size_t pixels() const { return out_h * out_w; }
};

// Plain left-to-right sum; vectorized reductions depend on pointer alignment.
double row_sum(const ConstMapMatrix& m, std::size_t row) {
  const double* p = m.data() + row * static_cast<std::size_t>(m.cols());
  return std::accumulate(p, p + m.cols(), 0.0);
}

// Per-thread column buffers.
MapMatrix scratch(std::size_t slot, std::size_t rows, std::size_t cols) {
  thread_local std::vector<double> buffers[2];
  auto& buf = buffers[slot];
  if (buf.size() < rows * cols) buf.resize(rows * cols);
  return MapMatrix(buf.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// cols[c*9 + ky*3 + kx][oy*out_w + ox] = x[c][oy*s + ky - 1][ox*s + kx - 1]
MapMatrix im2col(const double* x, const Geometry& g) {
  MapMatrix cols = scratch(0, g.patch(), g.pixels());
  cols.setZero();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = x + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        double* row = cols.data() + ((c * kKernel + ky) * kKernel + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          const double* src = plane + iy * g.in_w;
          double* dst = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - 1;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ox] = src[ix];
          }
        }
      }
    }
  }
  return cols;
}

// Scatter-add inverse of im2col.
void col2im(const MapMatrix& cols, const Geometry& g, double* x) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = x + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const double* row = cols.data() + ((c * kKernel + ky) * kKernel + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - 1;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          double* dst = plane + iy * g.in_w;
          const double* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - 1;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " has shape " + shape_string(t.shape()));
  }
}

}  // namespace

std::size_t output_size(std::size_t input, std::size_t stride) { return (input - 1) / stride + 1; }

Tensor forward(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride) {
  check_rank(x, 3, "conv input");
  check_rank(weight, 4, "conv weight");
  const std::size_t out_c = weight.dim(0);
  if (weight.dim(1) != x.dim(0) || weight.dim(2) != kKernel || weight.dim(3) != kKernel ||
      bias.size() != out_c) {
    throw Error(ErrorCode::ShapeMismatch, "conv weight " + shape_string(weight.shape()) +
                                              " does not fit input " + shape_string(x.shape()));
  }
  const Geometry g{x.dim(0), x.dim(1), x.dim(2), output_size(x.dim(1), stride), output_size(x.dim(2), stride),
                   stride};
  const MapMatrix cols = im2col(x.data(), g);
  Tensor out({out_c, g.out_h, g.out_w});
  MapMatrix y(out.data(), out_c, g.pixels());
  y.noalias() = ConstMapMatrix(weight.data(), out_c, g.patch()) * cols;
  for (std::size_t o = 0; o < out_c; ++o) y.row(o).array() += bias[o];
  return out;
}

void backward(const Tensor& x, const Tensor& weight, const Tensor& d_out, std::size_t stride, Tensor* d_x,
              Tensor& d_weight, Tensor& d_bias) {
  const std::size_t out_c = weight.dim(0);
  const Geometry g{x.dim(0), x.dim(1), x.dim(2), d_out.dim(1), d_out.dim(2), stride};
  require_same_shape(d_weight, weight, "conv weight gradient");
  const MapMatrix cols = im2col(x.data(), g);
  ConstMapMatrix dy(d_out.data(), out_c, g.pixels());
  MapMatrix(d_weight.data(), out_c, g.patch()).noalias() += dy * cols.transpose();
  for (std::size_t o = 0; o < out_c; ++o) d_bias[o] += row_sum(dy, o);
  if (d_x) {
    MapMatrix d_cols = scratch(1, g.patch(), g.pixels());
    d_cols.noalias() = ConstMapMatrix(weight.data(), out_c, g.patch()).transpose() * dy;
    *d_x = Tensor(x.shape());
    col2im(d_cols, g, d_x->data());
  }
}

Tensor transposed_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride,
                          std::size_t out_h, std::size_t out_w) {
  check_rank(x, 3, "transposed conv input");
  check_rank(weight, 4, "transposed conv weight");
  const std::size_t in_c = x.dim(0);
  const std::size_t out_c = weight.dim(1);
  if (weight.dim(0) != in_c || weight.dim(2) != kKernel || weight.dim(3) != kKernel || bias.size() != out_c ||
      output_size(out_h, stride) != x.dim(1) || output_size(out_w, stride) != x.dim(2)) {
    throw Error(ErrorCode::ShapeMismatch, "transposed conv weight " + shape_string(weight.shape()) +
                                              " does not fit input " + shape_string(x.shape()));
  }
  // The output grid plays the role of a regular conv input.
  const Geometry g{out_c, out_h, out_w, x.dim(1), x.dim(2), stride};
  MapMatrix cols = scratch(1, g.patch(), g.pixels());
  cols.noalias() = ConstMapMatrix(weight.data(), in_c, g.patch()).transpose() * ConstMapMatrix(x.data(), in_c, g.pixels());
  Tensor out({out_c, out_h, out_w});
  col2im(cols, g, out.data());
  MapMatrix y(out.data(), out_c, out_h * out_w);
  for (std::size_t o = 0; o < out_c; ++o) y.row(o).array() += bias[o];
  return out;
}

void transposed_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out, std::size_t stride,
                         Tensor* d_x, Tensor& d_weight, Tensor& d_bias) {
  const std::size_t in_c = x.dim(0);
  const std::size_t out_c = weight.dim(1);
  require_same_shape(d_weight, weight, "transposed conv weight gradient");
  const Geometry g{out_c, d_out.dim(1), d_out.dim(2), x.dim(1), x.dim(2), stride};
  const MapMatrix d_cols = im2col(d_out.data(), g);
  ConstMapMatrix xm(x.data(), in_c, g.pixels());
  MapMatrix(d_weight.data(), in_c, g.patch()).noalias() += xm * d_cols.transpose();
  ConstMapMatrix dy(d_out.data(), out_c, g.in_h * g.in_w);
  for (std::size_t o = 0; o < out_c; ++o) d_bias[o] += row_sum(dy, o);
  if (d_x) {
    *d_x = Tensor(x.shape());
    MapMatrix(d_x->data(), in_c, g.pixels()).noalias() = ConstMapMatrix(weight.data(), in_c, g.patch()) * d_cols;
  }
}

}  // namespace salgrain::conv

#include <algorithm>
#include <cmath>

#include "imputeinr/errors.hpp"
#include "imputeinr/kernels.hpp"

namespace imputeinr::kernels::serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += a(i, p) * b(p, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ShapeError("matmul_nt: inner dimensions differ");
  Matrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += a(i, p) * b(j, p);
      c(i, j) = acc;
    }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw ShapeError("matmul_tn: inner dimensions differ");
  Matrix c(a.cols, b.cols);
  for (std::size_t i = 0; i < a.cols; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < a.rows; ++p) acc += a(p, i) * b(p, j);
      c(i, j) = acc;
    }
  return c;
}

Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad) {
  const std::size_t c_in = x.rows;
  const std::size_t t_in = x.cols;
  if (weight.cols != c_in * k || bias.rows != weight.rows || bias.cols != 1)
    throw ShapeError("conv1d: weight/bias shape does not match input channels and kernel size");
  const std::size_t t_out = conv_output_length(t_in, k, pad);
  Matrix y(weight.rows, t_out);
  for (std::size_t o = 0; o < weight.rows; ++o)
    for (std::size_t t = 0; t < t_out; ++t) {
      double acc = bias(o, 0);
      for (std::size_t c = 0; c < c_in; ++c)
        for (std::size_t j = 0; j < k; ++j) {
          const long s = static_cast<long>(t + j) - static_cast<long>(pad);
          if (s < 0 || s >= static_cast<long>(t_in)) continue;
          acc += weight(o, c * k + j) * x(c, static_cast<std::size_t>(s));
        }
      y(o, t) = acc;
    }
  return y;
}

Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad) {
  const std::size_t c_in = x.rows;
  const std::size_t t_in = x.cols;
  Matrix dw(dy.rows, c_in * k);
  for (std::size_t o = 0; o < dy.rows; ++o)
    for (std::size_t c = 0; c < c_in; ++c)
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < dy.cols; ++t) {
          const long s = static_cast<long>(t + j) - static_cast<long>(pad);
          if (s < 0 || s >= static_cast<long>(t_in)) continue;
          acc += dy(o, t) * x(c, static_cast<std::size_t>(s));
        }
        dw(o, c * k + j) = acc;
      }
  return dw;
}

Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad) {
  Matrix dx(c_in, t_in);
  for (std::size_t c = 0; c < c_in; ++c)
    for (std::size_t s = 0; s < t_in; ++s) {
      double acc = 0.0;
      for (std::size_t o = 0; o < dy.rows; ++o)
        for (std::size_t j = 0; j < k; ++j) {
          const long t = static_cast<long>(s + pad) - static_cast<long>(j);
          if (t < 0 || t >= static_cast<long>(dy.cols)) continue;
          acc += weight(o, c * k + j) * dy(o, static_cast<std::size_t>(t));
        }
      dx(c, s) = acc;
    }
  return dx;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix y(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < x.cols; ++c) mx = std::max(mx, x(r, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
      y(r, c) = std::exp(x(r, c) - mx);
      sum += y(r, c);
    }
    for (std::size_t c = 0; c < x.cols; ++c) y(r, c) /= sum;
  }
  return y;
}

}  // namespace imputeinr::kernels::serial

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "imputeinr/errors.hpp"
#include "imputeinr/kernels.hpp"

namespace imputeinr::kernels {

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
  Matrix c(a.rows, b.cols);
  const long m = static_cast<long>(a.rows);
  // i-p-j order: each c(i, j) still accumulates p = 0, 1, ... starting from 0.
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    double* crow = c.data.data() + i * c.cols;
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double aip = a(i, p);
      const double* brow = b.data.data() + p * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols) throw ShapeError("matmul_nt: inner dimensions differ");
  Matrix c(a.rows, b.rows);
  const long m = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t p = 0; p < a.cols; ++p) acc += arow[p] * brow[p];
      c(i, j) = acc;
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw ShapeError("matmul_tn: inner dimensions differ");
  Matrix c(a.cols, b.cols);
  const long m = static_cast<long>(a.cols);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < m; ++i) {
    double* crow = c.data.data() + i * c.cols;
    for (std::size_t p = 0; p < a.rows; ++p) {
      const double api = a(p, i);
      const double* brow = b.data.data() + p * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += api * brow[j];
    }
  }
  return c;
}

Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad) {
  const std::size_t c_in = x.rows;
  const long t_in = static_cast<long>(x.cols);
  if (weight.cols != c_in * k || bias.rows != weight.rows || bias.cols != 1)
    throw ShapeError("conv1d: weight/bias shape does not match input channels and kernel size");
  const std::size_t t_out = conv_output_length(x.cols, k, pad);
  Matrix y(weight.rows, t_out);
  const long n_out = static_cast<long>(weight.rows * t_out);
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < n_out; ++idx) {
    const std::size_t o = static_cast<std::size_t>(idx) / t_out;
    const std::size_t t = static_cast<std::size_t>(idx) % t_out;
    double acc = bias(o, 0);
    const double* wrow = weight.data.data() + o * weight.cols;
    for (std::size_t c = 0; c < c_in; ++c) {
      const double* xrow = x.data.data() + c * x.cols;
      for (std::size_t j = 0; j < k; ++j) {
        const long s = static_cast<long>(t + j) - static_cast<long>(pad);
        if (s < 0 || s >= t_in) continue;
        acc += wrow[c * k + j] * xrow[s];
      }
    }
    y.data[idx] = acc;
  }
  return y;
}

Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad) {
  const std::size_t c_in = x.rows;
  const long t_in = static_cast<long>(x.cols);
  Matrix dw(dy.rows, c_in * k);
  const long n_out = static_cast<long>(dw.size());
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < n_out; ++idx) {
    const std::size_t o = static_cast<std::size_t>(idx) / dw.cols;
    const std::size_t c = (static_cast<std::size_t>(idx) % dw.cols) / k;
    const std::size_t j = static_cast<std::size_t>(idx) % k;
    double acc = 0.0;
    for (std::size_t t = 0; t < dy.cols; ++t) {
      const long s = static_cast<long>(t + j) - static_cast<long>(pad);
      if (s < 0 || s >= t_in) continue;
      acc += dy(o, t) * x(c, static_cast<std::size_t>(s));
    }
    dw.data[idx] = acc;
  }
  return dw;
}

Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad) {
  Matrix dx(c_in, t_in);
  const long n_out = static_cast<long>(dx.size());
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < n_out; ++idx) {
    const std::size_t c = static_cast<std::size_t>(idx) / t_in;
    const std::size_t s = static_cast<std::size_t>(idx) % t_in;
    double acc = 0.0;
    for (std::size_t o = 0; o < dy.rows; ++o)
      for (std::size_t j = 0; j < k; ++j) {
        const long t = static_cast<long>(s + pad) - static_cast<long>(j);
        if (t < 0 || t >= static_cast<long>(dy.cols)) continue;
        acc += weight(o, c * k + j) * dy(o, static_cast<std::size_t>(t));
      }
    dx.data[idx] = acc;
  }
  return dx;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix y(x.rows, x.cols);
  const long rows = static_cast<long>(x.rows);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
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

}  // namespace parallel

namespace {
// Below this many multiply-adds the fork/join cost outweighs the work.
constexpr std::size_t kParallelThreshold = 1 << 15;

bool use_parallel(std::size_t work) {
  return work >= kParallelThreshold && !omp_in_parallel() && omp_get_max_threads() > 1;
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  return use_parallel(a.rows * a.cols * b.cols) ? parallel::matmul(a, b) : serial::matmul(a, b);
}
Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  return use_parallel(a.rows * a.cols * b.rows) ? parallel::matmul_nt(a, b)
                                                : serial::matmul_nt(a, b);
}
Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  return use_parallel(a.rows * a.cols * b.cols) ? parallel::matmul_tn(a, b)
                                                : serial::matmul_tn(a, b);
}
Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad) {
  return use_parallel(weight.size() * x.cols) ? parallel::conv1d(x, weight, bias, k, pad)
                                              : serial::conv1d(x, weight, bias, k, pad);
}
Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad) {
  return use_parallel(dy.rows * x.rows * k * dy.cols) ? parallel::conv1d_grad_weight(x, dy, k, pad)
                                                      : serial::conv1d_grad_weight(x, dy, k, pad);
}
Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad) {
  return use_parallel(weight.size() * t_in)
             ? parallel::conv1d_grad_input(weight, dy, c_in, t_in, k, pad)
             : serial::conv1d_grad_input(weight, dy, c_in, t_in, k, pad);
}
Matrix softmax_rows(const Matrix& x) {
  return use_parallel(x.size() * 8) ? parallel::softmax_rows(x) : serial::softmax_rows(x);
}

void set_num_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

void configure_threads_from_env() {
  if (const char* env = std::getenv("IMPUTEINR_THREADS")) {
    try {
      set_num_threads(std::stoi(env));
    } catch (const std::exception&) {
      // unparsable value: keep the runtime default
    }
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace imputeinr::kernels

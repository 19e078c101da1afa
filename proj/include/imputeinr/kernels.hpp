#pragma once

#include <cstddef>

#include "imputeinr/matrix.hpp"

// Dense kernels used by the autodiff tape. Each kernel exists twice: a serial
// reference in `serial` and an OpenMP version in `parallel`. Both accumulate
// every output element in the same order, so their results are bit-identical
// and the choice of backend never changes training output.
namespace imputeinr::kernels {

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b);     // a · b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a · bᵀ
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // aᵀ · b

/// Cross-correlation with zero padding and stride 1.
/// x: C_in×T, weight: C_out×(C_in·k) laid out [c][j], bias: C_out×1.
Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad);
Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad);
Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad);

Matrix softmax_rows(const Matrix& x);

}  // namespace serial

namespace parallel {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad);
Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad);
Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad);
Matrix softmax_rows(const Matrix& x);

}  // namespace parallel

// Dispatching entry points: OpenMP for large problems, serial otherwise.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, std::size_t k,
              std::size_t pad);
Matrix conv1d_grad_weight(const Matrix& x, const Matrix& dy, std::size_t k, std::size_t pad);
Matrix conv1d_grad_input(const Matrix& weight, const Matrix& dy, std::size_t c_in, std::size_t t_in,
                         std::size_t k, std::size_t pad);
Matrix softmax_rows(const Matrix& x);

/// Output length of a stride-1 convolution: T − k + 2·pad + 1.
constexpr std::size_t conv_output_length(std::size_t t, std::size_t k, std::size_t pad) {
  return t + 2 * pad + 1 - k;
}

/// Caps OpenMP threads; 0 leaves the runtime default. Reads IMPUTEINR_THREADS when called
/// through configure_threads_from_env().
void set_num_threads(int n);
void configure_threads_from_env();
int max_threads();

}  // namespace imputeinr::kernels

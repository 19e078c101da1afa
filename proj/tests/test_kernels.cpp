#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "imputeinr/kernels.hpp"

using namespace imputeinr;
namespace s = imputeinr::kernels::serial;
namespace p = imputeinr::kernels::parallel;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("matmul variants agree with a naive triple loop") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 1 + rng.index(20), k = 1 + rng.index(20), n = 1 + rng.index(20);
    const Matrix a = testing::random_matrix(m, k, rng);
    const Matrix b = testing::random_matrix(k, n, rng);
    const Matrix ref = naive_matmul(a, b);
    CHECK(max_abs_diff(s::matmul(a, b), ref) < 1e-12);
    CHECK(max_abs_diff(s::matmul_nt(a, transpose(b)), ref) < 1e-12);
    CHECK(max_abs_diff(s::matmul_tn(transpose(a), b), ref) < 1e-12);
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  Rng rng(2);
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t m = 1 + rng.index(70), k = 1 + rng.index(70), n = 1 + rng.index(70);
    const Matrix a = testing::random_matrix(m, k, rng);
    const Matrix b = testing::random_matrix(k, n, rng);
    const Matrix bt = testing::random_matrix(n, k, rng);
    const Matrix at = testing::random_matrix(k, m, rng);
    CHECK(s::matmul(a, b) == p::matmul(a, b));
    CHECK(s::matmul_nt(a, bt) == p::matmul_nt(a, bt));
    CHECK(s::matmul_tn(at, b) == p::matmul_tn(at, b));
    CHECK(s::softmax_rows(a) == p::softmax_rows(a));

    const std::size_t c_in = 1 + rng.index(6), c_out = 1 + rng.index(6), t = 8 + rng.index(60);
    const std::size_t kk = 2 * rng.index(4) + 1, pad = (kk - 1) / 2;
    const Matrix x = testing::random_matrix(c_in, t, rng);
    const Matrix w = testing::random_matrix(c_out, c_in * kk, rng);
    const Matrix bias = testing::random_matrix(c_out, 1, rng);
    const Matrix dy = testing::random_matrix(c_out, t, rng);
    CHECK(s::conv1d(x, w, bias, kk, pad) == p::conv1d(x, w, bias, kk, pad));
    CHECK(s::conv1d_grad_weight(x, dy, kk, pad) == p::conv1d_grad_weight(x, dy, kk, pad));
    CHECK(s::conv1d_grad_input(w, dy, c_in, t, kk, pad) == p::conv1d_grad_input(w, dy, c_in, t, kk, pad));
  }
}

TEST_CASE("hand convolution with zero padding") {
  const Matrix x(1, 5, 1.0);
  const Matrix w(1, 3, 1.0);
  const Matrix b(1, 1, 0.0);
  const Matrix y = s::conv1d(x, w, b, 3, 1);
  CHECK(y.data == std::vector<double>{2, 3, 3, 3, 2});
  CHECK(p::conv1d(x, w, b, 3, 1) == y);
}

TEST_CASE("same padding preserves length") {
  for (std::size_t k : {3, 5, 7}) CHECK(kernels::conv_output_length(96, k, (k - 1) / 2) == 96);
  CHECK(kernels::conv_output_length(10, 3, 0) == 8);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(3);
  const Matrix x = testing::random_matrix(9, 13, rng, -30, 30);
  const Matrix y = s::softmax_rows(x);
  for (std::size_t r = 0; r < y.rows; ++r) {
    double sum = 0.0;
    for (double v : y.row(r)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("thread cap") {
  const int before = kernels::max_threads();
  kernels::set_num_threads(1);
  CHECK(kernels::max_threads() == 1);
  kernels::set_num_threads(before);
}

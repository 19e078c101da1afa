// Serial reference vs OpenMP kernels: wall time per call and a bit-exactness check.
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "imputeinr/kernels.hpp"
#include "imputeinr/rng.hpp"

using namespace imputeinr;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

double seconds_per_call(const std::function<Matrix()>& f, Matrix& result) {
  using clock = std::chrono::steady_clock;
  result = f();
  int reps = 0;
  const auto t0 = clock::now();
  double elapsed = 0.0;
  do {
    result = f();
    ++reps;
    elapsed = std::chrono::duration<double>(clock::now() - t0).count();
  } while (elapsed < 0.3);
  return elapsed / reps;
}

void report(const std::string& name, const std::function<Matrix()>& serial,
            const std::function<Matrix()>& parallel) {
  Matrix a, b;
  const double ts = seconds_per_call(serial, a);
  const double tp = seconds_per_call(parallel, b);
  std::printf("%-28s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name.c_str(), ts * 1e3,
              tp * 1e3, ts / tp, a == b ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  kernels::configure_threads_from_env();
  std::printf("threads: %d\n", kernels::max_threads());
  Rng rng(7);
  namespace s = kernels::serial;
  namespace p = kernels::parallel;

  for (std::size_t n : {64, 128, 256}) {
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    const std::string tag = std::to_string(n) + "x" + std::to_string(n);
    report("matmul " + tag, [&] { return s::matmul(a, b); }, [&] { return p::matmul(a, b); });
    report("matmul_nt " + tag, [&] { return s::matmul_nt(a, b); }, [&] { return p::matmul_nt(a, b); });
    report("matmul_tn " + tag, [&] { return s::matmul_tn(a, b); }, [&] { return p::matmul_tn(a, b); });
  }

  for (std::size_t t : {96, 768}) {
    const std::size_t c_in = 12, c_out = 16, k = 7, pad = 3;
    const Matrix x = random_matrix(c_in, t, rng);
    const Matrix w = random_matrix(c_out, c_in * k, rng);
    const Matrix bias = random_matrix(c_out, 1, rng);
    const Matrix dy = random_matrix(c_out, t, rng);
    const std::string tag = "T=" + std::to_string(t);
    report("conv1d " + tag, [&] { return s::conv1d(x, w, bias, k, pad); },
           [&] { return p::conv1d(x, w, bias, k, pad); });
    report("conv1d_grad_weight " + tag, [&] { return s::conv1d_grad_weight(x, dy, k, pad); },
           [&] { return p::conv1d_grad_weight(x, dy, k, pad); });
    report("conv1d_grad_input " + tag, [&] { return s::conv1d_grad_input(w, dy, c_in, t, k, pad); },
           [&] { return p::conv1d_grad_input(w, dy, c_in, t, k, pad); });
  }

  const Matrix logits = random_matrix(512, 512, rng);
  report("softmax_rows 512x512", [&] { return s::softmax_rows(logits); },
         [&] { return p::softmax_rows(logits); });
  return 0;
}

#include "imputeinr/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "imputeinr/errors.hpp"
#include "imputeinr/kernels.hpp"

namespace imputeinr::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Pullback pullback) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(pullback));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Pullback pullback) {
  bool needs = false;
  for (const Var& v : inputs) {
    if (v.tape != this) throw ShapeError("autodiff: operands recorded on different tapes");
    needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(pullback) : Pullback{}});
  return Var{this, nodes_.size() - 1};
}

Matrix* Tape::adjoint_for(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows, n.value.cols);
  return &n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::backward(Var output) {
  if (output.tape != this) throw ShapeError("backward: output belongs to another tape");
  if (nodes_[output.id].value.size() != 1) throw ShapeError("backward: output must be 1x1");
  for (Node& n : nodes_) n.grad = Matrix();
  Matrix* seed = adjoint_for(output.id);
  if (!seed) return;
  (*seed)(0, 0) = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.pullback && !n.grad.empty()) n.pullback(*this, i);
  }
}

namespace {

void accumulate(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

Tape& tape_of(Var a) {
  if (!a.tape) throw ShapeError("autodiff: operand has no tape");
  return *a.tape;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

template <typename F>
Var unary_elementwise(Var a, F f, std::function<double(double x, double y)> dydx) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = f(x.data[i]);
  return t.record(std::move(y), {a}, [a = a.id, dydx = std::move(dydx)](Tape& tp, std::size_t self) {
    Matrix* da = tp.adjoint_for(a);
    if (!da) return;
    const Matrix& x = tp.value(a);
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.adjoint(self);
    for (std::size_t i = 0; i < x.size(); ++i) da->data[i] += g.data[i] * dydx(x.data[i], y.data[i]);
  });
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Matrix y = a.value();
  accumulate(y, b.value());
  return tape_of(a).record(std::move(y), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a)) accumulate(*da, g);
    if (Matrix* db = t.adjoint_for(b)) accumulate(*db, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Matrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] -= b.value().data[i];
  return tape_of(a).record(std::move(y), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a)) accumulate(*da, g);
    if (Matrix* db = t.adjoint_for(b))
      for (std::size_t i = 0; i < g.size(); ++i) db->data[i] -= g.data[i];
  });
}

Var hadamard(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] *= b.value().data[i];
  return tape_of(a).record(std::move(y), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a))
      for (std::size_t i = 0; i < g.size(); ++i) da->data[i] += g.data[i] * t.value(b).data[i];
    if (Matrix* db = t.adjoint_for(b))
      for (std::size_t i = 0; i < g.size(); ++i) db->data[i] += g.data[i] * t.value(a).data[i];
  });
}

Var scale(Var a, double s) {
  Matrix y = a.value();
  for (double& v : y.data) v *= s;
  return tape_of(a).record(std::move(y), {a}, [a = a.id, s](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a))
      for (std::size_t i = 0; i < g.size(); ++i) da->data[i] += s * g.data[i];
  });
}

Var add_row_bias(Var x, Var b) {
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.rows != 1 || bv.cols != xv.cols)
    throw ShapeError("add_row_bias: bias " + shape_str(bv) + " for input " + shape_str(xv));
  Matrix y = xv;
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += bv(0, c);
  return tape_of(x).record(std::move(y), {x, b}, [x = x.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* dx = t.adjoint_for(x)) accumulate(*dx, g);
    if (Matrix* db = t.adjoint_for(b))
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) (*db)(0, c) += g(r, c);
  });
}

Var add_col_bias(Var x, Var b) {
  const Matrix& xv = x.value();
  const Matrix& bv = b.value();
  if (bv.cols != 1 || bv.rows != xv.rows)
    throw ShapeError("add_col_bias: bias " + shape_str(bv) + " for input " + shape_str(xv));
  Matrix y = xv;
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y(r, c) += bv(r, 0);
  return tape_of(x).record(std::move(y), {x, b}, [x = x.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* dx = t.adjoint_for(x)) accumulate(*dx, g);
    if (Matrix* db = t.adjoint_for(b))
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) (*db)(r, 0) += g(r, c);
  });
}

Var matmul(Var a, Var b) {
  Matrix y = kernels::matmul(a.value(), b.value());
  return tape_of(a).record(std::move(y), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a)) accumulate(*da, kernels::matmul_nt(g, t.value(b)));
    if (Matrix* db = t.adjoint_for(b)) accumulate(*db, kernels::matmul_tn(t.value(a), g));
  });
}

Var matmul_nt(Var a, Var b) {
  Matrix y = kernels::matmul_nt(a.value(), b.value());
  return tape_of(a).record(std::move(y), {a, b}, [a = a.id, b = b.id](Tape& t, std::size_t self) {
    const Matrix& g = t.adjoint(self);
    if (Matrix* da = t.adjoint_for(a)) accumulate(*da, kernels::matmul(g, t.value(b)));
    if (Matrix* db = t.adjoint_for(b)) accumulate(*db, kernels::matmul_tn(g, t.value(a)));
  });
}

Var sin(Var a) {
  return unary_elementwise(
      a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var relu(Var a) {
  return unary_elementwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  return unary_elementwise(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); },
      [](double x, double) {
        const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
        return cdf + x * pdf;
      });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = x.value();
  const std::size_t n = xv.cols;
  if (gamma.value().rows != 1 || gamma.value().cols != n || !beta.value().same_shape(gamma.value()))
    throw ShapeError("layer_norm_rows: gamma/beta must be 1x" + std::to_string(n));
  Matrix xhat(xv.rows, n);
  Matrix inv_std(xv.rows, 1);
  Matrix y(xv.rows, n);
  for (std::size_t r = 0; r < xv.rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < n; ++c) mean += xv(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std(r, 0) = inv;
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (xv(r, c) - mean) * inv;
      y(r, c) = xhat(r, c) * gamma.value()(0, c) + beta.value()(0, c);
    }
  }
  return tape_of(x).record(
      std::move(y), {x, gamma, beta},
      [x = x.id, gm = gamma.id, bt = beta.id, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Matrix& g = t.adjoint(self);
        const Matrix& gv = t.value(gm);
        const std::size_t n = g.cols;
        if (Matrix* db = t.adjoint_for(bt))
          for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < n; ++c) (*db)(0, c) += g(r, c);
        if (Matrix* dg = t.adjoint_for(gm))
          for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < n; ++c) (*dg)(0, c) += g(r, c) * xhat(r, c);
        if (Matrix* dx = t.adjoint_for(x)) {
          for (std::size_t r = 0; r < g.rows; ++r) {
            double sum_d = 0.0;
            double sum_dx = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
              const double d = g(r, c) * gv(0, c);
              sum_d += d;
              sum_dx += d * xhat(r, c);
            }
            const double k = inv_std(r, 0) / static_cast<double>(n);
            for (std::size_t c = 0; c < n; ++c) {
              const double d = g(r, c) * gv(0, c);
              (*dx)(r, c) += k * (static_cast<double>(n) * d - sum_d - xhat(r, c) * sum_dx);
            }
          }
        }
      });
}

Var softmax_rows(Var x) {
  Matrix y = kernels::softmax_rows(x.value());
  return tape_of(x).record(std::move(y), {x}, [x = x.id](Tape& t, std::size_t self) {
    Matrix* dx = t.adjoint_for(x);
    if (!dx) return;
    const Matrix& y = t.value(self);
    const Matrix& g = t.adjoint(self);
    for (std::size_t r = 0; r < y.rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols; ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols; ++c) (*dx)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Matrix& xv = x.value();
  if (begin + count > xv.rows) throw ShapeError("slice_rows: range out of bounds");
  Matrix y(count, xv.cols);
  std::copy(xv.data.begin() + begin * xv.cols, xv.data.begin() + (begin + count) * xv.cols,
            y.data.begin());
  return tape_of(x).record(std::move(y), {x}, [x = x.id, begin](Tape& t, std::size_t self) {
    Matrix* dx = t.adjoint_for(x);
    if (!dx) return;
    const Matrix& g = t.adjoint(self);
    for (std::size_t i = 0; i < g.size(); ++i) dx->data[begin * g.cols + i] += g.data[i];
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Matrix& xv = x.value();
  if (begin + count > xv.cols) throw ShapeError("slice_cols: range out of bounds");
  Matrix y(xv.rows, count);
  for (std::size_t r = 0; r < xv.rows; ++r)
    for (std::size_t c = 0; c < count; ++c) y(r, c) = xv(r, begin + c);
  return tape_of(x).record(std::move(y), {x}, [x = x.id, begin](Tape& t, std::size_t self) {
    Matrix* dx = t.adjoint_for(x);
    if (!dx) return;
    const Matrix& g = t.adjoint(self);
    for (std::size_t r = 0; r < g.rows; ++r)
      for (std::size_t c = 0; c < g.cols; ++c) (*dx)(r, begin + c) += g(r, c);
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix y(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), y.data.begin() + offset);
    offset += p.value().size();
    ids.push_back(p.id);
  }
  return tape_of(parts.front())
      .record(std::move(y), parts, [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Matrix& g = t.adjoint(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
          const std::size_t n = t.value(id).size();
          if (Matrix* d = t.adjoint_for(id))
            for (std::size_t i = 0; i < n; ++i) d->data[i] += g.data[offset + i];
          offset += n;
        }
      });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  std::vector<std::size_t> ids;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols; ++c) y(r, offset + c) = v(r, c);
    offset += v.cols;
    ids.push_back(p.id);
  }
  return tape_of(parts.front())
      .record(std::move(y), parts, [ids = std::move(ids)](Tape& t, std::size_t self) {
        const Matrix& g = t.adjoint(self);
        std::size_t offset = 0;
        for (std::size_t id : ids) {
          const std::size_t w = t.value(id).cols;
          if (Matrix* d = t.adjoint_for(id))
            for (std::size_t r = 0; r < g.rows; ++r)
              for (std::size_t c = 0; c < w; ++c) (*d)(r, c) += g(r, offset + c);
          offset += w;
        }
      });
}

Var reshape(Var x, std::size_t r, std::size_t c) {
  if (r * c != x.value().size()) throw ShapeError("reshape: element count changes");
  Matrix y(r, c, x.value().data);
  return tape_of(x).record(std::move(y), {x}, [x = x.id](Tape& t, std::size_t self) {
    if (Matrix* dx = t.adjoint_for(x)) accumulate(*dx, t.adjoint(self));
  });
}

Var conv1d(Var x, Var weight, Var bias, std::size_t kernel, std::size_t pad) {
  Matrix y = kernels::conv1d(x.value(), weight.value(), bias.value(), kernel, pad);
  return tape_of(x).record(
      std::move(y), {x, weight, bias},
      [x = x.id, w = weight.id, b = bias.id, kernel, pad](Tape& t, std::size_t self) {
        const Matrix& g = t.adjoint(self);
        if (Matrix* db = t.adjoint_for(b))
          for (std::size_t o = 0; o < g.rows; ++o)
            for (std::size_t s = 0; s < g.cols; ++s) (*db)(o, 0) += g(o, s);
        if (Matrix* dw = t.adjoint_for(w))
          accumulate(*dw, kernels::conv1d_grad_weight(t.value(x), g, kernel, pad));
        if (Matrix* dx = t.adjoint_for(x)) {
          const Matrix& xv = t.value(x);
          accumulate(*dx, kernels::conv1d_grad_input(t.value(w), g, xv.rows, xv.cols, kernel, pad));
        }
      });
}

Var patchify(Var x, std::size_t patch_len) {
  const Matrix& xv = x.value();
  if (patch_len == 0 || xv.cols % patch_len != 0)
    throw PatchError("patch length " + std::to_string(patch_len) + " does not divide T=" +
                     std::to_string(xv.cols));
  const std::size_t m = xv.cols / patch_len;
  Matrix y(m, xv.rows * patch_len);
  for (std::size_t tok = 0; tok < m; ++tok)
    for (std::size_t c = 0; c < xv.rows; ++c)
      for (std::size_t p = 0; p < patch_len; ++p) y(tok, c * patch_len + p) = xv(c, tok * patch_len + p);
  return tape_of(x).record(std::move(y), {x}, [x = x.id, patch_len](Tape& t, std::size_t self) {
    Matrix* dx = t.adjoint_for(x);
    if (!dx) return;
    const Matrix& g = t.adjoint(self);
    for (std::size_t tok = 0; tok < g.rows; ++tok)
      for (std::size_t c = 0; c < dx->rows; ++c)
        for (std::size_t p = 0; p < patch_len; ++p)
          (*dx)(c, tok * patch_len + p) += g(tok, c * patch_len + p);
  });
}

Var masked_mse(Var pred, const Matrix& target, const Matrix& miss) {
  const Matrix& pv = pred.value();
  require_same_shape(pv, target, "masked_mse target");
  require_same_shape(pv, miss, "masked_mse mask");
  double count = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (miss.data[i] == 0.0) continue;
    const double d = pv.data[i] - target.data[i];
    total += d * d;
    count += 1.0;
  }
  if (count == 0.0) throw EmptyMaskSet("masked_mse: no scored positions");
  Matrix y(1, 1, total / count);
  return tape_of(pred).record(
      std::move(y), {pred}, [p = pred.id, target, miss, count](Tape& t, std::size_t self) {
        Matrix* dp = t.adjoint_for(p);
        if (!dp) return;
        const double g = t.adjoint(self)(0, 0) * 2.0 / count;
        const Matrix& pv = t.value(p);
        for (std::size_t i = 0; i < pv.size(); ++i)
          if (miss.data[i] != 0.0) dp->data[i] += g * (pv.data[i] - target.data[i]);
      });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  return tape_of(x).record(Matrix(1, 1, s), {x}, [x = x.id](Tape& t, std::size_t self) {
    Matrix* dx = t.adjoint_for(x);
    if (!dx) return;
    const double g = t.adjoint(self)(0, 0);
    for (double& v : dx->data) v += g;
  });
}

}  // namespace imputeinr::ad

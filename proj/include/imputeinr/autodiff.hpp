#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "imputeinr/matrix.hpp"

// Reverse-mode differentiation over a recorded tape of matrix operations.
//
// A Tape is built once per forward pass; every op appends a node holding its value and a
// pullback that scatters the node's adjoint into its inputs. Nodes that do not depend on
// any variable skip their pullback. Tapes are single-threaded; run independent forward
// passes on independent tapes.
namespace imputeinr::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
};

class Tape {
 public:
  using Pullback = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix value);
  /// Leaf whose gradient is tracked.
  Var variable(Matrix value);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward() output with respect to `v` (zeros if unreached).
  Matrix grad(Var v) const;

  /// Seeds d(output)/d(output) = 1 and runs all pullbacks. `output` must be 1×1.
  void backward(Var output);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op-author interface.
  Var record(Matrix value, std::initializer_list<Var> inputs, Pullback pullback);
  Var record(Matrix value, std::span<const Var> inputs, Pullback pullback);
  const Matrix& adjoint(std::size_t id) const { return nodes_[id].grad; }
  /// Adjoint buffer of `id`, allocated (zeroed) on first touch. Null when `id` needs no grad.
  Matrix* adjoint_for(std::size_t id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Pullback pullback;
  };
  std::vector<Node> nodes_;
};

// ---- ops ----------------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
/// x (R×C) + b (1×C) broadcast down the rows.
Var add_row_bias(Var x, Var b);
/// x (R×C) + b (R×1) broadcast across the columns.
Var add_col_bias(Var x, Var b);
Var matmul(Var a, Var b);
/// a · bᵀ, the usual `x Wᵀ` of a linear layer with W stored out×in.
Var matmul_nt(Var a, Var b);

Var sin(Var a);
Var relu(Var a);
/// Exact GELU, x·Φ(x).
Var gelu(Var a);

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);
Var softmax_rows(Var x);

Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Row-major reinterpretation to r×c.
Var reshape(Var x, std::size_t r, std::size_t c);

Var conv1d(Var x, Var weight, Var bias, std::size_t kernel, std::size_t pad);
/// C×T → (T/P)×(C·P); token m is the flattened block x[:, m·P:(m+1)·P], channel-major.
Var patchify(Var x, std::size_t patch_len);

/// Σ miss·(pred − target)² / Σ miss as a 1×1 node.
Var masked_mse(Var pred, const Matrix& target, const Matrix& miss);
Var sum(Var x);

}  // namespace imputeinr::ad

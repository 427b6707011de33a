#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "parcelplan/nn/matrix.hpp"

namespace parcelplan::nn {

// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }
};

// Per-node neighbor lists over local indices; each list contains the node itself.
struct Neighborhoods {
  std::vector<std::vector<std::size_t>> lists;

  std::size_t size() const { return lists.size(); }
};

class Tape;

// Handle to a node recorded on a Tape. Valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records a forward computation and replays it backwards. Nodes are appended
// in evaluation order, so parents always precede children and reverse order
// is a valid topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Gradients reaching this node are added to p.grad by backward(). While
  // frozen, param() records a constant copy instead.
  Var param(Parameter& p);
  void set_frozen(bool frozen) { frozen_ = frozen; }

  // Reverse-mode accumulation from a 1x1 root.
  void backward(Var root);

  // --- used by op implementations -----------------------------------------
  Var record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  Matrix& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Parameter* param = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  bool frozen_ = false;
};

// --- elementary ops ----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var matmul(Var a, Var b);
Var matmul_bt(Var x, Var w);  // x * w^T
Var add_row(Var x, Var bias);  // bias (1 x cols) broadcast over rows
Var sum(Var a);               // 1x1
Var mean_rows(Var a);         // 1 x cols
// Row means over consecutive blocks [offsets[b], offsets[b+1]); B x cols.
Var segment_mean(Var a, std::vector<std::size_t> offsets);
Var select_row(Var a, std::size_t r);
Var concat_cols(Var a, Var b);
Var elu(Var a);
Var leaky_relu(Var a, double slope);
Var softmax_rows(Var a);

// --- graph attention ---------------------------------------------------------

// alpha[i][k] is the weight of neighbor lists[i][k] in node i's aggregate.
std::vector<std::vector<double>> attention_coefficients(const Matrix& wh, const Matrix& attn,
                                                        const Neighborhoods& nbrs, double slope);

// out_i = sum_j alpha_ij * wh_j with
// alpha_ij = softmax_j LeakyReLU(attn[:F] . wh_i + attn[F:] . wh_j).
// wh is N x F, attn is 1 x 2F.
Var graph_attention(Var wh, Var attn, const Neighborhoods& nbrs, double slope);

}  // namespace parcelplan::nn

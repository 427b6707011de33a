#include "parcelplan/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "parcelplan/error.hpp"

namespace parcelplan::nn {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (frozen_) return constant(p.value);
  Node n;
  n.value = p.value;
  n.grad = Matrix(p.value.rows(), p.value.cols());
  n.param = &p;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  Node n;
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](std::size_t p) { return nodes_[p].requires_grad; });
  if (n.requires_grad) {
    n.grad = Matrix(value.rows(), value.cols());
    n.backward = std::move(fn);
  }
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var root) {
  if (root.tape_ != this) fail(ErrorCode::Contract, "backward: root belongs to another tape");
  Node& r = nodes_[root.id_];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    fail(ErrorCode::Contract, "backward: root must be a scalar");
  }
  if (!r.requires_grad) return;
  r.grad(0, 0) += 1.0;
  for (std::size_t id = root.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.param) add_scaled(n.param->grad, 1.0, n.grad);
  }
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) fail(ErrorCode::Contract, "operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) fail(ErrorCode::Dimension, std::string(what) + ": shape mismatch");
}

void accumulate(Tape& t, std::size_t id, double alpha, const Matrix& g) {
  if (t.requires_grad(id)) add_scaled(t.grad_mut(id), alpha, g);
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  add_scaled(out, 1.0, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, 1.0, t.grad(self));
    accumulate(t, ib, 1.0, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  add_scaled(out, -1.0, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    accumulate(t, ia, 1.0, t.grad(self));
    accumulate(t, ib, -1.0, t.grad(self));
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad_mut(ia).data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g.data()[i] * t.value(ib).data()[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad_mut(ib).data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g.data()[i] * t.value(ia).data()[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  simd::scale(factor, out.data().data(), out.size());
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, factor](Tape& t, std::size_t self) {
    accumulate(t, ia, factor, t.grad(self));
  });
}

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = nn::matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) matmul_add(t.grad_mut(ia), g, transpose(t.value(ib)));
    if (t.requires_grad(ib)) matmul_at_add(t.grad_mut(ib), t.value(ia), g);
  });
}

Var matmul_bt(Var x, Var w) {
  Tape& t = tape_of(x, w);
  Matrix out = nn::matmul_bt(x.value(), w.value());
  const std::size_t ix = x.id(), iw = w.id();
  return t.record(std::move(out), {ix, iw}, [ix, iw](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);  // N x out
    if (t.requires_grad(ix)) matmul_add(t.grad_mut(ix), g, t.value(iw));
    if (t.requires_grad(iw)) matmul_at_add(t.grad_mut(iw), g, t.value(ix));
  });
}

Var add_row(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  require_shape(bias.value(), 1, x.cols(), "add_row bias");
  Matrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    simd::axpy(1.0, bias.value().data().data(), out.row(r).data(), out.cols());
  }
  const std::size_t ix = x.id(), ib = bias.id();
  return t.record(std::move(out), {ix, ib}, [ix, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    accumulate(t, ix, 1.0, g);
    if (t.requires_grad(ib)) {
      double* gb = t.grad_mut(ib).data().data();
      for (std::size_t r = 0; r < g.rows(); ++r) simd::axpy(1.0, g.row(r).data(), gb, g.cols());
    }
  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t ia = a.id();
  return t.record(Matrix(1, 1, s), {ia}, [ia](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const double g = t.grad(self)(0, 0);
    for (double& v : t.grad_mut(ia).data()) v += g;
  });
}

Var mean_rows(Var a) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  if (x.rows() == 0) fail(ErrorCode::Dimension, "mean_rows of an empty matrix");
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) simd::axpy(1.0, x.row(r).data(), out.data().data(), x.cols());
  const double inv = 1.0 / static_cast<double>(x.rows());
  simd::scale(inv, out.data().data(), out.size());
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, inv](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    Matrix& ga = t.grad_mut(ia);
    const double* g = t.grad(self).data().data();
    for (std::size_t r = 0; r < ga.rows(); ++r) simd::axpy(inv, g, ga.row(r).data(), ga.cols());
  });
}

Var segment_mean(Var a, std::vector<std::size_t> offsets) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != x.rows()) {
    fail(ErrorCode::Dimension, "segment_mean: offsets must run from 0 to the row count");
  }
  const std::size_t blocks = offsets.size() - 1;
  Matrix out(blocks, x.cols());
  for (std::size_t b = 0; b < blocks; ++b) {
    if (offsets[b + 1] <= offsets[b]) fail(ErrorCode::Dimension, "segment_mean: empty or decreasing segment");
    for (std::size_t r = offsets[b]; r < offsets[b + 1]; ++r) {
      simd::axpy(1.0, x.row(r).data(), out.row(b).data(), x.cols());
    }
    simd::scale(1.0 / static_cast<double>(offsets[b + 1] - offsets[b]), out.row(b).data(), x.cols());
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, offsets = std::move(offsets)](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    Matrix& ga = t.grad_mut(ia);
    const Matrix& g = t.grad(self);
    for (std::size_t b = 0; b + 1 < offsets.size(); ++b) {
      const double inv = 1.0 / static_cast<double>(offsets[b + 1] - offsets[b]);
      for (std::size_t r = offsets[b]; r < offsets[b + 1]; ++r) simd::axpy(inv, g.row(b).data(), ga.row(r).data(), ga.cols());
    }
  });
}

Var select_row(Var a, std::size_t r) {
  Tape& t = *a.tape();
  if (r >= a.rows()) fail(ErrorCode::Lookup, "select_row: row out of range");
  Matrix out(1, a.cols());
  std::copy(a.value().row(r).begin(), a.value().row(r).end(), out.data().begin());
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, r](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    Matrix& ga = t.grad_mut(ia);
    simd::axpy(1.0, t.grad(self).data().data(), ga.row(r).data(), ga.cols());
  });
}

Var concat_cols(Var a, Var b) {
  Tape& t = tape_of(a, b);
  if (a.rows() != b.rows()) fail(ErrorCode::Dimension, "concat_cols: row counts differ");
  const std::size_t ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::copy(a.value().row(r).begin(), a.value().row(r).end(), out.row(r).begin());
    std::copy(b.value().row(r).begin(), b.value().row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib, ca, cb](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (t.requires_grad(ia)) simd::axpy(1.0, g.row(r).data(), t.grad_mut(ia).row(r).data(), ca);
      if (t.requires_grad(ib)) simd::axpy(1.0, g.row(r).data() + ca, t.grad_mut(ib).row(r).data(), cb);
    }
  });
}

Var elu(Var a) {
  Tape& t = *a.tape();
  const auto x = a.value().data();
  Matrix out = Matrix::uninitialized(a.rows(), a.cols());
  auto y = out.data();
  simd::exp(x.data(), y.data(), y.size());
  // Branch-free select: signs are data dependent and mispredict badly.
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(x[i], 0.0) + std::min(y[i] - 1.0, 0.0);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    auto ga = t.grad_mut(ia).data();
    auto g = t.grad(self).data();
    auto y = t.value(self).data();  // exp(x) - 1 on the negative side, so y + 1 = exp(x) <= 1 there
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * std::min(y[i] + 1.0, 1.0);
  });
}

Var leaky_relu(Var a, double slope) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (double& v : out.data()) v = std::max(v, 0.0) + slope * std::min(v, 0.0);
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia, slope](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    auto ga = t.grad_mut(ia).data();
    auto g = t.grad(self).data();
    auto x = t.value(ia).data();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (slope + (1.0 - slope) * static_cast<double>(x[i] > 0.0));
  });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  const std::size_t ia = a.id();
  return t.record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    if (!t.requires_grad(ia)) return;
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    Matrix& ga = t.grad_mut(ia);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double s = simd::dot(y.row(r).data(), g.row(r).data(), y.cols());
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - s);
    }
  });
}

namespace {

// Neighborhoods flattened to compressed rows, with the attention weights and
// logit signs of each edge.
struct AttentionEdges {
  std::vector<std::size_t> start;  // n + 1
  std::vector<std::size_t> index;
  std::vector<double> alpha;
  std::vector<char> positive;
};

AttentionEdges attend(const Matrix& wh, const Matrix& attn, const Neighborhoods& nbrs, double slope) {
  const std::size_t n = wh.rows(), f = wh.cols();
  require_shape(attn, 1, 2 * f, "attention vector");
  if (nbrs.size() != n) fail(ErrorCode::Dimension, "neighborhood count does not match node count");
  // Per-node source and destination scores, packed as an n x 2 matrix.
  std::vector<double> at(2 * f), scores(2 * n, 0.0);
  for (std::size_t c = 0; c < f; ++c) {
    at[2 * c] = attn(0, c);
    at[2 * c + 1] = attn(0, f + c);
  }
  simd::gemm(wh.data().data(), at.data(), scores.data(), n, f, 2);
  AttentionEdges e;
  e.start.reserve(n + 1);
  e.start.push_back(0);
  for (const auto& list : nbrs.lists) e.start.push_back(e.start.back() + list.size());
  const std::size_t m = e.start.back();
  e.index.resize(m);
  e.alpha.resize(m);
  e.positive.resize(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& list = nbrs.lists[i];
    if (list.empty()) fail(ErrorCode::Dimension, "empty neighborhood; self-loops are required");
    const std::size_t base = e.start[i];
    double top = -HUGE_VAL;
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k] >= n) fail(ErrorCode::Dimension, "neighbor index out of range");
      const double z = scores[2 * i] + scores[2 * list[k] + 1];
      e.index[base + k] = list[k];
      e.positive[base + k] = z > 0.0;
      e.alpha[base + k] = std::max(z, 0.0) + slope * std::min(z, 0.0);
      top = std::max(top, e.alpha[base + k]);
    }
    for (std::size_t k = base; k < e.start[i + 1]; ++k) e.alpha[k] -= top;
  }
  simd::exp(e.alpha.data(), e.alpha.data(), m);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t k = e.start[i]; k < e.start[i + 1]; ++k) total += e.alpha[k];
    for (std::size_t k = e.start[i]; k < e.start[i + 1]; ++k) e.alpha[k] /= total;
  }
  return e;
}

}  // namespace

std::vector<std::vector<double>> attention_coefficients(const Matrix& wh, const Matrix& attn,
                                                        const Neighborhoods& nbrs, double slope) {
  const AttentionEdges e = attend(wh, attn, nbrs, slope);
  std::vector<std::vector<double>> alpha(wh.rows());
  for (std::size_t i = 0; i < wh.rows(); ++i) {
    alpha[i].assign(e.alpha.begin() + static_cast<std::ptrdiff_t>(e.start[i]),
                    e.alpha.begin() + static_cast<std::ptrdiff_t>(e.start[i + 1]));
  }
  return alpha;
}

Var graph_attention(Var wh_var, Var attn_var, const Neighborhoods& nbrs, double slope) {
  Tape& t = tape_of(wh_var, attn_var);
  const Matrix& wh = wh_var.value();
  const std::size_t n = wh.rows(), f = wh.cols();
  auto edges = std::make_shared<const AttentionEdges>(attend(wh, attn_var.value(), nbrs, slope));

  Matrix out(n, f);
  simd::spmm(edges->start.data(), edges->index.data(), edges->alpha.data(), wh.data().data(), out.data().data(), n,
             f);

  const std::size_t iwh = wh_var.id(), ia = attn_var.id();
  return t.record(std::move(out), {iwh, ia}, [iwh, ia, edges, slope, n, f](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix& wh = t.value(iwh);
    const Matrix& attn = t.value(ia);
    const bool need_wh = t.requires_grad(iwh);
    const bool need_a = t.requires_grad(ia);
    const AttentionEdges& e = *edges;

    const std::size_t* start = e.start.data();
    const std::size_t* index = e.index.data();
    std::vector<double> galpha(e.alpha.size());
    simd::sddmm(start, index, g.data().data(), wh.data().data(), galpha.data(), n, f);
    if (need_wh) simd::spmm_t(start, index, e.alpha.data(), g.data().data(), t.grad_mut(iwh).data().data(), n, f);

    // Score gradients, packed n x 2 like the forward scores.
    std::vector<double> gscores(2 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = start[i]; k < start[i + 1]; ++k) s += e.alpha[k] * galpha[k];
      for (std::size_t k = start[i]; k < start[i + 1]; ++k) {
        const double gz = e.alpha[k] * (galpha[k] - s) * (slope + (1.0 - slope) * e.positive[k]);
        gscores[2 * i] += gz;
        gscores[2 * index[k] + 1] += gz;
      }
    }
    if (need_a) simd::gemm_at(gscores.data(), wh.data().data(), t.grad_mut(ia).data().data(), n, 2, f);
    if (need_wh) simd::gemm(gscores.data(), attn.data().data(), t.grad_mut(iwh).data().data(), n, 2, f);
  });
}

}  // namespace parcelplan::nn

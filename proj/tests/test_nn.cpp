#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "parcelplan/nn/checkpoint.hpp"
#include "parcelplan/nn/networks.hpp"
#include "parcelplan/nn/tape.hpp"
#include "parcelplan/text.hpp"
#include "support.hpp"

using namespace parcelplan;
using namespace parcelplan::nn;
using testing::code_of;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const testing::Dense& b) {
  double m = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) m = std::max(m, std::abs(a(r, c) - b[r][c]));
  }
  return m;
}

// Builds sum(op(inputs) .* weights) on a fresh tape; weights make every
// output entry matter with a different coefficient.
using OpFn = std::function<Var(Tape&, std::vector<Var>&)>;

double weighted_loss(std::vector<Parameter>& inputs, const Matrix& weights, const OpFn& op, bool backward) {
  Tape tape;
  std::vector<Var> vars;
  for (Parameter& p : inputs) vars.push_back(tape.param(p));
  Var out = op(tape, vars);
  Var loss = sum(mul(out, tape.constant(weights)));
  if (backward) tape.backward(loss);
  return loss.value()(0, 0);
}

// Gradient check of one op against central differences.
double op_gradient_error(std::vector<Parameter> inputs, const OpFn& op, Rng& rng) {
  Matrix shape;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Parameter& p : inputs) vars.push_back(tape.constant(p.value));
    shape = op(tape, vars).value();
  }
  const Matrix weights = testing::random_matrix(rng, shape.rows(), shape.cols());
  for (Parameter& p : inputs) p.zero_grad();
  weighted_loss(inputs, weights, op, true);
  std::vector<Parameter*> ptrs;
  for (Parameter& p : inputs) ptrs.push_back(&p);
  return testing::finite_difference_check(ptrs, [&] { return weighted_loss(inputs, weights, op, false); }).max_rel_error;
}

Parameter random_param(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  return Parameter("x", testing::random_matrix(rng, rows, cols, scale));
}

Matrix random_features(Rng& rng, std::size_t n, std::size_t dim = kNodeFeatureDim) {
  return testing::random_matrix(rng, n, dim);
}

void fill_gaussian(std::vector<Parameter*> params, Rng& rng, double sd) {
  for (Parameter* p : params) {
    for (double& v : p->value.data()) v = testing::gaussian(rng, sd);
  }
}

void zero_all(std::vector<Parameter*> params) {
  for (Parameter* p : params) p->value.fill(0.0);
}

std::vector<Parameter*> concat(std::vector<Parameter*> a, const std::vector<Parameter*>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_SUITE("matrix") {

TEST_CASE("construction and shape errors") {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 6);
  CHECK(code_of([] { Matrix(2, 2, std::vector<double>{1, 2, 3}); }) == ErrorCode::Dimension);
  CHECK(code_of([] { Matrix{{1, 2}, {3}}; }) == ErrorCode::Dimension);
  CHECK(code_of([&] { matmul(m, m); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { require_shape(m, 3, 2, "thing"); }) == ErrorCode::Dimension);
  CHECK(testing::message_of([&] { require_shape(m, 3, 2, "thing"); }).find("thing") != std::string::npos);
}

TEST_CASE("products match a naive triple loop for every kernel table") {
  Rng rng(1);
  std::vector<const simd::KernelTable*> tables{&simd::scalar_table()};
  if (simd::avx2_table()) tables.push_back(simd::avx2_table());
  if (simd::neon_table()) tables.push_back(simd::neon_table());
  for (const simd::KernelTable* k : tables) {
    CAPTURE(simd::isa_name(k->isa));
    for (int trial = 0; trial < 30; ++trial) {
      const auto n = 1 + rng.below(13), inner = 1 + rng.below(17), m = 1 + rng.below(11);
      Matrix a = testing::random_matrix(rng, n, inner), b = testing::random_matrix(rng, inner, m);
      CHECK(max_abs_diff(matmul(a, b, *k), naive_matmul(a, b)) < 1e-12);
      CHECK(max_abs_diff(matmul_bt(a, transpose(b), *k), naive_matmul(a, b)) < 1e-12);
      CHECK(max_abs_diff(matmul_at(transpose(a), b, *k), naive_matmul(a, b)) < 1e-12);
      Matrix c = testing::random_matrix(rng, n, m);
      Matrix expect = naive_matmul(a, b);
      add_scaled(expect, 1.0, c);
      Matrix c1 = c, c2 = c;
      matmul_add(c1, a, b, *k);
      matmul_at_add(c2, transpose(a), b, *k);
      CHECK(max_abs_diff(c1, expect) < 1e-12);
      CHECK(max_abs_diff(c2, expect) < 1e-12);
    }
  }
}

TEST_CASE("finiteness check") {
  Matrix m(2, 2);
  CHECK(all_finite(m));
  m(1, 0) = std::nan("");
  CHECK_FALSE(all_finite(m));
  m(1, 0) = HUGE_VAL;
  CHECK_FALSE(all_finite(m));
}

}  // TEST_SUITE

TEST_SUITE("autodiff") {

TEST_CASE("square at three has gradient six") {
  Parameter x("x", Matrix{{3.0}});
  Tape t;
  Var v = t.param(x);
  Var y = sum(mul(v, v));
  t.backward(y);
  CHECK(y.value()(0, 0) == 9.0);
  CHECK(x.grad(0, 0) == 6.0);
}

TEST_CASE("sum of two parameters has unit gradients") {
  Parameter a("a", Matrix{{1.5}}), b("b", Matrix{{-2.0}});
  Tape t;
  t.backward(add(t.param(a), t.param(b)));
  CHECK(a.grad(0, 0) == 1.0);
  CHECK(b.grad(0, 0) == 1.0);
}

TEST_CASE("gradients accumulate across backward passes until zeroed") {
  Parameter a("a", Matrix{{2.0}});
  for (int i = 0; i < 3; ++i) {
    Tape t;
    t.backward(scale(t.param(a), 4.0));
  }
  CHECK(a.grad(0, 0) == 12.0);
  a.zero_grad();
  CHECK(a.grad(0, 0) == 0.0);
}

TEST_CASE("backward needs a scalar root on the same tape") {
  Parameter a("a", Matrix{{1.0, 2.0}});
  Tape t, other;
  Var v = t.param(a);
  CHECK(code_of([&] { t.backward(v); }) == ErrorCode::Contract);
  Var s = sum(v);
  CHECK(code_of([&] { other.backward(s); }) == ErrorCode::Contract);
  Var c = other.constant(Matrix{{1.0, 1.0}});
  CHECK(code_of([&] { add(v, c); }) == ErrorCode::Contract);
}

TEST_CASE("frozen tape records parameters as constants") {
  Parameter a("a", Matrix{{2.0}});
  Tape t;
  t.set_frozen(true);
  t.backward(sum(mul(t.param(a), t.param(a))));
  CHECK(a.grad(0, 0) == 0.0);
}

TEST_CASE("elementary ops match central differences") {
  Rng rng(42);
  const std::size_t r = 4, c = 3;
  struct Case {
    const char* name;
    std::vector<Parameter> inputs;
    OpFn op;
  };
  std::vector<Case> cases;
  cases.push_back({"add", {random_param(rng, r, c), random_param(rng, r, c)},
                   [](Tape&, std::vector<Var>& v) { return add(v[0], v[1]); }});
  cases.push_back({"sub", {random_param(rng, r, c), random_param(rng, r, c)},
                   [](Tape&, std::vector<Var>& v) { return sub(v[0], v[1]); }});
  cases.push_back({"mul", {random_param(rng, r, c), random_param(rng, r, c)},
                   [](Tape&, std::vector<Var>& v) { return mul(v[0], v[1]); }});
  cases.push_back({"scale", {random_param(rng, r, c)}, [](Tape&, std::vector<Var>& v) { return scale(v[0], -1.7); }});
  cases.push_back({"matmul", {random_param(rng, r, c), random_param(rng, c, 5)},
                   [](Tape&, std::vector<Var>& v) { return matmul(v[0], v[1]); }});
  cases.push_back({"matmul_bt", {random_param(rng, r, c), random_param(rng, 5, c)},
                   [](Tape&, std::vector<Var>& v) { return matmul_bt(v[0], v[1]); }});
  cases.push_back({"add_row", {random_param(rng, r, c), random_param(rng, 1, c)},
                   [](Tape&, std::vector<Var>& v) { return add_row(v[0], v[1]); }});
  cases.push_back({"sum", {random_param(rng, r, c)}, [](Tape&, std::vector<Var>& v) { return sum(v[0]); }});
  cases.push_back({"mean_rows", {random_param(rng, r, c)}, [](Tape&, std::vector<Var>& v) { return mean_rows(v[0]); }});
  cases.push_back({"segment_mean", {random_param(rng, 6, c)},
                   [](Tape&, std::vector<Var>& v) { return segment_mean(v[0], {0, 1, 4, 6}); }});
  cases.push_back({"select_row", {random_param(rng, r, c)}, [](Tape&, std::vector<Var>& v) { return select_row(v[0], 2); }});
  cases.push_back({"concat_cols", {random_param(rng, r, c), random_param(rng, r, 2)},
                   [](Tape&, std::vector<Var>& v) { return concat_cols(v[0], v[1]); }});
  cases.push_back({"elu", {random_param(rng, r, c, 2.0)}, [](Tape&, std::vector<Var>& v) { return elu(v[0]); }});
  cases.push_back({"leaky_relu", {random_param(rng, r, c, 2.0)},
                   [](Tape&, std::vector<Var>& v) { return leaky_relu(v[0], 0.2); }});
  cases.push_back({"softmax_rows", {random_param(rng, r, 5, 2.0)},
                   [](Tape&, std::vector<Var>& v) { return softmax_rows(v[0]); }});
  const Neighborhoods nb = testing::random_neighborhoods(rng, 5, 0.5);
  cases.push_back({"graph_attention", {random_param(rng, 5, 4), random_param(rng, 1, 8)},
                   [nb](Tape&, std::vector<Var>& v) { return graph_attention(v[0], v[1], nb, 0.2); }});
  for (Case& k : cases) {
    CAPTURE(k.name);
    CHECK(op_gradient_error(k.inputs, k.op, rng) < 1e-6);
  }
}

TEST_CASE("op shape errors") {
  Tape t;
  Var a = t.constant(Matrix(2, 3)), b = t.constant(Matrix(3, 2));
  CHECK(code_of([&] { add(a, b); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { mul(a, b); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { matmul(a, a); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { concat_cols(a, b); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { segment_mean(a, {0, 3}); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { select_row(a, 2); }) == ErrorCode::Lookup);
  Neighborhoods nb{{{0}, {1}}};
  CHECK(code_of([&] { graph_attention(a, t.constant(Matrix(1, 5)), nb, 0.2); }) == ErrorCode::Dimension);
  Neighborhoods empty{{{0}, {}}};
  CHECK(code_of([&] { graph_attention(a, t.constant(Matrix(1, 6)), empty, 0.2); }) == ErrorCode::Dimension);
}

TEST_CASE("softmax rows and attention weights sum to one") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(10);
    Tape t;
    Var s = softmax_rows(t.constant(testing::random_matrix(rng, n, 5, 30.0)));
    for (std::size_t r = 0; r < n; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        CHECK(s.value()(r, c) >= 0.0);
        total += s.value()(r, c);
      }
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
    const auto f = 1 + rng.below(6);
    const auto nb = testing::random_neighborhoods(rng, n, 0.5);
    const auto alpha = attention_coefficients(testing::random_matrix(rng, n, f, 5.0),
                                              testing::random_matrix(rng, 1, 2 * f, 5.0), nb, 0.2);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(alpha[i].size() == nb.lists[i].size());
      CHECK(std::abs(std::accumulate(alpha[i].begin(), alpha[i].end(), 0.0) - 1.0) <= 1e-9);
    }
  }
}

}  // TEST_SUITE

TEST_SUITE("networks") {

TEST_CASE("single self-looped node with identity weights passes non-negative features through") {
  Rng rng(1);
  GatLayer layer = GatLayer::init(3, 3, rng, "l");
  layer.weight.value = Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  Neighborhoods nb{{{0}}};
  Matrix h{{0.5, 2.0, 0.0}};
  CHECK(max_abs_diff(gat_forward(layer, h, nb), h) < 1e-15);
}

TEST_CASE("identical nodes attend uniformly") {
  Rng rng(2);
  Matrix wh{{0.3, -1.2, 0.7}, {0.3, -1.2, 0.7}};
  Neighborhoods nb{{{0, 1}, {1, 0}}};
  const auto alpha = attention_coefficients(wh, testing::random_matrix(rng, 1, 6), nb, 0.2);
  for (const auto& row : alpha) {
    for (double a : row) CHECK(a == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("GAT layer matches the dense oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 1 + rng.below(6), in = 1 + rng.below(7), out = 1 + rng.below(9);
    GatLayer layer = GatLayer::init(in, out, rng, "l");
    layer.activation = trial % 2 ? Activation::Elu : Activation::Identity;
    const auto nb = testing::random_neighborhoods(rng, n, 0.5);
    const Matrix h = testing::random_matrix(rng, n, in, 2.0);
    CHECK(max_abs_diff(gat_forward(layer, h, nb), testing::dense_gat_layer(layer, testing::to_dense(h), nb)) < 1e-10);
  }
}

TEST_CASE("policy examples") {
  Rng rng(4);
  NetConfig cfg;
  cfg.hidden = 8;
  PolicyNet net(cfg, rng);
  const auto nb = testing::random_neighborhoods(rng, 6);
  const Matrix x = random_features(rng, 6);

  SUBCASE("zero parameters give the uniform distribution") {
    zero_all(net.parameters());
    for (double p : policy_forward(net, x, nb, 3)) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("shifting every logit leaves the output unchanged") {
    const auto before = policy_forward(net, x, nb, 2);
    for (double& b : net.head.bias.value.data()) b += 3.25;
    const auto after = policy_forward(net, x, nb, 2);
    for (std::size_t j = 0; j < 5; ++j) CHECK(after[j] == doctest::Approx(before[j]).epsilon(1e-12));
  }
  SUBCASE("missing target") {
    CHECK(code_of([&] { policy_forward(net, x, nb, 6); }) == ErrorCode::Lookup);
  }
}

TEST_CASE("policy sums to one on random inputs and matches the dense oracle") {
  Rng rng(5);
  NetConfig cfg;
  cfg.hidden = 6;
  for (int trial = 0; trial < 100; ++trial) {
    PolicyNet net(cfg, rng);
    const auto n = 1 + rng.below(8);
    const auto nb = testing::random_neighborhoods(rng, n);
    const Matrix x = random_features(rng, n);
    const std::size_t target = rng.below(n);
    const auto p = policy_forward(net, x, nb, target);
    double total = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
    const auto dense = testing::dense_policy(net, x, nb);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(p[j] - dense[target][j]) < 1e-10);
  }
}

TEST_CASE("value examples") {
  Rng rng(6);
  NetConfig cfg;
  cfg.hidden = 8;
  ValueNet net(cfg, rng);
  const auto nb = testing::random_neighborhoods(rng, 5);
  const Matrix x = random_features(rng, 5);
  const Matrix pol = testing::random_matrix(rng, 5, 5);

  SUBCASE("zero network returns the head bias") {
    zero_all(net.parameters());
    CHECK(value_forward(net, x, pol, nb) == 0.0);
    net.head.bias.value(0, 0) = 1.25;
    CHECK(value_forward(net, x, pol, nb) == 1.25);
  }
  SUBCASE("dense oracle") {
    CHECK(std::abs(value_forward(net, x, pol, nb) - testing::dense_value(net, x, pol, nb)) < 1e-10);
  }
  SUBCASE("misaligned policy rows") {
    CHECK(code_of([&] { value_forward(net, x, testing::random_matrix(rng, 4, 5), nb); }) == ErrorCode::Dimension);
    CHECK(code_of([&] { value_forward(net, x, testing::random_matrix(rng, 5, 4), nb); }) == ErrorCode::Dimension);
  }
}

TEST_CASE("value is invariant under a consistent node permutation") {
  Rng rng(7);
  NetConfig cfg;
  cfg.hidden = 8;
  for (int trial = 0; trial < 50; ++trial) {
    ValueNet net(cfg, rng);
    const auto n = 2 + rng.below(8);
    const auto nb = testing::random_neighborhoods(rng, n);
    const Matrix x = random_features(rng, n), pol = testing::random_matrix(rng, n, 5);
    std::vector<std::size_t> perm(n);  // new index -> old index
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    std::vector<std::size_t> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = i;
    Matrix px(n, x.cols()), pp(n, 5);
    Neighborhoods pnb;
    pnb.lists.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < x.cols(); ++c) px(i, c) = x(perm[i], c);
      for (std::size_t c = 0; c < 5; ++c) pp(i, c) = pol(perm[i], c);
      for (std::size_t j : nb.lists[perm[i]]) pnb.lists[i].push_back(inv[j]);
    }
    CHECK(std::abs(value_forward(net, x, pol, nb) - value_forward(net, px, pp, pnb)) <= 1e-12);
  }
}

TEST_CASE("stacked critic values equal separate evaluations") {
  Rng rng(8);
  NetConfig cfg;
  cfg.hidden = 5;
  ValueNet net(cfg, rng);
  std::vector<Matrix> xs, ps;
  std::vector<Neighborhoods> nbs;
  Neighborhoods joint;
  std::vector<std::size_t> offsets{0};
  for (int b = 0; b < 4; ++b) {
    const auto n = 1 + rng.below(6);
    xs.push_back(random_features(rng, n));
    ps.push_back(testing::random_matrix(rng, n, 5));
    nbs.push_back(testing::random_neighborhoods(rng, n));
    for (const auto& list : nbs.back().lists) {
      joint.lists.emplace_back();
      for (std::size_t j : list) joint.lists.back().push_back(j + offsets.back());
    }
    offsets.push_back(offsets.back() + n);
  }
  Matrix fx(offsets.back(), kNodeFeatureDim), fp(offsets.back(), 5);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t r = 0; r < xs[b].rows(); ++r) {
      std::copy(xs[b].row(r).begin(), xs[b].row(r).end(), fx.row(offsets[b] + r).begin());
      std::copy(ps[b].row(r).begin(), ps[b].row(r).end(), fp.row(offsets[b] + r).begin());
    }
  }
  Tape t;
  Var v = net.values(t, t.constant(fx), t.constant(fp), joint, offsets);
  REQUIRE(v.rows() == 4);
  for (std::size_t b = 0; b < 4; ++b) CHECK(v.value()(b, 0) == doctest::Approx(value_forward(net, xs[b], ps[b], nbs[b])).epsilon(1e-12));
}

TEST_CASE("composed actor and critic gradients match central differences") {
  Rng rng(2718);
  NetConfig cfg;
  cfg.hidden = 8;
  cfg.layers = 2;
  PolicyNet actor(cfg, rng);
  ValueNet critic(cfg, rng);
  fill_gaussian(actor.parameters(), rng, 0.1);
  fill_gaussian(critic.parameters(), rng, 0.1);
  const auto nb = testing::random_neighborhoods(rng, 6, 0.5);
  const Matrix x = random_features(rng, 6);
  const double target_return = 0.7;

  // Actor objective -Q(s, pi(s)) plus critic regression (R - Q)^2.
  auto loss = [&](bool backward) {
    Tape t;
    Var f = t.constant(x);
    Var probs = actor.probabilities(t, f, nb);
    Var q = critic.value(t, f, probs, nb);
    Var err = sub(q, t.constant(Matrix{{target_return}}));
    Var total = add(scale(q, -1.0), mul(err, err));
    if (backward) t.backward(total);
    return total.value()(0, 0);
  };
  auto params = concat(actor.parameters(), critic.parameters());
  for (Parameter* p : params) p->zero_grad();
  loss(true);
  const auto check = testing::finite_difference_check(params, [&] { return loss(false); }, 1e-5);
  std::size_t total = 0;
  for (Parameter* p : params) total += p->value.size();
  CHECK(check.checked == total);
  CHECK(check.max_rel_error < 1e-4);
}

TEST_CASE("per-layer gradients match central differences") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    GatLayer layer = GatLayer::init(4, 5, rng, "l");
    for (double& v : layer.weight.value.data()) v = testing::gaussian(rng, 0.5);
    const auto nb = testing::random_neighborhoods(rng, 6, 0.5);
    const Matrix x = random_features(rng, 6, 4);
    const Matrix w = testing::random_matrix(rng, 6, 5);
    Linear lin = Linear::init(5, 3, rng, "lin");
    auto loss = [&](bool backward) {
      Tape t;
      Var h = layer.forward(t, t.constant(x), nb);
      Var y = lin.forward(t, h);
      Var total = add(sum(mul(h, t.constant(w))), sum(mul(y, y)));
      if (backward) t.backward(total);
      return total.value()(0, 0);
    };
    std::vector<Parameter*> params{&layer.weight, &layer.attention, &lin.weight, &lin.bias};
    for (Parameter* p : params) p->zero_grad();
    loss(true);
    CHECK(testing::finite_difference_check(params, [&] { return loss(false); }).max_rel_error < 1e-5);
  }
}

TEST_CASE("random forward and backward passes stay finite") {
  Rng rng(12);
  NetConfig cfg;
  cfg.hidden = 6;
  for (int trial = 0; trial < 1000; ++trial) {
    PolicyNet actor(cfg, rng);
    ValueNet critic(cfg, rng);
    const double spread = trial % 10 == 0 ? 20.0 : 1.0;
    for (Parameter* p : concat(actor.parameters(), critic.parameters())) {
      for (double& v : p->value.data()) v *= spread;
    }
    const auto n = 1 + rng.below(7);
    const auto nb = testing::random_neighborhoods(rng, n);
    const Matrix x = testing::random_matrix(rng, n, kNodeFeatureDim, spread);
    Tape t;
    Var f = t.constant(x);
    Var probs = actor.probabilities(t, f, nb);
    Var q = critic.value(t, f, probs, nb);
    t.backward(q);
    CHECK(all_finite(probs.value()));
    CHECK(std::isfinite(q.value()(0, 0)));
    for (Parameter* p : concat(actor.parameters(), critic.parameters())) CHECK(all_finite(p->grad));
  }
}

TEST_CASE("sgd step") {
  Matrix p{{1.0}};
  sgd_step(p, Matrix{{2.0}}, 0.1);
  CHECK(p(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  Matrix q{{1.0, -3.0}};
  sgd_step(q, Matrix{{0.0, 0.0}}, 0.5);
  CHECK(q == Matrix{{1.0, -3.0}});
  Matrix a{{1.0, 2.0}}, b{{1.0, 2.0}};
  const Matrix g{{0.25, -0.5}};
  sgd_step(a, g, 0.5);
  sgd_step(a, g, 0.5);
  sgd_step(b, g, 1.0);
  CHECK(a == b);
  CHECK(code_of([&] { sgd_step(a, Matrix{{1.0}}, 0.1); }) == ErrorCode::Dimension);
  CHECK(code_of([&] { sgd_step(a, g, -1.0); }) == ErrorCode::Domain);
}

TEST_CASE("initialization is seeded and within the uniform bound") {
  NetConfig cfg;
  cfg.hidden = 16;
  Rng a(5), b(5);
  PolicyNet n1(cfg, a), n2(cfg, b);
  auto p1 = n1.parameters(), p2 = n2.parameters();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->value == p2[i]->value);
  const GatLayer& first = n1.layers[0];
  const double bound = std::sqrt(6.0 / static_cast<double>(kNodeFeatureDim + 16));
  for (double v : first.weight.value.data()) CHECK(std::abs(v) <= bound);
}

}  // TEST_SUITE

TEST_SUITE("checkpoint") {

TEST_CASE("round trip preserves tensors bit for bit") {
  testing::TempDir dir("ckpt");
  Rng rng(3);
  Checkpoint c;
  c.metadata = {{"seed", 3}, {"note", "x"}};
  c.tensors.push_back({"a", testing::random_matrix(rng, 3, 4)});
  c.tensors.push_back({"b", Matrix{{-0.0, 1e-310, 1e308}}});
  const std::string path = dir.str("model.json");
  write_checkpoint(path, c);
  CHECK(std::filesystem::exists(dir.str("model.bin")));
  CHECK(std::filesystem::file_size(dir.str("model.bin")) == 15 * 8);
  Checkpoint back = read_checkpoint(path);
  CHECK(back.metadata == c.metadata);
  REQUIRE(back.tensors.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.tensors[i].first == c.tensors[i].first);
    const auto& x = back.tensors[i].second;
    const auto& y = c.tensors[i].second;
    REQUIRE(x.same_shape(y));
    CHECK(std::memcmp(x.data().data(), y.data().data(), x.size() * sizeof(double)) == 0);
  }
  CHECK(code_of([&] { back.tensor("missing"); }) == ErrorCode::Lookup);
  write_checkpoint(dir.str("again.json"), back);
  CHECK(text::read_file(dir.str("again.bin")) == text::read_file(dir.str("model.bin")));
}

TEST_CASE("corrupt checkpoints are rejected") {
  testing::TempDir dir("ckpt_bad");
  Checkpoint c;
  c.tensors.push_back({"a", Matrix{{1.0, 2.0}}});
  const std::string path = dir.str("m.json");
  write_checkpoint(path, c);
  SUBCASE("truncated blob") {
    text::write_file(dir.str("m.bin"), "1234");
    CHECK(code_of([&] { read_checkpoint(path); }) == ErrorCode::Parse);
  }
  SUBCASE("wrong version") {
    auto j = nlohmann::json::parse(text::read_file(path));
    j["format_version"] = 99;
    text::write_file(path, j.dump());
    CHECK(code_of([&] { read_checkpoint(path); }) == ErrorCode::Parse);
  }
  SUBCASE("not json") {
    text::write_file(path, "{");
    CHECK(code_of([&] { read_checkpoint(path); }) == ErrorCode::Parse);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { read_checkpoint(dir.str("nope.json")); }) == ErrorCode::Io);
  }
}

TEST_CASE("fnv1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

}  // TEST_SUITE

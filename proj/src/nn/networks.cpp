#include "parcelplan/nn/networks.hpp"

#include <cmath>

#include "parcelplan/error.hpp"

namespace parcelplan::nn {

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-s, s);
  return m;
}

std::vector<GatLayer> gat_stack(const NetConfig& config, std::size_t input_dim, Rng& rng, const std::string& prefix) {
  if (config.layers == 0 || config.hidden == 0) fail(ErrorCode::Config, "network needs at least one layer of width > 0");
  std::vector<GatLayer> layers;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < config.layers; ++l) {
    GatLayer layer = GatLayer::init(in, config.hidden, rng, prefix + "gat" + std::to_string(l));
    layer.negative_slope = config.negative_slope;
    layer.activation = config.activation;
    layers.push_back(std::move(layer));
    in = config.hidden;
  }
  return layers;
}

}  // namespace

GatLayer GatLayer::init(std::size_t in_dim, std::size_t out_dim, Rng& rng, const std::string& prefix) {
  GatLayer layer;
  layer.weight = Parameter(prefix + ".weight", glorot(out_dim, in_dim, in_dim, out_dim, rng));
  layer.attention = Parameter(prefix + ".attention", glorot(1, 2 * out_dim, 2 * out_dim, 1, rng));
  return layer;
}

Var GatLayer::forward(Tape& tape, Var features, const Neighborhoods& nbrs) {
  if (features.cols() != in_dim()) {
    fail(ErrorCode::Dimension, "GAT layer expects " + std::to_string(in_dim()) + " input features, got " +
                                   std::to_string(features.cols()));
  }
  require_shape(attention.value, 1, 2 * out_dim(), "GAT attention vector");
  Var wh = matmul_bt(features, tape.param(weight));
  Var agg = graph_attention(wh, tape.param(attention), nbrs, negative_slope);
  return activation == Activation::Elu ? elu(agg) : agg;
}

Matrix gat_forward(GatLayer& layer, const Matrix& features, const Neighborhoods& nbrs) {
  Tape tape;
  return layer.forward(tape, tape.constant(features), nbrs).value();
}

Linear Linear::init(std::size_t in_dim, std::size_t out_dim, Rng& rng, const std::string& prefix) {
  Linear lin;
  lin.weight = Parameter(prefix + ".weight", glorot(out_dim, in_dim, in_dim, out_dim, rng));
  lin.bias = Parameter(prefix + ".bias", Matrix(1, out_dim));
  return lin;
}

Var Linear::forward(Tape& tape, Var x) {
  if (x.cols() != weight.value.cols()) fail(ErrorCode::Dimension, "linear layer input width mismatch");
  return add_row(matmul_bt(x, tape.param(weight)), tape.param(bias));
}

PolicyNet::PolicyNet(const NetConfig& config, Rng& rng, std::size_t input_dim)
    : layers(gat_stack(config, input_dim, rng, "actor.")),
      head(Linear::init(config.hidden, kNumLandUses, rng, "actor.head")) {}

Var PolicyNet::probabilities(Tape& tape, Var features, const Neighborhoods& nbrs) {
  if (nbrs.size() != features.rows()) fail(ErrorCode::Dimension, "features and neighborhoods disagree on node count");
  Var h = features;
  for (GatLayer& layer : layers) h = layer.forward(tape, h, nbrs);
  return softmax_rows(head.forward(tape, h));
}

std::vector<Parameter*> PolicyNet::parameters() {
  std::vector<Parameter*> out;
  for (GatLayer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.attention);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

ValueNet::ValueNet(const NetConfig& config, Rng& rng, std::size_t input_dim)
    : layers(gat_stack(config, input_dim, rng, "critic.")),
      head(Linear::init(config.hidden, 1, rng, "critic.head")) {}

Var ValueNet::value(Tape& tape, Var features, Var policy, const Neighborhoods& nbrs) {
  return values(tape, features, policy, nbrs, {0, features.rows()});
}

Var ValueNet::values(Tape& tape, Var features, Var policy, const Neighborhoods& nbrs,
                     std::vector<std::size_t> offsets) {
  if (policy.rows() != features.rows() || policy.cols() != kNumLandUses) {
    fail(ErrorCode::Dimension, "critic policy input must be one 5-wide row per node");
  }
  if (nbrs.size() != features.rows()) fail(ErrorCode::Dimension, "features and neighborhoods disagree on node count");
  Var h = concat_cols(features, policy);
  for (GatLayer& layer : layers) h = layer.forward(tape, h, nbrs);
  return head.forward(tape, segment_mean(h, std::move(offsets)));
}

std::vector<Parameter*> ValueNet::parameters() {
  std::vector<Parameter*> out;
  for (GatLayer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.attention);
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

std::vector<const Parameter*> PolicyNet::parameters() const {
  auto mut = const_cast<PolicyNet*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::vector<const Parameter*> ValueNet::parameters() const {
  auto mut = const_cast<ValueNet*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

std::array<double, kNumLandUses> policy_forward(PolicyNet& net, const Matrix& features, const Neighborhoods& nbrs,
                                                std::size_t target) {
  if (target >= features.rows()) fail(ErrorCode::Lookup, "target node is not part of the observation");
  Tape tape;
  Var probs = net.probabilities(tape, tape.constant(features), nbrs);
  std::array<double, kNumLandUses> out{};
  for (std::size_t j = 0; j < kNumLandUses; ++j) out[j] = probs.value()(target, j);
  return out;
}

double value_forward(ValueNet& net, const Matrix& features, const Matrix& policy, const Neighborhoods& nbrs) {
  Tape tape;
  return net.value(tape, tape.constant(features), tape.constant(policy), nbrs).value()(0, 0);
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  if (!param.same_shape(grad)) fail(ErrorCode::Dimension, "sgd_step: gradient shape differs from parameter");
  if (!(lr >= 0.0) || !std::isfinite(lr)) fail(ErrorCode::Domain, "sgd_step: learning rate must be finite and >= 0");
  add_scaled(param, -lr, grad);
}

void sgd_step(std::vector<Parameter*> params, double lr) {
  for (Parameter* p : params) sgd_step(p->value, p->grad, lr);
}

}  // namespace parcelplan::nn

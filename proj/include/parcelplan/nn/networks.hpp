#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "parcelplan/land_use.hpp"
#include "parcelplan/nn/tape.hpp"
#include "parcelplan/rng.hpp"

namespace parcelplan::nn {

enum class Activation { Elu, Identity };

// Single-head graph attention layer: h' = W h, attention over the (self-looped)
// neighborhood, then the activation of the attention-weighted sum.
struct GatLayer {
  Parameter weight;     // out x in
  Parameter attention;  // 1 x 2*out
  double negative_slope = 0.2;
  Activation activation = Activation::Elu;

  static GatLayer init(std::size_t in_dim, std::size_t out_dim, Rng& rng, const std::string& prefix);

  std::size_t in_dim() const { return weight.value.cols(); }
  std::size_t out_dim() const { return weight.value.rows(); }

  Var forward(Tape& tape, Var features, const Neighborhoods& nbrs);
};

// Tape-free evaluation of one layer.
Matrix gat_forward(GatLayer& layer, const Matrix& features, const Neighborhoods& nbrs);

struct Linear {
  Parameter weight;  // out x in
  Parameter bias;    // 1 x out

  static Linear init(std::size_t in_dim, std::size_t out_dim, Rng& rng, const std::string& prefix);

  Var forward(Tape& tape, Var x);
};

struct NetConfig {
  std::size_t hidden = 32;
  std::size_t layers = 2;
  double negative_slope = 0.2;
  Activation activation = Activation::Elu;
};

// Width of the per-node input encoding: one-hot land use (5), normalized
// area, readjustable flag, assigned flag, is-target flag.
inline constexpr std::size_t kNodeFeatureDim = 9;

// Actor: GAT stack, a 5-wide linear head, row-wise softmax.
struct PolicyNet {
  std::vector<GatLayer> layers;
  Linear head;

  PolicyNet() = default;
  PolicyNet(const NetConfig& config, Rng& rng, std::size_t input_dim = kNodeFeatureDim);

  // Per-node vote distributions, N x 5.
  Var probabilities(Tape& tape, Var features, const Neighborhoods& nbrs);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Critic: GAT stack over [features | actor output], mean pooling, scalar head.
struct ValueNet {
  std::vector<GatLayer> layers;
  Linear head;

  ValueNet() = default;
  ValueNet(const NetConfig& config, Rng& rng, std::size_t input_dim = kNodeFeatureDim + kNumLandUses);

  // policy is N x 5, aligned with the rows of features.
  Var value(Tape& tape, Var features, Var policy, const Neighborhoods& nbrs);

  // Several observations stacked as one disconnected graph; observation b
  // owns rows [offsets[b], offsets[b+1]). Returns B x 1.
  Var values(Tape& tape, Var features, Var policy, const Neighborhoods& nbrs, std::vector<std::size_t> offsets);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Vote distribution of the target node. Throws ErrorCode::Lookup when the
// target is not a node of the observation.
std::array<double, kNumLandUses> policy_forward(PolicyNet& net, const Matrix& features,
                                                const Neighborhoods& nbrs, std::size_t target);

double value_forward(ValueNet& net, const Matrix& features, const Matrix& policy, const Neighborhoods& nbrs);

// p <- p - lr * g. lr must be finite and non-negative.
void sgd_step(Matrix& param, const Matrix& grad, double lr);
void sgd_step(std::vector<Parameter*> params, double lr);

}  // namespace parcelplan::nn

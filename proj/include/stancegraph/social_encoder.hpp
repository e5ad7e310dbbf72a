#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stancegraph/socialgraph.hpp"

namespace stancegraph {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class AggregatorKind : std::uint8_t { H2GAT, H2GCN };

std::string_view to_string(AggregatorKind kind) noexcept;
std::optional<AggregatorKind> parse_aggregator_kind(std::string_view text) noexcept;

inline constexpr double kLeakySlope = 0.2;

// Parameters of one Aggregate call: the shared projection and, for
// attention, the vector a = [a_center; a_neighbor] of length 2h.
struct ShellParams {
  Matrix projection;  // h x in_dim
  Vector attention;   // 2h, empty for H2GCN
};

struct EncoderParams {
  Matrix input_projection;  // h x d
  Vector input_bias;        // h
  // layers[l][q] holds the parameters of layer l+1 for shell order q+1.
  std::vector<std::vector<ShellParams>> layers;

  int hidden() const noexcept { return static_cast<int>(input_projection.rows()); }
  int text_dim() const noexcept { return static_cast<int>(input_projection.cols()); }
  int order() const noexcept { return static_cast<int>(layers.size()); }
};

// Width of one layer's output: one h-block per shell order.
constexpr int layer_output_dim(int hidden, int k) noexcept { return k * hidden; }
// Width of concat(H^0, ..., H^k).
constexpr int social_output_dim(int hidden, int k) noexcept {
  return hidden + k * layer_output_dim(hidden, k);
}
// Input width of layer `layer` (1-based).
constexpr int layer_input_dim(int hidden, int k, int layer) noexcept {
  return layer == 1 ? hidden : layer_output_dim(hidden, k);
}

// sum_m alpha_m * history_m with history most recent first. Positions beyond
// the available history contribute zero; an empty history gives zeros(dim).
Vector aggregate_history_pe(std::span<const Vector> history, const Vector& alpha,
                            Eigen::Index dim);
// Arithmetic mean; an empty history gives zeros(dim).
Vector aggregate_history_mean(std::span<const Vector> history, Eigen::Index dim);

struct Attention {
  Vector output;   // h
  Vector weights;  // one per neighbor, in input order
};

// Single-head graph attention over one neighbor set. Scores are
// LeakyReLU(a_center . W h_center + a_neighbor . W h_j); the result is the
// softmax-weighted sum of W h_j. Neighbors are visited in lexicographic order
// of their states so the result does not depend on the input order.
Attention gat_attend(const Vector& center, std::span<const Vector> neighbors,
                     const ShellParams& params);
Vector gat_aggregate(const Vector& center, std::span<const Vector> neighbors,
                     const ShellParams& params);
// Mean of projected neighbor states.
Vector gcn_aggregate(std::span<const Vector> neighbors, const ShellParams& params);

// One heterophily layer over every node: column i of the result is the
// concatenation over q = 1..k of Aggregate over the order-q shell of i.
// `states` holds one column per node. k = layer.size() <= cache.max_order().
Matrix h2_layer(const ShellCache& cache, const Matrix& states,
                std::span<const ShellParams> layer, AggregatorKind kind);

// z_social for every node: concat(H^0, H^1, ..., H^k) with
// H^0 = input_projection * z_hist + input_bias. `z_hist` is d x n.
Matrix social_encode(const ShellCache& cache, const Matrix& z_hist,
                     const EncoderParams& params, AggregatorKind kind);

// Encoder evaluation restricted to the receptive field of a set of target
// nodes, with reverse-mode gradients. Shell distances are taken in the full
// graph, so outputs equal the corresponding columns of social_encode.
class EncoderPass {
 public:
  EncoderPass(const ShellCache& cache, const EncoderParams& params,
              AggregatorKind kind, std::vector<NodeId> targets);

  // Nodes whose z_hist is required, ascending. Columns of the matrix passed
  // to forward() follow this order.
  const std::vector<NodeId>& input_nodes() const noexcept { return layers_.front().nodes; }
  const std::vector<NodeId>& targets() const noexcept { return targets_; }

  void forward(const Matrix& z_hist);
  // z_social of targets()[i] after forward().
  Vector social(std::size_t target_index) const;

  // d_social has one column per target. Accumulates parameter gradients into
  // `grads` (same shapes as the params) and returns d loss / d z_hist with
  // columns aligned to input_nodes().
  Matrix backward(const Matrix& d_social, EncoderParams& grads) const;

  struct ShellRecord {
    std::vector<Eigen::Index> members;  // columns in the previous layer
    Vector scores;                      // pre-activation attention scores
    Vector weights;                     // attention weights
  };
  struct Layer {
    std::vector<NodeId> nodes;
    std::vector<std::int32_t> column;  // node id -> column, -1 if inactive
    Matrix states;
    std::vector<Matrix> projected;              // per order: h x |previous nodes|
    std::vector<std::vector<ShellRecord>> shells;  // [order][column]
  };
  const std::vector<Layer>& layers() const noexcept { return layers_; }

 private:
  const ShellCache* cache_;
  const EncoderParams* params_;
  AggregatorKind kind_;
  std::vector<NodeId> targets_;
  Matrix z_hist_;
  std::vector<Layer> layers_;
};

// Zero-filled parameters with the same shapes as `like`.
EncoderParams zeros_like(const EncoderParams& like);

}  // namespace stancegraph

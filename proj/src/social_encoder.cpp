#include "stancegraph/social_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "stancegraph/error.hpp"

namespace stancegraph {

namespace {

double leaky(double s) { return s > 0 ? s : kLeakySlope * s; }
double leaky_slope_at(double s) { return s > 0 ? 1.0 : kLeakySlope; }

// Attention over columns `cols` of U with center projection uc.
void attend(const Vector& uc, const Matrix& projected,
            std::span<const Eigen::Index> cols, const Vector& a,
            Vector& scores, Vector& weights, Eigen::Ref<Vector> out) {
  const Eigen::Index h = uc.size();
  const auto m = static_cast<Eigen::Index>(cols.size());
  const double base = a.head(h).dot(uc);
  scores.resize(m);
  weights.resize(m);
  double max_e = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < m; ++j) {
    scores[j] = base + a.tail(h).dot(projected.col(cols[j]));
    max_e = std::max(max_e, leaky(scores[j]));
  }
  double total = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    weights[j] = std::exp(leaky(scores[j]) - max_e);
    total += weights[j];
  }
  weights /= total;
  out.setZero();
  for (Eigen::Index j = 0; j < m; ++j) out += weights[j] * projected.col(cols[j]);
}

void check_shell_params(const ShellParams& p, Eigen::Index in_dim, AggregatorKind kind) {
  if (p.projection.cols() != in_dim) {
    throw Error("projection expects input dimension " +
                std::to_string(p.projection.cols()) + ", got " +
                std::to_string(in_dim));
  }
  if (kind == AggregatorKind::H2GAT && p.attention.size() != 2 * p.projection.rows()) {
    throw Error("attention vector must have length 2h");
  }
}

std::vector<std::int32_t> column_map(std::size_t node_count,
                                     const std::vector<NodeId>& nodes) {
  std::vector<std::int32_t> column(node_count, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    column[nodes[i]] = static_cast<std::int32_t>(i);
  }
  return column;
}

// Computes cur.states (and its shell records) from prev.
void run_layer(const ShellCache& cache, const EncoderPass::Layer& prev,
               EncoderPass::Layer& cur, std::span<const ShellParams> layer,
               AggregatorKind kind) {
  const int k = static_cast<int>(layer.size());
  if (k < 1) throw Error("layer must have at least one shell order");
  if (k > cache.max_order()) throw Error("shell cache order is smaller than k");
  const Eigen::Index h = layer.front().projection.rows();
  for (const auto& p : layer) {
    check_shell_params(p, prev.states.rows(), kind);
    if (p.projection.rows() != h) throw Error("inconsistent hidden width");
  }

  const auto count = static_cast<Eigen::Index>(cur.nodes.size());
  cur.states = Matrix::Zero(k * h, count);
  cur.projected.assign(k, Matrix());
  cur.shells.assign(k, std::vector<EncoderPass::ShellRecord>(cur.nodes.size()));

  for (int q = 0; q < k; ++q) {
    const ShellParams& p = layer[q];
    cur.projected[q] = p.projection * prev.states;
    const Matrix& projected = cur.projected[q];
    for (Eigen::Index i = 0; i < count; ++i) {
      const NodeId v = cur.nodes[i];
      const auto& shell = cache.shells(v)[q + 1];
      auto& record = cur.shells[q][i];
      record.members.reserve(shell.size());
      for (NodeId u : shell) {
        const std::int32_t col = prev.column[u];
        if (col < 0) throw Error("receptive field is missing a shell member");
        record.members.push_back(col);
      }
      if (record.members.empty()) continue;
      auto out = cur.states.col(i).segment(q * h, h);
      if (kind == AggregatorKind::H2GAT) {
        const Vector uc = projected.col(prev.column[v]);
        attend(uc, projected, record.members, p.attention, record.scores,
               record.weights, out);
      } else {
        for (Eigen::Index col : record.members) out += projected.col(col);
        out /= static_cast<double>(record.members.size());
      }
    }
  }
}

}  // namespace

std::string_view to_string(AggregatorKind kind) noexcept {
  return kind == AggregatorKind::H2GAT ? "h2gat" : "h2gcn";
}

std::optional<AggregatorKind> parse_aggregator_kind(std::string_view text) noexcept {
  if (text == "h2gat" || text == "H2GAT") return AggregatorKind::H2GAT;
  if (text == "h2gcn" || text == "H2GCN") return AggregatorKind::H2GCN;
  return std::nullopt;
}

Vector aggregate_history_pe(std::span<const Vector> history, const Vector& alpha,
                            Eigen::Index dim) {
  if (static_cast<Eigen::Index>(history.size()) > alpha.size()) {
    throw Error("history longer than the number of position weights");
  }
  Vector out = Vector::Zero(dim);
  for (std::size_t m = 0; m < history.size(); ++m) {
    if (history[m].size() != dim) throw Error("history embedding dimension mismatch");
    out += alpha[static_cast<Eigen::Index>(m)] * history[m];
  }
  return out;
}

Vector aggregate_history_mean(std::span<const Vector> history, Eigen::Index dim) {
  Vector out = Vector::Zero(dim);
  if (history.empty()) return out;
  for (const Vector& v : history) {
    if (v.size() != dim) throw Error("history embedding dimension mismatch");
    out += v;
  }
  return out / static_cast<double>(history.size());
}

Attention gat_attend(const Vector& center, std::span<const Vector> neighbors,
                     const ShellParams& params) {
  check_shell_params(params, center.size(), AggregatorKind::H2GAT);
  const Eigen::Index h = params.projection.rows();
  Attention result{Vector::Zero(h), Vector()};
  if (neighbors.empty()) return result;

  std::vector<std::size_t> order(neighbors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (const Vector& n : neighbors) {
    if (n.size() != center.size()) throw Error("neighbor state dimension mismatch");
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(neighbors[a].data(),
                                        neighbors[a].data() + neighbors[a].size(),
                                        neighbors[b].data(),
                                        neighbors[b].data() + neighbors[b].size());
  });

  const auto m = static_cast<Eigen::Index>(neighbors.size());
  Matrix projected(h, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    projected.col(j).noalias() = params.projection * neighbors[order[j]];
  }
  const Vector uc = params.projection * center;
  std::vector<Eigen::Index> cols(neighbors.size());
  std::iota(cols.begin(), cols.end(), Eigen::Index{0});
  Vector scores, weights;
  attend(uc, projected, cols, params.attention, scores, weights, result.output);

  result.weights.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) result.weights[order[j]] = weights[j];
  return result;
}

Vector gat_aggregate(const Vector& center, std::span<const Vector> neighbors,
                     const ShellParams& params) {
  return gat_attend(center, neighbors, params).output;
}

Vector gcn_aggregate(std::span<const Vector> neighbors, const ShellParams& params) {
  const Eigen::Index h = params.projection.rows();
  if (neighbors.empty()) return Vector::Zero(h);
  Vector mean = Vector::Zero(params.projection.cols());
  for (const Vector& n : neighbors) {
    if (n.size() != mean.size()) throw Error("neighbor state dimension mismatch");
    mean += n;
  }
  mean /= static_cast<double>(neighbors.size());
  return params.projection * mean;
}

Matrix h2_layer(const ShellCache& cache, const Matrix& states,
                std::span<const ShellParams> layer, AggregatorKind kind) {
  const SocialGraph& g = cache.graph();
  if (static_cast<std::size_t>(states.cols()) != g.node_count()) {
    throw Error("states must have one column per graph node");
  }
  EncoderPass::Layer prev;
  prev.nodes.resize(g.node_count());
  std::iota(prev.nodes.begin(), prev.nodes.end(), NodeId{0});
  prev.column = column_map(g.node_count(), prev.nodes);
  prev.states = states;
  EncoderPass::Layer cur;
  cur.nodes = prev.nodes;
  cur.column = prev.column;
  run_layer(cache, prev, cur, layer, kind);
  return std::move(cur.states);
}

Matrix social_encode(const ShellCache& cache, const Matrix& z_hist,
                     const EncoderParams& params, AggregatorKind kind) {
  const SocialGraph& g = cache.graph();
  std::vector<NodeId> all(g.node_count());
  std::iota(all.begin(), all.end(), NodeId{0});
  EncoderPass pass(cache, params, kind, all);
  pass.forward(z_hist);
  const int dim = social_output_dim(params.hidden(), params.order());
  Matrix out(dim, static_cast<Eigen::Index>(all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = pass.social(i);
  }
  return out;
}

EncoderPass::EncoderPass(const ShellCache& cache, const EncoderParams& params,
                         AggregatorKind kind, std::vector<NodeId> targets)
    : cache_(&cache), params_(&params), kind_(kind), targets_(std::move(targets)) {
  const int k = params.order();
  if (k < 1) throw Error("encoder needs at least one layer");
  if (k > cache.max_order()) throw Error("shell cache order is smaller than k");
  const std::size_t n = cache.graph().node_count();
  for (NodeId t : targets_) {
    if (!cache.graph().contains(t)) throw Error("target node not in graph");
  }

  layers_.resize(static_cast<std::size_t>(k) + 1);
  std::vector<NodeId> active = targets_;
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  for (int l = k; l >= 0; --l) {
    layers_[l].nodes = active;
    layers_[l].column = column_map(n, active);
    if (l == 0) break;
    std::vector<NodeId> wider;
    for (NodeId v : active) {
      for (const auto& shell : cache.shells(v)) {
        wider.insert(wider.end(), shell.begin(), shell.end());
      }
    }
    std::sort(wider.begin(), wider.end());
    wider.erase(std::unique(wider.begin(), wider.end()), wider.end());
    active = std::move(wider);
  }
}

void EncoderPass::forward(const Matrix& z_hist) {
  const EncoderParams& p = *params_;
  if (z_hist.rows() != p.text_dim() ||
      static_cast<std::size_t>(z_hist.cols()) != layers_.front().nodes.size()) {
    throw Error("z_hist shape does not match the receptive field");
  }
  z_hist_ = z_hist;
  Layer& base = layers_.front();
  base.states = p.input_projection * z_hist;
  base.states.colwise() += p.input_bias;
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    run_layer(*cache_, layers_[l - 1], layers_[l], p.layers[l - 1], kind_);
  }
}

Vector EncoderPass::social(std::size_t target_index) const {
  const NodeId v = targets_.at(target_index);
  Eigen::Index total = 0;
  for (const Layer& layer : layers_) total += layer.states.rows();
  Vector out(total);
  Eigen::Index offset = 0;
  for (const Layer& layer : layers_) {
    const Eigen::Index rows = layer.states.rows();
    out.segment(offset, rows) = layer.states.col(layer.column[v]);
    offset += rows;
  }
  return out;
}

Matrix EncoderPass::backward(const Matrix& d_social, EncoderParams& grads) const {
  const EncoderParams& p = *params_;
  if (static_cast<std::size_t>(d_social.cols()) != targets_.size()) {
    throw Error("d_social must have one column per target");
  }
  std::vector<Matrix> d_states(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    d_states[l] = Matrix::Zero(layers_[l].states.rows(),
                               static_cast<Eigen::Index>(layers_[l].nodes.size()));
  }
  for (std::size_t t = 0; t < targets_.size(); ++t) {
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Eigen::Index rows = layers_[l].states.rows();
      d_states[l].col(layers_[l].column[targets_[t]]) +=
          d_social.col(static_cast<Eigen::Index>(t)).segment(offset, rows);
      offset += rows;
    }
  }

  const Eigen::Index h = p.hidden();
  for (std::size_t l = layers_.size() - 1; l >= 1; --l) {
    const Layer& cur = layers_[l];
    const Layer& prev = layers_[l - 1];
    const auto& layer_params = p.layers[l - 1];
    auto& layer_grads = grads.layers[l - 1];
    for (std::size_t q = 0; q < layer_params.size(); ++q) {
      const Matrix& projected = cur.projected[q];
      Matrix d_projected = Matrix::Zero(h, projected.cols());
      const Vector& a = layer_params[q].attention;
      Vector d_attention = Vector::Zero(a.size());
      for (std::size_t i = 0; i < cur.nodes.size(); ++i) {
        const ShellRecord& record = cur.shells[q][i];
        if (record.members.empty()) continue;
        const Vector g = d_states[l].block(static_cast<Eigen::Index>(q) * h,
                                           static_cast<Eigen::Index>(i), h, 1);
        const auto m = static_cast<Eigen::Index>(record.members.size());
        if (kind_ == AggregatorKind::H2GCN) {
          const Vector share = g / static_cast<double>(m);
          for (Eigen::Index col : record.members) d_projected.col(col) += share;
          continue;
        }
        const Eigen::Index center = prev.column[cur.nodes[i]];
        Vector d_weight(m);
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index col = record.members[j];
          d_weight[j] = g.dot(projected.col(col));
          d_projected.col(col) += record.weights[j] * g;
        }
        const double mean = record.weights.dot(d_weight);
        for (Eigen::Index j = 0; j < m; ++j) {
          const Eigen::Index col = record.members[j];
          const double d_score = record.weights[j] * (d_weight[j] - mean) *
                                 leaky_slope_at(record.scores[j]);
          d_attention.head(h) += d_score * projected.col(center);
          d_attention.tail(h) += d_score * projected.col(col);
          d_projected.col(center) += d_score * a.head(h);
          d_projected.col(col) += d_score * a.tail(h);
        }
      }
      layer_grads[q].projection.noalias() += d_projected * prev.states.transpose();
      if (kind_ == AggregatorKind::H2GAT) layer_grads[q].attention += d_attention;
      d_states[l - 1].noalias() += layer_params[q].projection.transpose() * d_projected;
    }
  }

  const Matrix& d_base = d_states.front();
  grads.input_projection.noalias() += d_base * z_hist_.transpose();
  grads.input_bias += d_base.rowwise().sum();
  return p.input_projection.transpose() * d_base;
}

EncoderParams zeros_like(const EncoderParams& like) {
  EncoderParams out;
  out.input_projection = Matrix::Zero(like.input_projection.rows(), like.input_projection.cols());
  out.input_bias = Vector::Zero(like.input_bias.size());
  out.layers.resize(like.layers.size());
  for (std::size_t l = 0; l < like.layers.size(); ++l) {
    for (const auto& sp : like.layers[l]) {
      out.layers[l].push_back(
          {Matrix::Zero(sp.projection.rows(), sp.projection.cols()),
           Vector::Zero(sp.attention.size())});
    }
  }
  return out;
}

}  // namespace stancegraph

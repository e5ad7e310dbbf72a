#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace stancegraph {

enum class InteractionKind : std::uint8_t { Retweet, Mention };

struct InteractionRecord {
  std::string source;
  std::string target;
  InteractionKind kind = InteractionKind::Retweet;
  std::int64_t timestamp = 0;
};

// CSV with header source,target,kind,timestamp. Self-interactions are dropped.
std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path);

struct WeightedEdge {
  std::string u;  // u < v
  std::string v;
  std::int64_t weight = 0;

  friend bool operator==(const WeightedEdge&, const WeightedEdge&) = default;
};

// Undirected graph over author ids with positive integer edge weights.
class WeightedGraph {
 public:
  void add_node(const std::string& id);
  // Adds `weight` to edge (u, v); self-loops are ignored.
  void add_weight(const std::string& u, const std::string& v,
                  std::int64_t weight = 1);

  std::int64_t weight(const std::string& u, const std::string& v) const;
  const std::set<std::string>& nodes() const noexcept { return nodes_; }
  // Edges sorted by (u, v).
  std::vector<WeightedEdge> edges() const;
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return weights_.size(); }

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;

 private:
  std::set<std::string> nodes_;
  std::map<std::pair<std::string, std::string>, std::int64_t> weights_;
};

WeightedGraph build_interaction_graph(std::span<const InteractionRecord> records);

// Keeps edges with weight >= min_weight. Nodes are never removed.
WeightedGraph prune_edges(const WeightedGraph& g, std::int64_t min_weight = 2);

// Induced subgraph on the nodes present in `keep`.
WeightedGraph restrict_to(const WeightedGraph& g, const std::set<std::string>& keep);

// Follower edges: CSV with header u,v. Each edge contributes weight 1.
WeightedGraph load_follower_graph(const std::filesystem::path& path);

using NodeId = std::uint32_t;

// Immutable undirected graph with dense node ids assigned in ascending
// author-id order and sorted adjacency lists.
class SocialGraph {
 public:
  SocialGraph() = default;
  // Duplicate and self edges are dropped; endpoints must be listed in `nodes`.
  SocialGraph(std::vector<std::string> nodes,
              const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t node_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  double average_degree() const noexcept;

  const std::string& name(NodeId v) const { return names_.at(v); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<NodeId> find(std::string_view id) const;
  // Throws Error("unknown node: ...") when absent.
  NodeId require(std::string_view id) const;
  bool contains(NodeId v) const noexcept { return v < names_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const;
  // Edges as (u, v) with u < v, sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Largest connected component by node count; ties go to the component whose
// smallest author id is smallest. Throws Error("empty graph") on no nodes.
SocialGraph largest_weakly_connected_component(const WeightedGraph& g);

// Nodes within distance k of v, v included, ascending.
std::vector<NodeId> khop_neighborhood(const SocialGraph& g, NodeId v, int k);
// Nodes at distance exactly k of v, ascending. Order 0 is {v}.
std::vector<NodeId> exact_order_neighborhood(const SocialGraph& g, NodeId v, int k);

// All shells 0..k of v from one truncated breadth-first search.
using Shells = std::vector<std::vector<NodeId>>;
Shells shells_of(const SocialGraph& g, NodeId v, int k);

// Memoized shells_of for one graph and a fixed maximum order. Lookups are
// internally synchronized. The graph must outlive the cache.
class ShellCache {
 public:
  ShellCache(const SocialGraph& graph, int max_order);

  const SocialGraph& graph() const noexcept { return *graph_; }
  int max_order() const noexcept { return max_order_; }
  // Shells 0..max_order of v.
  const Shells& shells(NodeId v) const;

 private:
  const SocialGraph* graph_;
  int max_order_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<Shells>> memo_;
};

// Graph files: nodes file with one id per line; edge list CSV u,v.
void write_social_graph(const SocialGraph& g, const std::filesystem::path& nodes_path,
                        const std::filesystem::path& edges_path);
SocialGraph load_social_graph(const std::filesystem::path& nodes_path,
                              const std::filesystem::path& edges_path);
// CSV u,v,weight.
void write_weighted_edges(const WeightedGraph& g, const std::filesystem::path& path);

}  // namespace stancegraph

#include "stancegraph/socialgraph.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <numeric>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"

namespace stancegraph {

namespace {

std::pair<std::string, std::string> ordered(const std::string& u,
                                            const std::string& v) {
  return u < v ? std::make_pair(u, v) : std::make_pair(v, u);
}

// Disjoint sets with path halving and union by size.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

}  // namespace

std::vector<InteractionRecord> load_interactions(const std::filesystem::path& path) {
  static constexpr std::array<std::string_view, 4> kHeader = {
      "source", "target", "kind", "timestamp"};
  const std::string source = path.string();
  std::vector<InteractionRecord> out;
  for (const auto& row : csv::read_file(path, kHeader)) {
    InteractionRecord rec;
    rec.source = row.fields[0];
    rec.target = row.fields[1];
    if (rec.source.empty() || rec.target.empty()) {
      throw InputError(source + " line " + std::to_string(row.line) +
                       ": empty user id");
    }
    if (row.fields[2] == "retweet") {
      rec.kind = InteractionKind::Retweet;
    } else if (row.fields[2] == "mention") {
      rec.kind = InteractionKind::Mention;
    } else {
      throw InputError(source + " line " + std::to_string(row.line) +
                       ": field 'kind' must be retweet|mention");
    }
    rec.timestamp = csv::parse_int(row.fields[3], source, row.line, "timestamp");
    if (rec.source == rec.target) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

void WeightedGraph::add_node(const std::string& id) { nodes_.insert(id); }

void WeightedGraph::add_weight(const std::string& u, const std::string& v,
                               std::int64_t weight) {
  if (u == v) return;
  nodes_.insert(u);
  nodes_.insert(v);
  weights_[ordered(u, v)] += weight;
}

std::int64_t WeightedGraph::weight(const std::string& u, const std::string& v) const {
  auto it = weights_.find(ordered(u, v));
  return it == weights_.end() ? 0 : it->second;
}

std::vector<WeightedEdge> WeightedGraph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(weights_.size());
  for (const auto& [key, w] : weights_) out.push_back({key.first, key.second, w});
  return out;
}

WeightedGraph build_interaction_graph(std::span<const InteractionRecord> records) {
  WeightedGraph g;
  for (const auto& r : records) g.add_weight(r.source, r.target, 1);
  return g;
}

WeightedGraph prune_edges(const WeightedGraph& g, std::int64_t min_weight) {
  if (min_weight < 1) throw Error("min_weight must be at least 1");
  WeightedGraph out;
  for (const auto& n : g.nodes()) out.add_node(n);
  for (const auto& e : g.edges()) {
    if (e.weight >= min_weight) out.add_weight(e.u, e.v, e.weight);
  }
  return out;
}

WeightedGraph restrict_to(const WeightedGraph& g, const std::set<std::string>& keep) {
  WeightedGraph out;
  for (const auto& n : g.nodes()) {
    if (keep.contains(n)) out.add_node(n);
  }
  for (const auto& e : g.edges()) {
    if (keep.contains(e.u) && keep.contains(e.v)) out.add_weight(e.u, e.v, e.weight);
  }
  return out;
}

WeightedGraph load_follower_graph(const std::filesystem::path& path) {
  static constexpr std::array<std::string_view, 2> kHeader = {"u", "v"};
  WeightedGraph g;
  for (const auto& row : csv::read_file(path, kHeader)) {
    if (row.fields[0].empty() || row.fields[1].empty()) {
      throw InputError(path.string() + " line " + std::to_string(row.line) +
                       ": empty user id");
    }
    g.add_weight(row.fields[0], row.fields[1], 1);
  }
  return g;
}

SocialGraph::SocialGraph(std::vector<std::string> nodes,
                         const std::vector<std::pair<std::string, std::string>>& edges)
    : names_(std::move(nodes)) {
  std::sort(names_.begin(), names_.end());
  if (std::adjacent_find(names_.begin(), names_.end()) != names_.end()) {
    throw InputError("duplicate node id in social graph");
  }
  index_.reserve(names_.size());
  for (NodeId i = 0; i < names_.size(); ++i) index_.emplace(names_[i], i);
  adjacency_.resize(names_.size());
  for (const auto& [u, v] : edges) {
    const NodeId a = require(u);
    const NodeId b = require(v);
    if (a == b) continue;
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    edge_count_ += list.size();
  }
  edge_count_ /= 2;
}

double SocialGraph::average_degree() const noexcept {
  if (names_.empty()) return 0.0;
  return 2.0 * static_cast<double>(edge_count_) / static_cast<double>(names_.size());
}

std::optional<NodeId> SocialGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

NodeId SocialGraph::require(std::string_view id) const {
  auto found = find(id);
  if (!found) throw Error("unknown node: " + std::string(id));
  return *found;
}

std::span<const NodeId> SocialGraph::neighbors(NodeId v) const {
  if (!contains(v)) throw Error("unknown node id " + std::to_string(v));
  return adjacency_[v];
}

std::vector<std::pair<NodeId, NodeId>> SocialGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < adjacency_.size(); ++u) {
    for (NodeId v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

SocialGraph largest_weakly_connected_component(const WeightedGraph& g) {
  if (g.node_count() == 0) throw Error("empty graph");
  const std::vector<std::string> names(g.nodes().begin(), g.nodes().end());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);

  DisjointSets sets(names.size());
  const auto edges = g.edges();
  for (const auto& e : edges) sets.unite(index.at(e.u), index.at(e.v));

  // Names are ascending, so the first member seen of a component is its
  // smallest id; strict > keeps the earliest component on size ties.
  std::vector<std::size_t> size(names.size(), 0);
  for (std::size_t i = 0; i < names.size(); ++i) ++size[sets.find(i)];
  std::size_t best_root = sets.find(0);
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (size[root] > size[best_root]) best_root = root;
  }

  std::vector<std::string> keep;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (sets.find(i) == best_root) keep.push_back(names[i]);
  }
  std::vector<std::pair<std::string, std::string>> kept_edges;
  for (const auto& e : edges) {
    if (sets.find(index.at(e.u)) == best_root) kept_edges.emplace_back(e.u, e.v);
  }
  return SocialGraph(std::move(keep), kept_edges);
}

Shells shells_of(const SocialGraph& g, NodeId v, int k) {
  if (!g.contains(v)) throw Error("unknown node id " + std::to_string(v));
  if (k < 0) throw Error("neighborhood order must be non-negative");
  Shells shells;
  shells.push_back({v});
  std::vector<NodeId> visited = {v};
  for (int order = 1; order <= k; ++order) {
    std::vector<NodeId> next;
    for (NodeId u : shells.back()) {
      for (NodeId w : g.neighbors(u)) next.push_back(w);
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    std::vector<NodeId> fresh;
    std::set_difference(next.begin(), next.end(), visited.begin(), visited.end(),
                        std::back_inserter(fresh));
    std::vector<NodeId> merged;
    std::merge(visited.begin(), visited.end(), fresh.begin(), fresh.end(),
               std::back_inserter(merged));
    visited = std::move(merged);
    shells.push_back(std::move(fresh));
  }
  return shells;
}

std::vector<NodeId> khop_neighborhood(const SocialGraph& g, NodeId v, int k) {
  Shells shells = shells_of(g, v, k);
  std::vector<NodeId> out;
  for (const auto& shell : shells) out.insert(out.end(), shell.begin(), shell.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> exact_order_neighborhood(const SocialGraph& g, NodeId v, int k) {
  return std::move(shells_of(g, v, k).back());
}

ShellCache::ShellCache(const SocialGraph& graph, int max_order)
    : graph_(&graph), max_order_(max_order), memo_(graph.node_count()) {
  if (max_order < 0) throw Error("neighborhood order must be non-negative");
}

const Shells& ShellCache::shells(NodeId v) const {
  if (!graph_->contains(v)) throw Error("unknown node id " + std::to_string(v));
  std::lock_guard lock(mutex_);
  auto& slot = memo_[v];
  if (!slot) slot = std::make_unique<Shells>(shells_of(*graph_, v, max_order_));
  return *slot;
}

void write_social_graph(const SocialGraph& g, const std::filesystem::path& nodes_path,
                        const std::filesystem::path& edges_path) {
  std::ofstream nodes(nodes_path);
  if (!nodes) throw InputError("cannot write " + nodes_path.string());
  for (const auto& name : g.names()) nodes << name << '\n';
  std::ofstream edges(edges_path);
  if (!edges) throw InputError("cannot write " + edges_path.string());
  edges << "u,v\n";
  for (const auto& [u, v] : g.edges()) edges << g.name(u) << ',' << g.name(v) << '\n';
}

SocialGraph load_social_graph(const std::filesystem::path& nodes_path,
                              const std::filesystem::path& edges_path) {
  std::ifstream nodes_in(nodes_path);
  if (!nodes_in) throw InputError("cannot open " + nodes_path.string());
  std::vector<std::string> nodes;
  std::string line;
  while (std::getline(nodes_in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) nodes.push_back(line);
  }
  static constexpr std::array<std::string_view, 2> kHeader = {"u", "v"};
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto& row : csv::read_file(edges_path, kHeader)) {
    edges.emplace_back(std::move(row.fields[0]), std::move(row.fields[1]));
  }
  try {
    return SocialGraph(std::move(nodes), edges);
  } catch (const InputError&) {
    throw;
  } catch (const Error& e) {
    throw InputError(edges_path.string() + ": " + e.what());
  }
}

void write_weighted_edges(const WeightedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "u,v,weight\n";
  for (const auto& e : g.edges()) out << e.u << ',' << e.v << ',' << e.weight << '\n';
}

}  // namespace stancegraph

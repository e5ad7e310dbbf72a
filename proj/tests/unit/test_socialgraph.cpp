#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "../support/graph_oracles.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/socialgraph.hpp"

using namespace stancegraph;

namespace {

InteractionRecord rec(std::string s, std::string t, InteractionKind k = InteractionKind::Retweet) {
  return {std::move(s), std::move(t), k, 0};
}

std::vector<std::string> names(const SocialGraph& g, const std::vector<NodeId>& ids) {
  std::vector<std::string> out;
  for (auto v : ids) out.push_back(g.name(v));
  return out;
}

SocialGraph path_abc() { return SocialGraph({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}); }

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "stancegraph_unit_socialgraph";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("build_interaction_graph counts both directions") {
  CHECK(build_interaction_graph({}).node_count() == 0);
  const std::vector<InteractionRecord> two = {rec("a", "b"), rec("b", "a", InteractionKind::Mention)};
  const auto g = build_interaction_graph(two);
  CHECK(g.edge_count() == 1);
  CHECK(g.weight("a", "b") == 2);
  CHECK(g.weight("b", "a") == 2);
}

TEST_CASE("build_interaction_graph matches a tally and ignores order") {
  std::vector<InteractionRecord> records = {rec("a", "b"), rec("c", "a"), rec("b", "a"),
                                            rec("b", "c"), rec("a", "c")};
  std::map<std::pair<std::string, std::string>, int> tally;
  for (const auto& r : records) ++tally[std::minmax(r.source, r.target)];
  const auto g = build_interaction_graph(records);
  CHECK(g.edge_count() == tally.size());
  for (const auto& [pair, count] : tally) CHECK(g.weight(pair.first, pair.second) == count);

  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    rng.shuffle(std::span<InteractionRecord>(records));
    CHECK(build_interaction_graph(records) == g);
  }
}

TEST_CASE("prune_edges") {
  WeightedGraph g;
  g.add_weight("a", "b", 1);
  g.add_weight("b", "c", 2);
  g.add_weight("c", "d", 3);
  const auto p = prune_edges(g);
  CHECK(p.weight("a", "b") == 0);
  CHECK(p.weight("b", "c") == 2);
  CHECK(p.weight("c", "d") == 3);
  CHECK(p.node_count() == 4);  // isolated nodes are kept
  CHECK(prune_edges(g, 1) == g);
}

TEST_CASE("pruning never grows a component") {
  Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    WeightedGraph g;
    for (int i = 0; i < 15; ++i) g.add_node(oracle::node_name(i));
    for (int e = 0; e < 25; ++e) {
      g.add_weight(oracle::node_name(int(rng.below(15))), oracle::node_name(int(rng.below(15))),
                   1 + std::int64_t(rng.below(3)));
    }
    CHECK(largest_weakly_connected_component(prune_edges(g)).node_count() <=
          largest_weakly_connected_component(g).node_count());
  }
}

TEST_CASE("largest_weakly_connected_component") {
  SUBCASE("triangle is itself") {
    WeightedGraph g;
    g.add_weight("a", "b");
    g.add_weight("b", "c");
    g.add_weight("a", "c");
    const auto c = largest_weakly_connected_component(g);
    CHECK(c.node_count() == 3);
    CHECK(c.edge_count() == 3);
  }
  SUBCASE("larger component wins") {
    WeightedGraph g;
    g.add_weight("x", "y");
    g.add_weight("a", "b");
    g.add_weight("b", "c");
    const auto c = largest_weakly_connected_component(g);
    CHECK(c.names() == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("ties go to the smallest id") {
    WeightedGraph g;
    g.add_weight("m", "z");
    g.add_weight("b", "y");
    CHECK(largest_weakly_connected_component(g).names() == std::vector<std::string>{"b", "y"});
  }
  SUBCASE("empty graph") {
    CHECK_THROWS_WITH(largest_weakly_connected_component(WeightedGraph{}), "empty graph");
  }
}

TEST_CASE("neighborhoods on small graphs") {
  const auto g = path_abc();
  const NodeId a = g.require("a");
  CHECK(names(g, khop_neighborhood(g, a, 1)) == std::vector<std::string>{"a", "b"});
  CHECK(names(g, khop_neighborhood(g, a, 0)) == std::vector<std::string>{"a"});
  CHECK(names(g, exact_order_neighborhood(g, a, 0)) == std::vector<std::string>{"a"});
  CHECK(names(g, exact_order_neighborhood(g, a, 1)) == std::vector<std::string>{"b"});
  CHECK(names(g, exact_order_neighborhood(g, a, 2)) == std::vector<std::string>{"c"});
  CHECK_THROWS_AS(g.require("zz"), Error);
  CHECK_THROWS(khop_neighborhood(g, 99, 1));

  const SocialGraph star({"c", "l1", "l2", "l3", "l4"},
                         {{"c", "l1"}, {"c", "l2"}, {"c", "l3"}, {"c", "l4"}});
  CHECK(exact_order_neighborhood(star, star.require("c"), 2).empty());
  CHECK(star.average_degree() == doctest::Approx(8.0 / 5.0));
}

TEST_CASE("neighborhoods match the all-pairs distance oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rg = oracle::erdos_renyi(rng, 1 + int(rng.below(30)), 0.1);
    const auto g = oracle::to_social(rg);
    const auto d = oracle::all_pairs_distances(rg);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      for (int k = 0; k <= 3; ++k) {
        std::vector<NodeId> ball, shell;
        for (NodeId u = 0; u < g.node_count(); ++u) {
          if (d[v][u] <= k) ball.push_back(u);
          if (d[v][u] == k) shell.push_back(u);
        }
        CHECK(khop_neighborhood(g, v, k) == ball);
        CHECK(exact_order_neighborhood(g, v, k) == shell);
      }
    }
  }
}

TEST_CASE("shell cache agrees with direct queries") {
  Rng rng(4);
  const auto rg = oracle::erdos_renyi(rng, 25, 0.15);
  const auto g = oracle::to_social(rg);
  const ShellCache cache(g, 3);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    CHECK(cache.shells(v) == shells_of(g, v, 3));
    CHECK(&cache.shells(v) == &cache.shells(v));
  }
}

TEST_CASE("a connected graph's ball at its diameter is everything") {
  const SocialGraph cycle({"a", "b", "c", "d", "e"},
                          {{"a", "b"}, {"b", "c"}, {"c", "d"}, {"d", "e"}, {"e", "a"}});
  for (NodeId v = 0; v < 5; ++v) CHECK(khop_neighborhood(cycle, v, 2).size() == 5);
}

TEST_CASE("graph files round trip") {
  const auto dir = temp_dir();
  const auto g = path_abc();
  write_social_graph(g, dir / "nodes.txt", dir / "edges.csv");
  const auto back = load_social_graph(dir / "nodes.txt", dir / "edges.csv");
  CHECK(back.names() == g.names());
  CHECK(back.edges() == g.edges());

  std::ofstream(dir / "bad_edges.csv") << "u,v\na,zz\n";
  CHECK_THROWS_AS(load_social_graph(dir / "nodes.txt", dir / "bad_edges.csv"), InputError);
}

TEST_CASE("interaction files") {
  const auto dir = temp_dir();
  std::ofstream(dir / "inter.csv") << "source,target,kind,timestamp\n"
                                      "a,b,retweet,1\n"
                                      "a,a,mention,2\n"
                                      "b,a,mention,3\n";
  const auto records = load_interactions(dir / "inter.csv");
  CHECK(records.size() == 2);  // the self-interaction is dropped
  std::ofstream(dir / "bad.csv") << "source,target,kind,timestamp\na,b,like,1\n";
  CHECK_THROWS_AS(load_interactions(dir / "bad.csv"), InputError);
}

TEST_CASE("follower restriction keeps only listed nodes") {
  WeightedGraph f;
  f.add_weight("a", "b");
  f.add_weight("b", "c");
  f.add_weight("c", "d");
  const auto r = restrict_to(f, {"a", "b", "d"});
  CHECK(r.node_count() == 3);
  CHECK(r.edge_count() == 1);
}

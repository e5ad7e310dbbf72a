#include "stancegraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stancegraph/error.hpp"
#include "stancegraph/hesitancy.hpp"
#include "stancegraph/random.hpp"

namespace stancegraph::synthetic {

namespace {

std::string padded(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05d", prefix, i);
  return buf;
}

// Knuth's multiplication method; fine for the small means used here.
std::int64_t poisson(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  std::int64_t k = 0;
  double p = rng.uniform();
  while (p > limit) {
    ++k;
    p *= rng.uniform();
  }
  return k;
}

}  // namespace

StanceBenchmark make_heterophily_benchmark(const HeterophilyOptions& options,
                                           std::uint64_t seed) {
  if (options.users < 4) throw Error("benchmark needs at least 4 users");
  if (options.dimension < 2 || options.dimension % 2 != 0) {
    throw Error("benchmark dimension must be even and at least 2");
  }
  if (options.history < 0) throw Error("history length must be non-negative");
  Rng rng(seed);
  const int n = options.users;
  const int d = options.dimension;

  std::vector<int> population(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> members(2);
  for (int i = 0; i < n; ++i) {
    population[i] = i % 2;
    members[i % 2].push_back(i);
  }

  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(padded("u", i));

  std::set<std::pair<int, int>> edge_set;
  const auto wanted = static_cast<std::size_t>(std::llround(n * options.mean_degree / 2));
  while (edge_set.size() < wanted) {
    const int u = static_cast<int>(rng.below(std::uint64_t(n)));
    const int side = rng.bernoulli(options.cross_fraction) ? 1 - population[u] : population[u];
    const auto& pool = members[side];
    const int v = pool[rng.below(pool.size())];
    if (u == v) continue;
    edge_set.emplace(std::min(u, v), std::max(u, v));
  }
  std::vector<std::pair<std::string, std::string>> edges;
  for (auto [u, v] : edge_set) edges.emplace_back(names[u], names[v]);

  StanceBenchmark out;
  out.graph = SocialGraph(names, edges);
  out.embeddings = PrecomputedStore(d);

  auto embedding = [&](int cls) {
    const int shown = rng.bernoulli(options.flip) ? 1 - cls : cls;
    Vector v(d);
    for (int j = 0; j < d; ++j) {
      const bool on = (j < d / 2) == (shown == 0);
      v[j] = (on ? 1.0 : 0.0) + options.noise * rng.normal();
    }
    return v;
  };

  std::vector<Post> posts;
  for (int i = 0; i < n; ++i) {
    const int cls = population[i];
    for (int m = 0; m < options.history; ++m) {
      Post p;
      p.id = names[i] + "-h" + std::to_string(m);
      p.author_id = names[i];
      p.timestamp = 1000 + m;
      p.text = "history post";
      out.embeddings.insert(p.id, embedding(cls));
      posts.push_back(std::move(p));
    }
    Post target;
    target.id = names[i] + "-t";
    target.author_id = names[i];
    target.timestamp = 2000;
    target.text = "target post";
    target.label = cls == 0 ? StanceLabel::PO : StanceLabel::NG;
    out.embeddings.insert(target.id, embedding(cls));
    posts.push_back(std::move(target));
  }
  out.corpus = Corpus(std::move(posts));
  return out;
}

gbdt::Dataset make_change_benchmark(const ChangeOptions& options, std::uint64_t seed) {
  if (options.samples < 3) throw Error("change benchmark needs at least 3 samples");
  Rng rng(seed);
  // Exposure to reassuring themes raises the score, the rest lower it.
  constexpr std::array<double, kNumThemes> weights = {1, -1, -1, -1, -1, -1, -1, 1, -1, 1, -1};
  const auto n = static_cast<Eigen::Index>(options.samples);
  gbdt::Dataset data;
  data.features.resize(n, Eigen::Index(kNumThemes));
  std::vector<double> latent(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t f = 0; f < kNumThemes; ++f) {
      const double c = double(poisson(rng, options.mean_count));
      data.features(i, Eigen::Index(f)) = c;
      s += weights[f] * c;
    }
    latent[std::size_t(i)] = s + options.noise * rng.normal();
  }
  std::vector<double> sorted = latent;
  std::sort(sorted.begin(), sorted.end());
  const double low = sorted[sorted.size() / 3];
  const double high = sorted[2 * sorted.size() / 3];
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = latent[std::size_t(i)];
    ChangeClass c = ChangeClass::Unchanged;
    if (s >= high) c = ChangeClass::Increased;
    else if (s < low) c = ChangeClass::Decreased;
    data.labels.push_back(static_cast<int>(c));
    data.ids.push_back(padded("user", int(i)));
  }
  return data;
}

}  // namespace stancegraph::synthetic

#pragma once

#include <cstdint>

#include "stancegraph/corpus.hpp"
#include "stancegraph/embed.hpp"
#include "stancegraph/gbdt.hpp"
#include "stancegraph/socialgraph.hpp"

namespace stancegraph::synthetic {

// Two stance populations (PO and NG) wired mostly across populations. Each
// user writes `history` unlabelled posts followed by one labelled target
// post; every target shares one timestamp. A post embedding is a noisy
// class signal, flipped to the other class with probability `flip`.
struct HeterophilyOptions {
  int users = 500;
  double mean_degree = 6.0;
  double cross_fraction = 0.85;
  int history = 3;
  int dimension = 16;
  double flip = 0.3;
  double noise = 1.0;
};

struct StanceBenchmark {
  Corpus corpus;
  SocialGraph graph;
  PrecomputedStore embeddings{1};
};

StanceBenchmark make_heterophily_benchmark(const HeterophilyOptions& options,
                                           std::uint64_t seed);

// Exposure counts per theme are Poisson; a hidden score (a signed sum of the
// counts plus Gaussian noise) is cut at its tertiles into
// increased / unchanged / decreased.
struct ChangeOptions {
  int samples = 300;
  double mean_count = 3.0;
  double noise = 2.0;
};

gbdt::Dataset make_change_benchmark(const ChangeOptions& options, std::uint64_t seed);

}  // namespace stancegraph::synthetic

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.
//
//   acceptance <stancegraph-cli> <make_fixtures> <work-dir> [suite-start-marker]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/agreement_oracles.hpp"
#include "../support/graph_oracles.hpp"
#include "../support/model_fixture.hpp"
#include "stancegraph/eval.hpp"
#include "stancegraph/gbdt.hpp"
#include "stancegraph/hesitancy.hpp"
#include "stancegraph/model.hpp"
#include "stancegraph/social_encoder.hpp"
#include "stancegraph/socialgraph.hpp"
#include "stancegraph/synthetic.hpp"

namespace fs = std::filesystem;
using namespace stancegraph;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Args {
  std::string cli;
  std::string fixtures_tool;
  fs::path work;
  fs::path marker;
};

// 1. Per-tensor central differences on a 10-node fixture. The parameters
// are random but moderate so the softmax is not saturated; every tensor
// must also carry a non-negligible gradient.
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  auto f = oracle::make_model_fixture(10, 8, 1, 3, 0.2);
  ModelContext ctx(f.graph, f.corpus, f.store, 2);
  TrainConfig config;
  config.k = 2;
  config.lambda = 3;
  config.hidden = 8;
  ModelParams params = init_params(config, 8, 1);
  Rng rng(101);
  for (auto& t : tensors(params)) {
    for (double& x : t.values()) x = 0.5 * rng.normal();
  }
  const auto samples = labelled_samples(ctx);
  double worst = 0, smallest_norm = 1e300, worst_fine = 0;
  std::string worst_name;
  const auto checks = oracle::finite_difference_check(samples, ctx, params, config, 1e-3);
  for (const auto& c : checks) {
    smallest_norm = std::min(smallest_norm, c.gradient_norm);
    if (c.relative_error >= worst) {
      worst = c.relative_error;
      worst_name = c.name;
    }
  }
  for (const auto& c : oracle::finite_difference_check(samples, ctx, params, config, 1e-5)) {
    worst_fine = std::max(worst_fine, c.relative_error);
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-4 && smallest_norm > 1e-6 && elapsed < 30 && checks.size() == 13,
          std::to_string(checks.size()) + " tensors, " + std::to_string(samples.size()) +
              " samples, worst relative error " + fmt("%.2e", worst) + " (" + worst_name +
              ") at step 1e-3, " + fmt("%.2e", worst_fine) + " at step 1e-5, min gradient norm " +
              fmt("%.2e", smallest_norm) + ", " + fmt("%.2f", elapsed) + " s"};
}

// 2. Neighborhoods and components against Floyd-Warshall and quick-find.
Outcome graph_oracles() {
  Rng rng(99);
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + int(rng.below(50));
    const auto rg = oracle::erdos_renyi(rng, n, 0.1);
    const auto g = oracle::to_social(rg);
    const auto dist = oracle::all_pairs_distances(rg);
    const ShellCache cache(g, 3);
    for (int v = 0; v < n; ++v) {
      for (int k = 0; k <= 3; ++k) {
        std::vector<NodeId> ball, shell;
        for (int u = 0; u < n; ++u) {
          if (dist[v][u] <= k) ball.push_back(NodeId(u));
          if (dist[v][u] == k) shell.push_back(NodeId(u));
        }
        auto got_ball = khop_neighborhood(g, NodeId(v), k);
        auto got_shell = exact_order_neighborhood(g, NodeId(v), k);
        std::sort(got_ball.begin(), got_ball.end());
        std::sort(got_shell.begin(), got_shell.end());
        if (got_ball != ball || got_shell != shell) ++mismatches;
        // Shells 0..k partition the k-ball.
        std::vector<NodeId> joined;
        const auto& shells = cache.shells(NodeId(v));
        for (int q = 0; q <= k; ++q) joined.insert(joined.end(), shells[q].begin(), shells[q].end());
        std::sort(joined.begin(), joined.end());
        if (std::adjacent_find(joined.begin(), joined.end()) != joined.end() || joined != ball) ++mismatches;
      }
    }
    const auto lcc = largest_weakly_connected_component(oracle::to_weighted(rg));
    const std::set<std::string> got(lcc.names().begin(), lcc.names().end());
    if (got != oracle::largest_component(rg)) ++mismatches;
  }
  return {mismatches == 0, "100 graphs, k <= 3, " + std::to_string(mismatches) + " mismatches"};
}

// 3. Attention weights form a distribution and ignore neighbor order.
Outcome attention_invariants() {
  Rng rng(7);
  int bad_distribution = 0, not_invariant = 0;
  double worst_sum = 0;
  for (int call = 0; call < 1000; ++call) {
    const int h = 1 + int(rng.below(8));
    const int in = 1 + int(rng.below(8));
    const int m = 1 + int(rng.below(12));
    ShellParams p;
    p.projection = Matrix(h, in);
    for (Eigen::Index i = 0; i < p.projection.size(); ++i) p.projection.data()[i] = rng.normal();
    p.attention = Vector(2 * h);
    for (Eigen::Index i = 0; i < p.attention.size(); ++i) p.attention[i] = 2 * rng.normal();
    Vector center(in);
    for (Eigen::Index i = 0; i < in; ++i) center[i] = rng.normal();
    std::vector<Vector> nbrs(static_cast<std::size_t>(m), Vector(in));
    for (auto& v : nbrs) {
      for (Eigen::Index i = 0; i < in; ++i) v[i] = 3 * rng.normal();
    }
    const auto a = gat_attend(center, nbrs, p);
    const double sum = a.weights.sum();
    worst_sum = std::max(worst_sum, std::abs(sum - 1));
    if ((a.weights.array() < 0).any() || std::abs(sum - 1) > 1e-9) ++bad_distribution;
    std::vector<std::size_t> perm(nbrs.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<Vector> shuffled;
    for (std::size_t i : perm) shuffled.push_back(nbrs[i]);
    const auto b = gat_attend(center, shuffled, p);
    bool same = b.output.size() == a.output.size() &&
                std::equal(a.output.data(), a.output.data() + a.output.size(), b.output.data());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      if (b.weights[Eigen::Index(i)] != a.weights[Eigen::Index(perm[i])]) same = false;
    }
    if (!same) ++not_invariant;
  }
  return {bad_distribution == 0 && not_invariant == 0,
          "1000 calls, max |sum-1| " + fmt("%.1e", worst_sum) + ", " +
              std::to_string(bad_distribution) + " bad distributions, " +
              std::to_string(not_invariant) + " order-dependent outputs"};
}

// 4. Encoder over the graph beats a text-only head on heterophilous data.
Outcome heterophily_benchmark() {
  const auto t0 = Clock::now();
  double gnn = 0, text = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto bench = synthetic::make_heterophily_benchmark({}, seed);
    ModelContext ctx(bench.graph, bench.corpus, bench.embeddings, 2);
    TrainConfig config;
    config.epochs = 100;
    config.learning_rate = 1e-2;
    config.weight_decay = 0;
    config.hidden = 16;
    config.batch_size = 64;
    config.seed = seed;
    const double a = train(ctx, config).test.accuracy;
    config.text_only = true;
    const double b = train(ctx, config).test.accuracy;
    gnn += a / 5;
    text += b / 5;
    per_seed += (seed > 1 ? " " : "") + fmt("%.3f", a) + "/" + fmt("%.3f", b);
  }
  const double elapsed = seconds_since(t0);
  const double gap = 100 * (gnn - text);
  return {gap >= 5 && elapsed < 300,
          "graph " + fmt("%.4f", gnn) + " vs text-only " + fmt("%.4f", text) + ", gap " +
              fmt("%.1f", gap) + " points [" + per_seed + "], " + fmt("%.1f", elapsed) + " s"};
}

// 5. Position weights reduce to latest-only and to the mean.
Outcome position_encoding_degeneracy() {
  Rng rng(5);
  int latest_mismatch = 0;
  double worst_mean = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int lambda = 1 + int(rng.below(6));
    const int d = 1 + int(rng.below(10));
    std::vector<Vector> history(static_cast<std::size_t>(lambda), Vector(d));
    for (auto& v : history) {
      for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
    }
    Vector one_hot = Vector::Zero(lambda);
    one_hot[0] = 1;
    if (aggregate_history_pe(history, one_hot, d) != history[0]) ++latest_mismatch;
    const Vector uniform = Vector::Constant(lambda, 1.0 / lambda);
    const Vector pe = aggregate_history_pe(history, uniform, d);
    const Vector mean = aggregate_history_mean(history, d);
    const double scale = std::max(1.0, mean.cwiseAbs().maxCoeff());
    worst_mean = std::max(worst_mean, (pe - mean).cwiseAbs().maxCoeff() / scale);
  }
  return {latest_mismatch == 0 && worst_mean <= 1e-12,
          "500 histories, latest-only mismatches " + std::to_string(latest_mismatch) +
              ", max scaled |PE-mean| " + fmt("%.1e", worst_mean)};
}

// 6. Agreement statistics.
Outcome agreement_statistics() {
  std::vector<std::string> problems;
  for (const auto& counts : std::vector<std::vector<std::vector<std::int64_t>>>{
           {{2, 0}, {0, 2}}, {{3, 0, 0}, {0, 3, 0}, {0, 0, 3}, {3, 0, 0}}, {{0, 5}, {5, 0}, {5, 0}}}) {
    const auto m = RatingMatrix::from_counts(counts);
    if (average_observed_agreement(m) != 1.0 || fleiss_kappa(m) != 1.0 ||
        krippendorff_alpha(m) != 1.0) {
      problems.push_back("perfect agreement not 1");
    }
  }
  const double disagree = fleiss_kappa(RatingMatrix::from_counts({{1, 1}, {1, 1}}));
  if (disagree != -1.0) problems.push_back("disagreement kappa " + fmt("%.17g", disagree));
  const auto m = RatingMatrix::from_counts(oracle::kSixRaters);
  const auto items = oracle::expand(oracle::kSixRaters);
  const double dk = std::abs(fleiss_kappa(m) - oracle::oracle_fleiss(oracle::kSixRaters));
  const double da = std::abs(krippendorff_alpha(m) - oracle::oracle_alpha(items));
  const double dao = std::abs(average_observed_agreement(m) - oracle::oracle_aoa(items));
  const double worst = std::max({dk, da, dao});
  if (worst > 1e-9) problems.push_back("14x5 table off by " + fmt("%.1e", worst));
  return {problems.empty(), problems.empty()
                                ? "perfect = 1, two-rater kappa = -1, 14x5 table within " + fmt("%.1e", worst)
                                : problems.front()};
}

// 7. Hesitancy score and change threshold.
Outcome hesitancy_formula() {
  bool ok = hesitancy_score(3, 1) == 0.5 && hesitancy_score(0, 2) == -1.0 &&
            hesitancy_score(2, 2) == 0.0;
  ok = ok && classify_change(0.0, 0.05) == ChangeClass::Increased;
  ok = ok && classify_change(0.0, -0.05) == ChangeClass::Decreased;
  ok = ok && classify_change(0.0, 0.0499) == ChangeClass::Unchanged;
  ok = ok && classify_change(0.0, -0.0499) == ChangeClass::Unchanged;
  ok = ok && classify_change(0.5, 0.5) == ChangeClass::Unchanged;
  return {ok, "(3,1)->0.5 (0,2)->-1 (2,2)->0; |delta| = 0.05 changes, 0.0499 does not"};
}

// 8. Boosting on separable data and on the change benchmark.
Outcome gbdt_checks() {
  Rng rng(11);
  const int n = 200;
  gbdt::FeatureMatrix x(n, 11);
  std::vector<int> y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = int(rng.below(3));
    for (int j = 0; j < 11; ++j) x(i, j) = double(rng.below(6));
    // Feature 3 carries the class: thresholds 9.5 and 19.5 separate it.
    x(i, 3) = 10.0 * y[i] + double(rng.below(10));
  }
  int rounds_needed = -1;
  for (int rounds = 1; rounds <= 20 && rounds_needed < 0; ++rounds) {
    const auto m = gbdt::fit(x, y, {rounds, 5, 0.1, 3});
    if (gbdt::evaluate(m, x, y).accuracy == 1.0) rounds_needed = rounds;
  }
  const auto full = gbdt::fit(x, y, {100, 5, 0.1, 3});
  const auto prior = gbdt::fit(x, y, {0, 5, 0.1, 3});
  const double ll = gbdt::log_loss(full, x, y);
  const double ll_prior = gbdt::log_loss(prior, x, y);

  double model_acc = 0, majority_acc = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = synthetic::make_change_benchmark({}, seed);
    std::vector<Eigen::Index> rows(std::size_t(data.features.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    Rng shuffle_rng(seed);
    shuffle_rng.shuffle(std::span<Eigen::Index>(rows));
    const auto cut = rows.begin() + std::ptrdiff_t(std::lround(0.8 * double(rows.size())));
    const std::vector<Eigen::Index> train_rows(rows.begin(), cut), test_rows(cut, rows.end());
    auto take = [&](const std::vector<Eigen::Index>& idx, gbdt::FeatureMatrix& fx, std::vector<int>& fy) {
      fx.resize(Eigen::Index(idx.size()), data.features.cols());
      fy.clear();
      for (std::size_t i = 0; i < idx.size(); ++i) {
        fx.row(Eigen::Index(i)) = data.features.row(idx[i]);
        fy.push_back(data.labels[std::size_t(idx[i])]);
      }
    };
    gbdt::FeatureMatrix train_x, test_x;
    std::vector<int> train_y, test_y;
    take(train_rows, train_x, train_y);
    take(test_rows, test_x, test_y);
    const auto model = gbdt::fit(train_x, train_y, {100, 5, 0.1, 3});
    model_acc += gbdt::evaluate(model, test_x, test_y).accuracy / 5;
    std::array<int, 3> counts{};
    for (int v : train_y) ++counts[std::size_t(v)];
    const int majority = int(std::max_element(counts.begin(), counts.end()) - counts.begin());
    majority_acc += double(std::count(test_y.begin(), test_y.end(), majority)) / double(test_y.size()) / 5;
  }
  const bool pass = rounds_needed > 0 && ll < ll_prior && model_acc > majority_acc;
  return {pass, "separable accuracy 1.0 after " + std::to_string(rounds_needed) +
                    " rounds, log-loss " + fmt("%.4f", ll) + " < priors " + fmt("%.4f", ll_prior) +
                    ", change benchmark " + fmt("%.4f", model_acc) + " vs majority " +
                    fmt("%.4f", majority_acc)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

// 9. Two invocations with the same inputs give identical bytes.
Outcome cli_determinism(const Args& args) {
  const fs::path dir = args.work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string fx = quote(dir.string());
  if (std::system((quote(args.fixtures_tool) + " " + fx + " 60 3").c_str()) != 0) {
    return {false, "fixture generation failed"};
  }
  std::vector<std::string> differing;
  for (int run = 0; run < 2; ++run) {
    const std::string r = std::to_string(run);
    const std::string train =
        quote(args.cli) + " train --posts " + quote((dir / "posts.jsonl").string()) + " --nodes " +
        quote((dir / "nodes.txt").string()) + " --edges " + quote((dir / "edges.csv").string()) +
        " --embeddings " + quote((dir / "embeddings.tsv").string()) +
        " --epochs 5 --hidden 8 --lr 0.01 --seed 17 --checkpoint " +
        quote((dir / ("model" + r + ".ckpt")).string()) + " --log " +
        quote((dir / ("log" + r + ".csv")).string()) + " > " + quote((dir / ("train" + r + ".out")).string());
    const std::string change = quote(args.cli) + " predict-change --data " +
                               quote((dir / "change.csv").string()) + " --rounds 20 --seed 17 > " +
                               quote((dir / ("change" + r + ".out")).string());
    if (std::system(train.c_str()) != 0) return {false, "train exited non-zero"};
    if (std::system(change.c_str()) != 0) return {false, "predict-change exited non-zero"};
  }
  for (const std::string stem : {"train", "change"}) {
    if (slurp(dir / (stem + "0.out")) != slurp(dir / (stem + "1.out"))) differing.push_back(stem + " stdout");
  }
  if (slurp(dir / "log0.csv") != slurp(dir / "log1.csv")) differing.push_back("metric log");
  if (slurp(dir / "model0.ckpt") != slurp(dir / "model1.ckpt")) differing.push_back("checkpoint");
  const bool nonempty = !slurp(dir / "train0.out").empty() && !slurp(dir / "change0.out").empty();
  return {differing.empty() && nonempty,
          differing.empty() ? "train stdout, metric log, checkpoint and predict-change stdout identical"
                            : "differs: " + differing.front()};
}

// 10. Split arithmetic.
Outcome split_arithmetic() {
  const auto s = split_sizes(18246, SplitFractions{0.8, 0.1, 0.1});
  std::vector<int> items(18246);
  std::iota(items.begin(), items.end(), 0);
  const auto parts = split_dataset(items, SplitFractions{}, 1);
  const bool pass = s.train == 14596 && s.validation == 1825 && s.test == 1825 &&
                    parts.train.size() == 14596 && parts.validation.size() == 1825 &&
                    parts.test.size() == 1825;
  return {pass, std::to_string(s.train) + "/" + std::to_string(s.validation) + "/" +
                    std::to_string(s.test)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 4) {
    std::cerr << "usage: acceptance <stancegraph-cli> <make_fixtures> <work-dir> [suite-start-marker]\n";
    return 2;
  }
  Args args{argv[1], argv[2], argv[3], argc > 4 ? fs::path(argv[4]) : fs::path()};
  fs::create_directories(args.work);
  const auto t0 = Clock::now();

  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", gradient_fidelity},
      {2, "graph oracles", graph_oracles},
      {3, "attention invariants", attention_invariants},
      {4, "heterophily benchmark", heterophily_benchmark},
      {5, "position encoding degeneracy", position_encoding_degeneracy},
      {6, "agreement statistics", agreement_statistics},
      {7, "hesitancy formula", hesitancy_formula},
      {8, "gradient boosted trees", gbdt_checks},
      {9, "CLI determinism", [&] { return cli_determinism(args); }},
      {10, "split arithmetic", split_arithmetic},
  };
  int failures = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << " (" << name << "): " << o.detail
              << std::endl;
    if (!o.pass) ++failures;
  };
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    report(c.id, c.name, o);
  }

  // 11. Runtime: since the suite start marker when ctest provides one,
  // otherwise just this binary.
  double elapsed = seconds_since(t0);
  std::string scope = "acceptance binary";
  if (!args.marker.empty() && fs::exists(args.marker)) {
    const auto since = fs::file_time_type::clock::now() - fs::last_write_time(args.marker);
    elapsed = std::chrono::duration<double>(since).count();
    scope = "test suite up to and including acceptance";
  }
  report(11, "suite runtime", {elapsed < 600, scope + " took " + fmt("%.1f", elapsed) + " s (limit 600 s)"});
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

// Batch command-line front end. Exit codes: 0 success, 2 input or config
// error, 3 runtime failure, 4 empty result.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stancegraph/corpus.hpp"
#include "stancegraph/csv.hpp"
#include "stancegraph/embed.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/eval.hpp"
#include "stancegraph/gbdt.hpp"
#include "stancegraph/hesitancy.hpp"
#include "stancegraph/model.hpp"
#include "stancegraph/random.hpp"
#include "stancegraph/socialgraph.hpp"

namespace sg = stancegraph;
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitEmpty = 4;

struct EmptyResult : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw sg::InputError("cannot write " + path.string());
  return out;
}

// Runs `body`, turning library errors about bad input data into InputError.
template <class F>
auto as_input(F&& body) {
  try {
    return body();
  } catch (const sg::InputError&) {
    throw;
  } catch (const sg::DivergenceError&) {
    throw;
  } catch (const sg::Error& e) {
    throw sg::InputError(e.what());
  }
}

std::string fmt(double v) { return sg::csv::format_double(v); }

ordered_json report_json(const sg::MetricReport& r) {
  return ordered_json::parse(sg::to_json(r));
}

// ---- config file handling ------------------------------------------------

// Turns key=value lines into --key=value arguments.
std::vector<std::string> config_arguments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw sg::InputError("cannot open config " + path.string());
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw sg::InputError(path.string() + " line " + std::to_string(line_no) +
                           ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || key == "config") {
      throw sg::InputError(path.string() + " line " + std::to_string(line_no) +
                           ": invalid key");
    }
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// Config values are spliced in right after the subcommand name so that
// flags given on the command line, parsed later, take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<fs::path> config;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw sg::InputError("--config needs a file");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return rest;
  if (rest.size() < 2) throw sg::InputError("--config must follow a subcommand");
  auto injected = config_arguments(*config);
  rest.insert(rest.begin() + 2, injected.begin(), injected.end());
  return rest;
}

// ---- shared inputs ---------------------------------------------------------

struct GraphInputs {
  std::string nodes;
  std::string edges;

  void add(CLI::App* cmd) {
    cmd->add_option("--nodes", nodes, "Graph nodes file, one user id per line")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--edges", edges, "Graph edge list CSV u,v")
        ->required()
        ->check(CLI::ExistingFile);
  }
  sg::SocialGraph load() const {
    return as_input([&] { return sg::load_social_graph(nodes, edges); });
  }
};

struct ProviderInputs {
  std::string embeddings;
  int hashed_dim = 64;

  void add(CLI::App* cmd) {
    cmd->add_option("--embeddings", embeddings,
                    "Precomputed embedding store; the hashed n-gram encoder is used when absent")
        ->check(CLI::ExistingFile);
    cmd->add_option("--hashed-dim", hashed_dim, "Dimension of the hashed n-gram encoder")
        ->check(CLI::PositiveNumber);
  }
  std::unique_ptr<sg::EmbeddingProvider> load() const {
    if (!embeddings.empty()) {
      return std::make_unique<sg::PrecomputedStore>(sg::load_embedding_store(embeddings));
    }
    return std::make_unique<sg::HashedNgramEncoder>(hashed_dim);
  }
};

struct TrainOptions {
  sg::TrainConfig config;
  std::string aggregator = "h2gat";
  std::string history = "pe";

  void add(CLI::App* cmd) {
    auto& c = config;
    cmd->add_option("--epochs", c.epochs, "Training epochs");
    cmd->add_option("--lr", c.learning_rate, "Adam learning rate");
    cmd->add_option("--weight-decay", c.weight_decay, "Decoupled weight decay");
    cmd->add_option("--k", c.k, "Neighborhood order and number of layers");
    cmd->add_option("--lambda", c.lambda, "History length per user");
    cmd->add_option("--hidden", c.hidden, "Hidden width h");
    cmd->add_option("--batch-size", c.batch_size, "Mini-batch size (0 = full batch)");
    cmd->add_option("--aggregator", aggregator, "Shell aggregator")
        ->check(CLI::IsMember({"h2gat", "h2gcn"}));
    cmd->add_option("--history", history, "History aggregation")
        ->check(CLI::IsMember({"pe", "mean"}));
    cmd->add_flag("--text-only", c.text_only, "Classify from the post text alone");
    cmd->add_option("--train-frac", c.split.train, "Training fraction");
    cmd->add_option("--val-frac", c.split.validation, "Validation fraction");
    cmd->add_option("--test-frac", c.split.test, "Test fraction");
  }
  sg::TrainConfig resolve(std::uint64_t seed) const {
    sg::TrainConfig out = config;
    out.seed = seed;
    out.aggregator = *sg::parse_aggregator_kind(aggregator);
    out.history = *sg::parse_history_kind(history);
    out.validate();
    return out;
  }
};

// Labels from a classify output file, keyed by post id.
std::map<std::string, sg::StanceLabel> load_predictions(const fs::path& path) {
  static constexpr std::string_view header[] = {"post_id", "label", "p_PO",
                                                "p_NG",    "p_NE",  "p_PD"};
  std::map<std::string, sg::StanceLabel> out;
  for (const auto& row : sg::csv::read_file(path, header)) {
    auto label = sg::parse_stance_label(row.fields[1]);
    if (!label) {
      throw sg::InputError(path.string() + " line " + std::to_string(row.line) +
                           ": unknown label " + row.fields[1]);
    }
    out[row.fields[0]] = *label;
  }
  return out;
}

sg::Corpus relabel(const sg::Corpus& corpus, const std::string& predictions) {
  if (predictions.empty()) return corpus;
  const auto labels = load_predictions(predictions);
  std::vector<sg::Post> posts = corpus.posts();
  for (auto& p : posts) {
    if (auto it = labels.find(p.id); it != labels.end()) p.label = it->second;
  }
  return sg::Corpus(std::move(posts));
}

std::int64_t day_start(const std::string& date) {
  return as_input([&] { return sg::parse_day(date); }) * sg::kSecondsPerDay;
}

// ---- build-graph -------------------------------------------------------------

struct BuildGraphCmd {
  std::string interactions;
  std::string followers;
  std::string out_dir;
  std::int64_t min_weight = 2;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("build-graph", "Build the social graph from interaction logs");
    cmd->add_option("--interactions", interactions, "CSV source,target,kind,timestamp")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--followers", followers, "Optional follower edge CSV u,v")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    cmd->add_option("--min-weight", min_weight, "Minimum interaction count to keep an edge")
        ->check(CLI::PositiveNumber);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto records = sg::load_interactions(interactions);
    const auto pruned = sg::prune_edges(sg::build_interaction_graph(records), min_weight);
    if (pruned.node_count() == 0) throw sg::InputError("empty graph");
    sg::SocialGraph graph = sg::largest_weakly_connected_component(pruned);
    if (!followers.empty()) {
      const std::set<std::string> keep(graph.names().begin(), graph.names().end());
      const auto restricted = sg::restrict_to(sg::load_follower_graph(followers), keep);
      if (restricted.node_count() == 0) throw sg::InputError("empty graph");
      graph = sg::largest_weakly_connected_component(restricted);
    }
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    sg::write_weighted_edges(pruned, dir / "pruned_edges.csv");
    sg::write_social_graph(graph, dir / "nodes.txt", dir / "edges.csv");
    ordered_json stats;
    stats["nodes"] = graph.node_count();
    stats["edges"] = graph.edge_count();
    stats["average_degree"] = graph.average_degree();
    stats["pruned_nodes"] = pruned.node_count();
    stats["pruned_edges"] = pruned.edge_count();
    open_output(dir / "stats.json") << stats.dump(2) << '\n';
    std::cout << stats.dump() << '\n';
  }
};

// ---- train -------------------------------------------------------------------

struct TrainCmd {
  std::string posts;
  GraphInputs graph;
  ProviderInputs provider;
  TrainOptions options;
  std::string checkpoint;
  std::string log;
  const std::uint64_t* seed;

  explicit TrainCmd(const std::uint64_t* s) : seed(s) {}

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "Train the stance classifier");
    cmd->add_option("--posts", posts, "Posts file (JSON lines)")->required()->check(CLI::ExistingFile);
    graph.add(cmd);
    provider.add(cmd);
    options.add(cmd);
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint output path")->required();
    cmd->add_option("--log", log, "Per-epoch metric log CSV")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto config = options.resolve(*seed);
    const auto corpus = sg::load_posts(posts);
    const auto g = graph.load();
    const auto p = provider.load();
    const auto ctx = as_input([&] { return std::make_unique<sg::ModelContext>(g, corpus, *p, config.k); });
    const auto samples = sg::labelled_samples(*ctx);
    as_input([&] { return sg::split_sizes(samples.size(), config.split); });
    const auto result = sg::train(*ctx, samples, config);
    sg::save_checkpoint(checkpoint, {config, p->dimension(), p->describe(), result.params});
    auto out = open_output(log);
    sg::write_metric_log(out, result.log);
    std::cout << sg::to_json(result.test) << '\n';
  }
};

// ---- classify ----------------------------------------------------------------

std::unique_ptr<sg::EmbeddingProvider> provider_for(const sg::Checkpoint& ck,
                                                    const std::string& embeddings) {
  if (ck.provider.rfind("hashed:", 0) == 0) {
    int d = 0, lo = 0, hi = 0;
    if (std::sscanf(ck.provider.c_str(), "hashed:d=%d,n=%d-%d", &d, &lo, &hi) != 3) {
      throw sg::InputError("unrecognised provider in checkpoint: " + ck.provider);
    }
    return std::make_unique<sg::HashedNgramEncoder>(d, lo, hi);
  }
  if (embeddings.empty()) {
    throw sg::InputError("checkpoint was trained on an embedding store; pass --embeddings");
  }
  auto store = sg::load_embedding_store(embeddings, ck.text_dim);
  return std::make_unique<sg::PrecomputedStore>(std::move(store));
}

struct ClassifyCmd {
  std::string checkpoint;
  std::string posts;
  std::string history;
  std::string embeddings;
  std::string out;
  GraphInputs graph;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("classify", "Label posts with a trained checkpoint");
    cmd->add_option("--checkpoint", checkpoint, "Checkpoint from train")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--posts", posts, "Posts to classify (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--history", history, "Posts used for user histories (defaults to --posts)")
        ->check(CLI::ExistingFile);
    graph.add(cmd);
    cmd->add_option("--embeddings", embeddings, "Embedding store when the checkpoint uses one")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output CSV (stdout when absent)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto ck = as_input([&] { return sg::load_checkpoint(checkpoint); });
    const auto targets = sg::load_posts(posts);
    const auto corpus = history.empty() ? targets : sg::load_posts(history);
    const auto g = graph.load();
    const auto p = provider_for(ck, embeddings);
    const auto ctx = as_input([&] {
      return std::make_unique<sg::ModelContext>(g, corpus, *p, ck.config.k);
    });

    std::ostringstream rows;
    rows << "post_id,label,p_PO,p_NG,p_NE,p_PD\n";
    std::size_t classified = 0;
    for (const auto& post : targets.posts()) {
      if (!g.find(post.author_id)) {
        std::cerr << "skipped " << post.id << ": user not in social graph: " << post.author_id
                  << '\n';
        continue;
      }
      const auto pred = as_input([&] { return sg::forward(post, *ctx, ck.params, ck.config); });
      rows << post.id << ',' << sg::to_string(pred.label);
      for (double v : pred.p) rows << ',' << fmt(v);
      rows << '\n';
      ++classified;
    }
    if (out.empty()) {
      std::cout << rows.str();
    } else {
      open_output(out) << rows.str();
    }
    if (classified == 0) throw EmptyResult("no post could be classified");
  }
};

// ---- track -------------------------------------------------------------------

struct TrackCmd {
  std::string posts;
  std::string predictions;
  std::string start;
  std::string end;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("track", "Daily label proportions");
    cmd->add_option("--posts", posts, "Posts file (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--predictions", predictions, "classify output overriding post labels")
        ->check(CLI::ExistingFile);
    cmd->add_option("--start", start, "First day YYYY-MM-DD (default: first labelled day)");
    cmd->add_option("--end", end, "Last day YYYY-MM-DD, inclusive (default: last labelled day)");
    cmd->add_option("--out", out, "Output CSV (stdout when absent)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto corpus = relabel(sg::load_posts(posts), predictions);
    std::vector<sg::Post> labelled;
    for (const auto& p : corpus.posts()) {
      if (p.label) labelled.push_back(p);
    }
    auto floor_day = [](std::int64_t t) {
      return t >= 0 ? t / sg::kSecondsPerDay : -((-t + sg::kSecondsPerDay - 1) / sg::kSecondsPerDay);
    };
    std::optional<std::int64_t> first, last;
    if (!start.empty()) first = day_start(start) / sg::kSecondsPerDay;
    if (!end.empty()) last = day_start(end) / sg::kSecondsPerDay;
    for (const auto& p : labelled) {
      const auto d = floor_day(p.timestamp);
      if (start.empty()) first = first ? std::min(*first, d) : d;
      if (end.empty()) last = last ? std::max(*last, d) : d;
    }
    if (!first || !last) throw EmptyResult("no labelled posts and no date range");
    if (*last < *first) throw sg::InputError("--end is before --start");

    std::ostringstream rows;
    rows << "date,PO,NG,NE,PD\n";
    for (const auto& day : sg::daily_label_proportions(labelled, *first, *last)) {
      rows << sg::format_day(day.day);
      for (std::size_t i = 0; i < sg::kNumStanceLabels; ++i) {
        rows << ',';
        if (day.fractions) rows << fmt((*day.fractions)[i]);
      }
      rows << '\n';
    }
    if (out.empty()) {
      std::cout << rows.str();
    } else {
      open_output(out) << rows.str();
    }
  }
};

// ---- hesitancy ---------------------------------------------------------------

struct HesitancyCmd {
  std::string posts;
  std::string predictions;
  std::string start;
  std::string end;
  int min_posts = 3;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("hesitancy", "Per-user hesitancy scores over a window");
    cmd->add_option("--posts", posts, "Posts file (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--predictions", predictions, "classify output overriding post labels")
        ->check(CLI::ExistingFile);
    cmd->add_option("--start", start, "First day of the window, YYYY-MM-DD")->required();
    cmd->add_option("--end", end, "Last day of the window, YYYY-MM-DD, inclusive")->required();
    cmd->add_option("--min-posts", min_posts, "Stance-bearing posts needed to be scored")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output CSV (stdout when absent)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto corpus = relabel(sg::load_posts(posts), predictions);
    const sg::TimeWindow window{day_start(start), day_start(end) + sg::kSecondsPerDay};
    if (window.end <= window.start) throw sg::InputError("--end is before --start");
    const auto users = sg::eligible_users(corpus, window, min_posts);
    std::ostringstream rows;
    rows << "user,window_start,window_end,n_pos,n_neg,score\n";
    for (const auto& user : users) {
      const auto rec = sg::hesitancy_score(corpus, user, window);
      rows << user << ',' << start << ',' << end << ',' << rec.n_positive << ','
           << rec.n_negative << ',' << fmt(rec.score) << '\n';
    }
    if (out.empty()) {
      std::cout << rows.str();
    } else {
      open_output(out) << rows.str();
    }
    if (users.empty()) throw EmptyResult("no eligible users in the window");
  }
};

// ---- predict-change ------------------------------------------------------------

std::vector<std::string> theme_feature_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < sg::kNumThemes; ++i) {
    names.emplace_back(sg::to_string(static_cast<sg::Theme>(i)));
  }
  return names;
}

struct PredictChangeCmd {
  std::string data;
  std::string posts;
  std::string nodes;
  std::string edges;
  std::string themes;
  std::string period_start = "2020-12-27";
  std::string period_end = "2021-01-20";
  std::int64_t window_days = 14;
  int min_posts = 3;
  double threshold = sg::kDefaultChangeThreshold;
  double quantile = 0.25;
  bool prior_score = false;
  int sessions = 5;
  double test_fraction = 0.2;
  sg::gbdt::Config gbdt;
  std::string features_out;
  const std::uint64_t* seed;

  explicit PredictChangeCmd(const std::uint64_t* s) : seed(s) {}

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "predict-change", "Predict hesitancy change from perceived themes with boosted trees");
    cmd->add_option("--data", data, "Feature CSV (theme columns + label); skips the pipeline")
        ->check(CLI::ExistingFile);
    cmd->add_option("--posts", posts, "Posts file (JSON lines)")->check(CLI::ExistingFile);
    cmd->add_option("--nodes", nodes, "Graph nodes file")->check(CLI::ExistingFile);
    cmd->add_option("--edges", edges, "Graph edge list CSV u,v")->check(CLI::ExistingFile);
    cmd->add_option("--themes", themes, "Theme annotations CSV post_id,theme")
        ->check(CLI::ExistingFile);
    cmd->add_option("--period-start", period_start, "First day of the exposure period");
    cmd->add_option("--period-end", period_end, "Last day of the exposure period, inclusive");
    cmd->add_option("--window-days", window_days, "Days scored before and after the period")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--min-posts", min_posts, "Stance-bearing posts needed in each window")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--threshold", threshold, "Score change below which a user is unchanged");
    cmd->add_option("--quantile", quantile, "Share of originals counted as popular")
        ->check(CLI::Range(1e-9, 1.0));
    cmd->add_flag("--prior-score", prior_score, "Append the pre-period score as a 12th feature");
    cmd->add_option("--sessions", sessions, "Seeded train/test sessions to average")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--test-frac", test_fraction, "Held-out fraction per session")
        ->check(CLI::Range(1e-9, 0.999));
    cmd->add_option("--rounds", gbdt.rounds, "Boosting rounds")->check(CLI::NonNegativeNumber);
    cmd->add_option("--max-depth", gbdt.max_depth, "Maximum tree depth")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--shrinkage", gbdt.shrinkage, "Learning rate of each tree")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--features-out", features_out, "Write the feature table used");
    cmd->callback([this] { run(); });
  }

  sg::gbdt::Dataset from_pipeline(std::vector<std::string>& names) const {
    if (posts.empty() || nodes.empty() || edges.empty() || themes.empty()) {
      throw sg::InputError("either --data or all of --posts, --nodes, --edges, --themes is required");
    }
    const auto corpus = sg::load_posts(posts);
    const auto g = as_input([&] { return sg::load_social_graph(nodes, edges); });
    const auto annotations = sg::load_theme_annotations(themes);
    const sg::TimeWindow period{day_start(period_start), day_start(period_end) + sg::kSecondsPerDay};
    if (period.end <= period.start) throw sg::InputError("--period-end is before --period-start");
    sg::ChangeDatasetOptions opts;
    opts.window_days = window_days;
    opts.min_posts = min_posts;
    opts.threshold = threshold;
    opts.popular_quantile = quantile;
    const auto rows = sg::build_change_dataset(corpus, g, annotations, period, opts);
    names = theme_feature_names();
    if (prior_score) names.emplace_back("PriorScore");
    sg::gbdt::Dataset ds;
    ds.features.resize(Eigen::Index(rows.size()), Eigen::Index(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t f = 0; f < sg::kNumThemes; ++f) {
        ds.features(Eigen::Index(i), Eigen::Index(f)) = double(rows[i].exposure[f]);
      }
      if (prior_score) ds.features(Eigen::Index(i), Eigen::Index(sg::kNumThemes)) = rows[i].score_before;
      ds.labels.push_back(static_cast<int>(rows[i].change));
      ds.ids.push_back(rows[i].user);
    }
    return ds;
  }

  void run() const {
    std::vector<std::string> names;
    sg::gbdt::Dataset ds;
    if (!data.empty()) {
      ds = sg::gbdt::load_dataset(data);
      for (Eigen::Index f = 0; f < ds.features.cols(); ++f) names.push_back("f" + std::to_string(f));
      for (int y : ds.labels) {
        if (y < 0 || y >= int(sg::kNumChangeClasses)) {
          throw sg::InputError("label out of range in " + data);
        }
      }
    } else {
      ds = from_pipeline(names);
    }
    if (!features_out.empty()) {
      auto out = open_output(features_out);
      sg::gbdt::write_dataset(out, ds, names);
    }
    const auto n = static_cast<std::size_t>(ds.features.rows());
    if (n < 3) throw EmptyResult("too few users for train/test sessions: " + std::to_string(n));
    auto n_test = static_cast<std::size_t>(std::llround(double(n) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, n - 2);

    std::vector<sg::MetricReport> reports;
    double majority_total = 0;
    for (int s = 0; s < sessions; ++s) {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      sg::Rng rng(*seed + std::uint64_t(s));
      rng.shuffle(std::span<std::size_t>(order));
      const std::size_t n_train = n - n_test;
      sg::gbdt::FeatureMatrix xtr(Eigen::Index(n_train), ds.features.cols());
      sg::gbdt::FeatureMatrix xte(Eigen::Index(n_test), ds.features.cols());
      std::vector<int> ytr, yte;
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = Eigen::Index(order[i]);
        if (i < n_train) {
          xtr.row(Eigen::Index(i)) = ds.features.row(src);
          ytr.push_back(ds.labels[order[i]]);
        } else {
          xte.row(Eigen::Index(i - n_train)) = ds.features.row(src);
          yte.push_back(ds.labels[order[i]]);
        }
      }
      const auto model = sg::gbdt::fit(xtr, ytr, gbdt);
      reports.push_back(sg::gbdt::evaluate(model, xte, yte));
      std::array<int, sg::kNumChangeClasses> counts{};
      for (int y : ytr) ++counts[std::size_t(y)];
      const int majority = int(std::max_element(counts.begin(), counts.end()) - counts.begin());
      majority_total += double(std::count(yte.begin(), yte.end(), majority)) / double(yte.size());
    }
    auto out = report_json(sg::mean_report(reports));
    out["majority_accuracy"] = majority_total / sessions;
    out["sessions"] = sessions;
    out["users"] = n;
    std::cout << out.dump() << '\n';
  }
};

// ---- agreement -----------------------------------------------------------------

struct AgreementCmd {
  std::string ratings;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("agreement", "Inter-annotator agreement statistics");
    cmd->add_option("--ratings", ratings, "CSV item_id,rater_id,label")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->callback([this] { run(); });
  }

  static ordered_json statistic(double (*fn)(const sg::RatingMatrix&), const sg::RatingMatrix& m) {
    try {
      return fn(m);
    } catch (const sg::Error&) {
      return nullptr;
    }
  }

  static ordered_json stats(const sg::AgreementData& data) {
    const auto m = sg::rating_matrix(data);
    ordered_json out;
    out["aoa"] = statistic(&sg::average_observed_agreement, m);
    out["fleiss_kappa"] = statistic(&sg::fleiss_kappa, m);
    double (*alpha)(const sg::RatingMatrix&) = &sg::krippendorff_alpha;
    out["krippendorff_alpha"] = statistic(alpha, m);
    return out;
  }

  void run() const {
    const auto data = sg::load_agreement(ratings);
    if (data.items.empty()) throw EmptyResult("no ratings");
    ordered_json out;
    out["items"] = data.items.size();
    out["categories"] = data.categories;
    out["overall"] = stats(data);
    ordered_json per_label = ordered_json::object();
    for (std::size_t c = 0; c < data.categories.size(); ++c) {
      per_label[data.categories[c]] = stats(sg::one_vs_rest(data, c));
    }
    out["per_label"] = per_label;
    std::cout << out.dump() << '\n';
  }
};

// ---- sweep ---------------------------------------------------------------------

struct SweepCmd {
  std::string posts;
  GraphInputs graph;
  ProviderInputs provider;
  TrainOptions options;
  std::vector<int> ks = {1, 2, 3};
  std::vector<int> lambdas = {1, 2, 3, 4, 5};
  std::string out;
  const std::uint64_t* seed;

  explicit SweepCmd(const std::uint64_t* s) : seed(s) {}

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "Grid search over k and lambda");
    cmd->add_option("--posts", posts, "Posts file (JSON lines)")->required()->check(CLI::ExistingFile);
    graph.add(cmd);
    provider.add(cmd);
    options.add(cmd);
    cmd->add_option("--ks", ks, "Values of k")->delimiter(',')->check(CLI::PositiveNumber);
    cmd->add_option("--lambdas", lambdas, "Values of lambda")->delimiter(',')->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Grid CSV k,lambda,val_accuracy,test_accuracy")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto config = options.resolve(*seed);
    if (ks.empty() || lambdas.empty()) throw sg::InputError("empty grid");
    const auto corpus = sg::load_posts(posts);
    const auto g = graph.load();
    const auto p = provider.load();
    const int max_k = *std::max_element(ks.begin(), ks.end());
    const auto ctx = as_input([&] { return std::make_unique<sg::ModelContext>(g, corpus, *p, max_k); });
    const auto samples = sg::labelled_samples(*ctx);
    as_input([&] { return sg::split_sizes(samples.size(), config.split); });
    const auto result = sg::sweep(*ctx, samples, config, ks, lambdas);
    auto file = open_output(out);
    file << "k,lambda,val_accuracy,test_accuracy\n";
    for (const auto& c : result.cells) {
      file << c.k << ',' << c.lambda << ',' << fmt(c.val_accuracy) << ',' << fmt(c.test_accuracy)
           << '\n';
    }
    const auto& best = result.cells[result.best];
    ordered_json j;
    j["k"] = best.k;
    j["lambda"] = best.lambda;
    j["val_accuracy"] = best.val_accuracy;
    j["test_accuracy"] = best.test_accuracy;
    std::cout << j.dump() << '\n';
  }
};

int run(int argc, char** argv) {
  std::uint64_t seed = 42;
  CLI::App app{"Social-context stance classification and hesitancy analytics", "stancegraph"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.add_option("--seed", seed, "Seed for every random choice");

  BuildGraphCmd build_graph;
  TrainCmd train(&seed);
  ClassifyCmd classify;
  TrackCmd track;
  HesitancyCmd hesitancy;
  PredictChangeCmd predict_change(&seed);
  AgreementCmd agreement;
  SweepCmd sweep(&seed);
  build_graph.add(app);
  train.add(app);
  classify.add(app);
  track.add(app);
  hesitancy.add(app);
  predict_change.add(app);
  agreement.add(app);
  sweep.add(app);
  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) {
    std::string unused;
    sub->add_option("--config", unused, "key=value file; command-line flags take precedence");
    sub->add_option("--seed", seed, "Seed for every random choice");
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  args.insert(args.begin(), argv[0]);
  try {
    args = expand_config(std::move(args));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  std::vector<const char*> cargs;
  for (const auto& a : args) cargs.push_back(a.c_str());

  try {
    app.parse(int(cargs.size()), cargs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  } catch (const EmptyResult& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEmpty;
  } catch (const sg::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const sg::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (...) {
    std::cerr << "error: unexpected failure\n";
    return kExitRuntime;
  }
}

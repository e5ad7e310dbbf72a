#include "stancegraph/gbdt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/hesitancy.hpp"

namespace stancegraph::gbdt {

namespace {

constexpr double kPriorFloor = 1e-12;
constexpr double kMinGain = 1e-12;
// Gains this close (relative) count as ties, so the lowest feature and
// threshold win instead of summation-order rounding.
constexpr double kTieTolerance = 1e-9;
constexpr std::string_view kModelMagic = "stancegraph-gbdt";
constexpr int kModelVersion = 1;

std::vector<double> softmax(std::vector<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double total = 0;
  for (double& s : scores) {
    s = std::exp(s - top);
    total += s;
  }
  for (double& s : scores) s /= total;
  return scores;
}

std::span<const double> row_of(const FeatureMatrix& x, Eigen::Index i) {
  return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double gain = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> residual, int max_depth,
              int num_classes)
      : x_(x), residual_(residual), max_depth_(max_depth), num_classes_(num_classes) {}

  RegressionTree build() {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(x_.rows()));
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    grow(rows, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int grow(const std::vector<Eigen::Index>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    std::optional<Split> split;
    if (depth < max_depth_ && rows.size() >= 2) split = best_split(rows);
    if (!split) {
      nodes_[id].value = newton_value(rows);
      return id;
    }
    std::vector<Eigen::Index> left, right;
    for (Eigen::Index r : rows) {
      (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    nodes_[id].feature = split->feature;
    nodes_[id].threshold = split->threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::optional<Split> best_split(const std::vector<Eigen::Index>& rows) const {
    const double n = double(rows.size());
    double total = 0;
    for (Eigen::Index r : rows) total += residual_[r];
    const double parent = total * total / n;

    Split best;
    best.gain = kMinGain;
    std::vector<Eigen::Index> order = rows;
    for (Eigen::Index f = 0; f < x_.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return x_(a, f) < x_(b, f);
      });
      double left_sum = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += residual_[order[i]];
        const double lo = x_(order[i], f);
        const double hi = x_(order[i + 1], f);
        if (!(lo < hi)) continue;
        const double threshold = lo + (hi - lo) / 2;
        if (!(lo < threshold && threshold < hi)) continue;
        const double nl = double(i + 1);
        const double nr = n - nl;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
        const double bar = best.feature < 0 ? kMinGain : best.gain * (1 + kTieTolerance);
        if (gain > bar) best = {int(f), threshold, gain};
      }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
  }

  double newton_value(const std::vector<Eigen::Index>& rows) const {
    double num = 0, den = 0;
    for (Eigen::Index r : rows) {
      const double v = residual_[r];
      num += v;
      den += std::abs(v) * (1.0 - std::abs(v));
    }
    if (den < 1e-12) return 0.0;
    return double(num_classes_ - 1) / double(num_classes_) * num / den;
  }

  const FeatureMatrix& x_;
  std::span<const double> residual_;
  int max_depth_;
  int num_classes_;
  std::vector<RegressionTree::Node> nodes_;
};

[[noreturn]] void bad_model(const std::string& why) {
  throw InputError("invalid GBDT model: " + why);
}

double parse_number(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_model("bad number " + s);
  return v;
}

int read_tree_node(std::istream& in, std::vector<RegressionTree::Node>& nodes,
                   int num_features, int depth, int max_depth) {
  std::string line;
  if (!std::getline(in, line)) bad_model("truncated tree");
  std::istringstream fields(line);
  std::string tag;
  fields >> tag;
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (tag == "leaf") {
    std::string v;
    fields >> v;
    nodes[id].value = parse_number(v);
    return id;
  }
  if (tag != "split") bad_model("unexpected node line: " + line);
  if (depth >= max_depth) bad_model("tree deeper than max_depth");
  int feature = -1;
  std::string threshold;
  fields >> feature >> threshold;
  if (feature < 0 || feature >= num_features) bad_model("feature index out of range");
  nodes[id].feature = feature;
  nodes[id].threshold = parse_number(threshold);
  const int l = read_tree_node(in, nodes, num_features, depth + 1, max_depth);
  const int r = read_tree_node(in, nodes, num_features, depth + 1, max_depth);
  nodes[id].left = l;
  nodes[id].right = r;
  return id;
}

}  // namespace

RegressionTree::RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error("a tree needs at least one node");
}

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw Error("empty tree");
  int at = 0;
  while (!nodes_[at].is_leaf()) {
    const Node& n = nodes_[at];
    at = x[std::size_t(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[at].value;
}

int RegressionTree::depth() const {
  std::vector<std::pair<int, int>> stack = {{0, 0}};
  int deepest = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes_[at].is_leaf()) {
      stack.emplace_back(nodes_[at].left, d + 1);
      stack.emplace_back(nodes_[at].right, d + 1);
    }
  }
  return deepest;
}

std::vector<double> Model::scores(std::span<const double> x) const {
  if (!fitted_) throw Error("model is not fitted");
  if (static_cast<int>(x.size()) != num_features_) {
    throw Error("expected " + std::to_string(num_features_) + " features, got " +
                std::to_string(x.size()));
  }
  std::vector<double> out = base_scores_;
  for (const auto& round : trees_) {
    for (std::size_t c = 0; c < round.size(); ++c) {
      out[c] += config_.shrinkage * round[c].predict(x);
    }
  }
  return out;
}

Model from_parts(Config config, int num_features, std::vector<double> base_scores,
                 std::vector<std::vector<RegressionTree>> trees) {
  if (static_cast<int>(base_scores.size()) != config.num_classes) {
    throw Error("one base score per class is required");
  }
  for (const auto& round : trees) {
    if (static_cast<int>(round.size()) != config.num_classes) {
      throw Error("each round needs one tree per class");
    }
  }
  Model m;
  m.fitted_ = true;
  m.config_ = config;
  m.num_features_ = num_features;
  m.base_scores_ = std::move(base_scores);
  m.trees_ = std::move(trees);
  return m;
}

Model fit(const FeatureMatrix& features, std::span<const int> labels, const Config& config) {
  const Eigen::Index n = features.rows();
  const int k = config.num_classes;
  if (n < 2) throw Error("GBDT needs at least 2 samples");
  if (static_cast<std::size_t>(n) != labels.size()) throw Error("labels and features differ in length");
  if (k < 2) throw Error("GBDT needs at least 2 classes");
  if (config.rounds < 0 || config.max_depth < 0) throw Error("rounds and max_depth must be non-negative");
  if (!(config.shrinkage > 0)) throw Error("shrinkage must be positive");

  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (int y : labels) {
    if (y < 0 || y >= k) throw Error("label out of range: " + std::to_string(y));
    counts[std::size_t(y)] += 1;
  }
  std::vector<double> base(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    base[std::size_t(c)] = std::log(std::max(counts[std::size_t(c)] / double(n), kPriorFloor));
  }

  Model model = from_parts(config, int(features.cols()), base, {});
  Eigen::MatrixXd scores(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) scores(i, c) = base[std::size_t(c)];
  }

  std::vector<double> residual(static_cast<std::size_t>(n));
  for (int round = 0; round < config.rounds; ++round) {
    Eigen::MatrixXd prob(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> s(static_cast<std::size_t>(k));
      for (int c = 0; c < k; ++c) s[std::size_t(c)] = scores(i, c);
      const auto p = softmax(std::move(s));
      for (int c = 0; c < k; ++c) prob(i, c) = p[std::size_t(c)];
    }
    std::vector<RegressionTree> trees;
    trees.reserve(std::size_t(k));
    for (int c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        residual[std::size_t(i)] = (labels[std::size_t(i)] == c ? 1.0 : 0.0) - prob(i, c);
      }
      TreeBuilder builder(features, residual, config.max_depth, k);
      trees.push_back(builder.build());
      for (Eigen::Index i = 0; i < n; ++i) {
        scores(i, c) += config.shrinkage * trees.back().predict(row_of(features, i));
      }
    }
    model.trees_.push_back(std::move(trees));
  }
  return model;
}

std::vector<double> predict_proba(const Model& model, std::span<const double> x) {
  return softmax(model.scores(x));
}

int predict(const Model& model, std::span<const double> x) {
  const auto p = predict_proba(model, x);
  return int(std::max_element(p.begin(), p.end()) - p.begin());
}

MetricReport evaluate(const Model& model, const FeatureMatrix& features,
                      std::span<const int> labels) {
  if (features.rows() == 0) throw Error("empty test set");
  std::vector<int> predicted;
  predicted.reserve(std::size_t(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    predicted.push_back(predict(model, row_of(features, i)));
  }
  return classification_metrics(predicted, labels, model.config().num_classes);
}

double log_loss(const Model& model, const FeatureMatrix& features, std::span<const int> labels) {
  if (features.rows() == 0) throw Error("empty dataset");
  double total = 0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const auto p = predict_proba(model, row_of(features, i));
    total -= std::log(std::max(p[std::size_t(labels[std::size_t(i)])], 1e-300));
  }
  return total / double(features.rows());
}

void Model::write(std::ostream& out) const {
  if (!fitted_) throw Error("model is not fitted");
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "classes " << config_.num_classes << '\n';
  out << "features " << num_features_ << '\n';
  out << "rounds " << trees_.size() << '\n';
  out << "max_depth " << config_.max_depth << '\n';
  out << "shrinkage " << csv::format_double(config_.shrinkage) << '\n';
  out << "base";
  for (double b : base_scores_) out << ' ' << csv::format_double(b);
  out << '\n';
  for (std::size_t r = 0; r < trees_.size(); ++r) {
    for (std::size_t c = 0; c < trees_[r].size(); ++c) {
      const auto& nodes = trees_[r][c].nodes();
      out << "tree " << r << ' ' << c << ' ' << nodes.size() << '\n';
      // Nodes are stored in preorder already.
      for (const auto& node : nodes) {
        if (node.is_leaf()) {
          out << "leaf " << csv::format_double(node.value) << '\n';
        } else {
          out << "split " << node.feature << ' ' << csv::format_double(node.threshold) << '\n';
        }
      }
    }
  }
  out << "end\n";
}

Model Model::read(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) bad_model("empty input");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kModelMagic) bad_model("missing header");
    if (version != kModelVersion) bad_model("unsupported version");
  }
  Config config;
  int features = 0;
  std::size_t rounds = 0;
  std::vector<double> base;
  std::vector<std::vector<RegressionTree>> trees;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "classes") {
      fields >> config.num_classes;
    } else if (tag == "features") {
      fields >> features;
    } else if (tag == "rounds") {
      fields >> rounds;
      config.rounds = int(rounds);
    } else if (tag == "max_depth") {
      fields >> config.max_depth;
    } else if (tag == "shrinkage") {
      std::string v;
      fields >> v;
      config.shrinkage = parse_number(v);
    } else if (tag == "base") {
      std::string v;
      while (fields >> v) base.push_back(parse_number(v));
    } else if (tag == "tree") {
      std::size_t r = 0, c = 0, count = 0;
      fields >> r >> c >> count;
      if (r != trees.size() - (c == 0 ? 0 : 1) || (c == 0 && r != trees.size())) {
        bad_model("trees out of order");
      }
      if (c == 0) trees.emplace_back();
      std::vector<RegressionTree::Node> nodes;
      read_tree_node(in, nodes, features, 0, config.max_depth);
      if (nodes.size() != count) bad_model("node count mismatch");
      trees.back().emplace_back(std::move(nodes));
    } else if (tag == "end") {
      if (trees.size() != rounds) bad_model("round count mismatch");
      try {
        return from_parts(config, features, std::move(base), std::move(trees));
      } catch (const Error& e) {
        bad_model(e.what());
      }
    } else if (!tag.empty()) {
      bad_model("unexpected line: " + line);
    }
  }
  bad_model("missing end marker");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  const std::string source = path.string();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) header = csv::split_line(line);
  }
  if (header.size() < 2 || header.back() != "label") {
    throw InputError(source + ": header must end with a 'label' column");
  }
  const bool has_ids = header.front() == "user";
  const std::size_t first_feature = has_ids ? 1 : 0;
  const std::size_t num_features = header.size() - 1 - first_feature;
  if (num_features == 0) throw InputError(source + ": no feature columns");

  std::vector<std::vector<double>> rows;
  Dataset data;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      throw InputError(source + " line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields");
    }
    std::vector<double> row;
    for (std::size_t f = 0; f < num_features; ++f) {
      row.push_back(csv::parse_double(fields[first_feature + f], source, line_no,
                                      header[first_feature + f]));
    }
    const std::string& label = fields.back();
    int y = 0;
    if (auto change = parse_change_class(label)) {
      y = static_cast<int>(*change);
    } else {
      y = int(csv::parse_int(label, source, line_no, "label"));
    }
    data.labels.push_back(y);
    if (has_ids) data.ids.push_back(fields.front());
    rows.push_back(std::move(row));
  }
  data.features.resize(Eigen::Index(rows.size()), Eigen::Index(num_features));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < num_features; ++f) {
      data.features(Eigen::Index(i), Eigen::Index(f)) = rows[i][f];
    }
  }
  return data;
}

void write_dataset(std::ostream& out, const Dataset& data,
                   std::span<const std::string> feature_names) {
  if (feature_names.size() != std::size_t(data.features.cols())) {
    throw Error("feature name count does not match the feature matrix");
  }
  const bool has_ids = !data.ids.empty();
  if (has_ids) out << "user,";
  for (const auto& name : feature_names) out << name << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
    if (has_ids) out << data.ids[std::size_t(i)] << ',';
    for (Eigen::Index f = 0; f < data.features.cols(); ++f) {
      out << csv::format_double(data.features(i, f)) << ',';
    }
    const int y = data.labels[std::size_t(i)];
    if (y >= 0 && y < int(kNumChangeClasses)) {
      out << to_string(static_cast<ChangeClass>(y)) << '\n';
    } else {
      out << y << '\n';
    }
  }
}

}  // namespace stancegraph::gbdt

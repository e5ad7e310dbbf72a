#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stancegraph/eval.hpp"

namespace stancegraph::gbdt {

// Rows are samples, columns are features.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Config {
  int rounds = 100;
  int max_depth = 5;
  double shrinkage = 0.1;
  int num_classes = 3;
};

// Binary regression tree stored in preorder. Samples with
// x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    double value = 0;  // leaf output
    int left = -1;
    int right = -1;
    bool is_leaf() const noexcept { return feature < 0; }
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  double predict(std::span<const double> x) const;
  // Edges on the longest root-to-leaf path; a single leaf has depth 0.
  int depth() const;

 private:
  std::vector<Node> nodes_;
};

class Model {
 public:
  Model() = default;

  bool fitted() const noexcept { return fitted_; }
  const Config& config() const noexcept { return config_; }
  int num_features() const noexcept { return num_features_; }
  const std::vector<double>& base_scores() const noexcept { return base_scores_; }
  // trees()[round][class]
  const std::vector<std::vector<RegressionTree>>& trees() const noexcept { return trees_; }

  // Raw additive scores: base + shrinkage * sum of tree outputs.
  std::vector<double> scores(std::span<const double> x) const;

  void write(std::ostream& out) const;
  static Model read(std::istream& in);

 private:
  friend Model fit(const FeatureMatrix&, std::span<const int>, const Config&);
  friend Model from_parts(Config, int, std::vector<double>,
                          std::vector<std::vector<RegressionTree>>);

  bool fitted_ = false;
  Config config_;
  int num_features_ = 0;
  std::vector<double> base_scores_;
  std::vector<std::vector<RegressionTree>> trees_;
};

// Assembles a fitted model from explicit parts.
Model from_parts(Config config, int num_features, std::vector<double> base_scores,
                 std::vector<std::vector<RegressionTree>> trees);

// Multiclass softmax boosting. Base scores are class log-priors (absent
// classes clamped at 1e-12). Each round fits one tree per class to
// r = onehot - p by exact greedy variance-reduction splits, with Newton leaf
// values (K-1)/K * sum(r) / sum(|r| (1 - |r|)).
Model fit(const FeatureMatrix& features, std::span<const int> labels, const Config& config);

// Throws Error("model is not fitted") on a default-constructed model.
std::vector<double> predict_proba(const Model& model, std::span<const double> x);
// Argmax of predict_proba, lowest index on ties.
int predict(const Model& model, std::span<const double> x);

MetricReport evaluate(const Model& model, const FeatureMatrix& features,
                      std::span<const int> labels);

// Mean multiclass log-loss of the model on a dataset.
double log_loss(const Model& model, const FeatureMatrix& features, std::span<const int> labels);

struct Dataset {
  FeatureMatrix features;
  std::vector<int> labels;
  std::vector<std::string> ids;  // optional row identifiers
};

// CSV with feature columns followed by a `label` column holding
// increased|decreased|unchanged (or a class index). A leading `user` column
// is accepted and kept as row ids.
Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const Dataset& data,
                   std::span<const std::string> feature_names);

}  // namespace stancegraph::gbdt

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stancegraph/corpus.hpp"
#include "stancegraph/embed.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/eval.hpp"
#include "stancegraph/random.hpp"
#include "stancegraph/social_encoder.hpp"
#include "stancegraph/socialgraph.hpp"

namespace stancegraph {

enum class HistoryKind : std::uint8_t { PE, MEAN };

std::string_view to_string(HistoryKind kind) noexcept;
std::optional<HistoryKind> parse_history_kind(std::string_view text) noexcept;

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct TrainConfig {
  int epochs = 400;
  double learning_rate = 1e-5;
  double weight_decay = 5e-4;
  int k = 2;
  int lambda = 3;
  int hidden = 64;
  std::uint64_t seed = 42;
  SplitFractions split;
  int batch_size = 32;  // 0 means full batch
  AggregatorKind aggregator = AggregatorKind::H2GAT;
  HistoryKind history = HistoryKind::PE;
  bool text_only = false;  // head over z_text alone

  // Throws InputError on an invalid combination.
  void validate() const;
};

// All trainable state. In MEAN mode `alpha` is empty; in text-only mode the
// encoder is empty and the head reads z_text directly.
struct ModelParams {
  Vector alpha;           // lambda position weights, alpha[0] = most recent
  EncoderParams encoder;  // input projection + k layers of k shell orders
  Matrix head_weight;     // head_in x 4
  Vector head_bias;       // 4
};

int head_input_dim(const TrainConfig& config, int text_dim) noexcept;

// Xavier-uniform matrices, zero biases, alpha = 1/lambda.
ModelParams init_params(const TrainConfig& config, int text_dim, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& like);

// Flat view of one named tensor (column-major).
struct TensorRef {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const noexcept { return rows * cols; }
  std::span<double> values() const { return {data, static_cast<std::size_t>(size())}; }
};
// Tensors in a fixed order; empty tensors are skipped.
std::vector<TensorRef> tensors(ModelParams& params);

// Inputs shared by forward passes: graph, history corpus, text provider.
// Embeddings of every post written by a graph member are computed up front.
class ModelContext {
 public:
  ModelContext(const SocialGraph& graph, const Corpus& corpus,
               const EmbeddingProvider& provider, int max_order);

  const SocialGraph& graph() const noexcept { return *graph_; }
  const Corpus& corpus() const noexcept { return *corpus_; }
  const EmbeddingProvider& provider() const noexcept { return *provider_; }
  const ShellCache& shells() const noexcept { return shells_; }
  int text_dim() const noexcept { return provider_->dimension(); }

  // Embedding of corpus post `index`; its author must be in the graph.
  const Vector& post_embedding(std::size_t index) const;

 private:
  const SocialGraph* graph_;
  const Corpus* corpus_;
  const EmbeddingProvider* provider_;
  ShellCache shells_;
  std::vector<Vector> embeddings_;
  std::vector<bool> has_embedding_;
};

struct Sample {
  std::size_t post_index;  // into the context corpus
  StanceLabel gold;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Labelled corpus posts whose author is in the graph, in corpus order.
// Retweets count for the retweeting user; quotes carry their own text.
std::vector<Sample> labelled_samples(const ModelContext& context);

struct Prediction {
  std::array<double, kNumStanceLabels> p{};
  StanceLabel label = StanceLabel::PO;
};

// Argmax with the lowest index winning ties.
StanceLabel argmax_label(const std::array<double, kNumStanceLabels>& p) noexcept;

// p = softmax(W^T ReLU(z_social || z_text) + b). Histories are the last
// lambda posts strictly before the post's timestamp. Throws
// Error("user not in social graph") for an off-graph author.
Prediction forward(const Post& post, const ModelContext& context,
                   const ModelParams& params, const TrainConfig& config);
std::vector<Prediction> forward_samples(std::span<const Sample> samples,
                                        const ModelContext& context,
                                        const ModelParams& params,
                                        const TrainConfig& config);

inline constexpr double kProbabilityFloor = 1e-12;

// Mean over the batch of -log(max(p[gold], 1e-12)).
double loss(std::span<const Sample> batch, const ModelContext& context,
            const ModelParams& params, const TrainConfig& config);

struct LossGradient {
  double loss = 0;
  ModelParams gradient;
};

// Exact gradient of the batch loss. A clamped probability contributes no
// gradient. Throws Error naming the tensor on a non-finite gradient.
LossGradient gradients(std::span<const Sample> batch, const ModelContext& context,
                       const ModelParams& params, const TrainConfig& config);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct OptimizerState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;

  static OptimizerState for_params(const ModelParams& params);
};

// Decoupled weight decay (theta -= lr * wd * theta) followed by a
// bias-corrected Adam update.
void adam_step(ModelParams& params, ModelParams& grads, OptimizerState& state,
               double learning_rate, double weight_decay);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// Validation and test sizes are round(n * fraction); the remainder trains.
// Throws Error when any split would be empty or fractions do not sum to 1.
SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions);

template <class T>
struct DatasetSplit {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

// Seeded shuffle, then contiguous train / validation / test slices.
template <class T>
DatasetSplit<T> split_dataset(std::vector<T> items, const SplitFractions& fractions,
                              std::uint64_t seed) {
  const SplitSizes sizes = split_sizes(items.size(), fractions);
  Rng rng(seed);
  rng.shuffle(std::span<T>(items));
  DatasetSplit<T> out;
  auto first = items.begin();
  auto train_end = first + static_cast<std::ptrdiff_t>(sizes.train);
  auto val_end = train_end + static_cast<std::ptrdiff_t>(sizes.validation);
  out.train.assign(std::make_move_iterator(first), std::make_move_iterator(train_end));
  out.validation.assign(std::make_move_iterator(train_end), std::make_move_iterator(val_end));
  out.test.assign(std::make_move_iterator(val_end), std::make_move_iterator(items.end()));
  return out;
}

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0;
  double val_accuracy = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainResult {
  ModelParams params;  // from the best validation epoch (earliest on ties)
  std::vector<EpochMetrics> log;
  int best_epoch = 0;
  double best_val_accuracy = 0;
  MetricReport test;
  SplitSizes sizes;
};

double accuracy(std::span<const Sample> samples, const ModelContext& context,
                const ModelParams& params, const TrainConfig& config);

// Mini-batch Adam over the training split. Throws DivergenceError on a
// non-finite loss.
TrainResult train(const ModelContext& context, const TrainConfig& config);
TrainResult train(const ModelContext& context, std::span<const Sample> samples,
                  const TrainConfig& config);

StanceLabel classify(const Post& post, const ModelContext& context,
                     const ModelParams& params, const TrainConfig& config);

struct SweepCell {
  int k = 0;
  int lambda = 0;
  double val_accuracy = 0;
  double test_accuracy = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // k-major grid order
  std::size_t best = 0;          // highest validation accuracy, first on ties
};

// The context's shell cache must cover max(ks).
SweepResult sweep(const ModelContext& context, std::span<const Sample> samples,
                  const TrainConfig& base, std::span<const int> ks,
                  std::span<const int> lambdas);

struct Checkpoint {
  TrainConfig config;
  int text_dim = 0;
  std::string provider;
  ModelParams params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// CSV epoch,train_loss,val_accuracy.
void write_metric_log(std::ostream& out, std::span<const EpochMetrics> log);

}  // namespace stancegraph

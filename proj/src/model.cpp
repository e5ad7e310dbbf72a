#include "stancegraph/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "stancegraph/csv.hpp"

namespace stancegraph {

namespace {

struct Target {
  NodeId node;
  std::int64_t time;
  const Vector* text;
  std::optional<StanceLabel> gold;
};

Matrix xavier(Eigen::Index rows, Eigen::Index cols, double fan_in, double fan_out,
              Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

std::array<double, kNumStanceLabels> softmax4(const Eigen::Vector4d& logits) {
  const double top = logits.maxCoeff();
  std::array<double, kNumStanceLabels> p{};
  double total = 0;
  for (std::size_t c = 0; c < kNumStanceLabels; ++c) {
    p[c] = std::exp(logits[Eigen::Index(c)] - top);
    total += p[c];
  }
  for (double& x : p) x /= total;
  return p;
}

// History embeddings of `node` before `time`, most recent first.
std::vector<const Vector*> history_of(const ModelContext& ctx, NodeId node,
                                      std::int64_t time, int lambda) {
  std::vector<const Vector*> out;
  for (std::size_t idx : recent_posts(ctx.corpus(), ctx.graph().name(node), time, lambda)) {
    out.push_back(&ctx.post_embedding(idx));
  }
  return out;
}

Vector history_vector(const std::vector<const Vector*>& history, const ModelParams& params,
                      const TrainConfig& config, Eigen::Index dim) {
  Vector out = Vector::Zero(dim);
  if (config.history == HistoryKind::PE) {
    for (std::size_t m = 0; m < history.size(); ++m) {
      out += params.alpha[Eigen::Index(m)] * *history[m];
    }
  } else if (!history.empty()) {
    for (const Vector* v : history) out += *v;
    out /= double(history.size());
  }
  return out;
}

// Runs forward (and optionally backward) over the targets, grouped by
// timestamp. Returns the summed (not averaged) loss over labelled targets.
// Gradients, when requested, are of the mean loss over `targets`.
double run_batch(const ModelContext& ctx, const ModelParams& params,
                 const TrainConfig& config, std::span<const Target> targets,
                 std::vector<Prediction>* predictions, ModelParams* grads) {
  const Eigen::Index text_dim = ctx.text_dim();
  if (predictions) predictions->assign(targets.size(), Prediction{});
  std::map<std::int64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < targets.size(); ++i) groups[targets[i].time].push_back(i);

  const double scale = targets.empty() ? 0.0 : 1.0 / double(targets.size());
  double total_loss = 0;

  for (const auto& [time, members] : groups) {
    std::optional<EncoderPass> pass;
    std::vector<std::vector<const Vector*>> histories;
    std::vector<std::size_t> target_slot(members.size(), 0);
    if (!config.text_only) {
      std::vector<NodeId> nodes;
      for (std::size_t i : members) nodes.push_back(targets[i].node);
      std::vector<NodeId> unique = nodes;
      std::sort(unique.begin(), unique.end());
      unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
      for (std::size_t j = 0; j < members.size(); ++j) {
        target_slot[j] = std::size_t(
            std::lower_bound(unique.begin(), unique.end(), nodes[j]) - unique.begin());
      }
      pass.emplace(ctx.shells(), params.encoder, config.aggregator, std::move(unique));
      const auto& inputs = pass->input_nodes();
      Matrix z_hist(text_dim, Eigen::Index(inputs.size()));
      histories.resize(inputs.size());
      for (std::size_t c = 0; c < inputs.size(); ++c) {
        histories[c] = history_of(ctx, inputs[c], time, config.lambda);
        z_hist.col(Eigen::Index(c)) = history_vector(histories[c], params, config, text_dim);
      }
      pass->forward(z_hist);
    }

    Matrix d_social;
    if (grads && pass) {
      d_social = Matrix::Zero(social_output_dim(config.hidden, config.k),
                              Eigen::Index(pass->targets().size()));
    }
    for (std::size_t j = 0; j < members.size(); ++j) {
      const Target& target = targets[members[j]];
      Vector z;
      if (pass) {
        const Vector social = pass->social(target_slot[j]);
        z.resize(social.size() + text_dim);
        z << social, *target.text;
      } else {
        z = *target.text;
      }
      const Vector relu = z.cwiseMax(0.0);
      const Eigen::Vector4d logits = params.head_weight.transpose() * relu + params.head_bias;
      Prediction pred;
      pred.p = softmax4(logits);
      pred.label = argmax_label(pred.p);
      if (predictions) (*predictions)[members[j]] = pred;
      if (!target.gold) continue;

      const std::size_t gold = index_of(*target.gold);
      const bool clamped = pred.p[gold] < kProbabilityFloor;
      total_loss += -std::log(std::max(pred.p[gold], kProbabilityFloor));
      if (!grads || clamped) continue;

      Eigen::Vector4d d_logits;
      for (std::size_t c = 0; c < kNumStanceLabels; ++c) {
        d_logits[Eigen::Index(c)] = (pred.p[c] - (c == gold ? 1.0 : 0.0)) * scale;
      }
      grads->head_weight.noalias() += relu * d_logits.transpose();
      grads->head_bias += d_logits;
      if (pass) {
        const Vector d_relu = params.head_weight * d_logits;
        const Eigen::Index social_dim = d_social.rows();
        for (Eigen::Index r = 0; r < social_dim; ++r) {
          if (z[r] > 0) d_social(r, Eigen::Index(target_slot[j])) += d_relu[r];
        }
      }
    }

    if (grads && pass) {
      const Matrix d_hist = pass->backward(d_social, grads->encoder);
      if (config.history == HistoryKind::PE) {
        for (std::size_t c = 0; c < histories.size(); ++c) {
          for (std::size_t m = 0; m < histories[c].size(); ++m) {
            grads->alpha[Eigen::Index(m)] += d_hist.col(Eigen::Index(c)).dot(*histories[c][m]);
          }
        }
      }
    }
  }
  return total_loss;
}

std::vector<Target> sample_targets(std::span<const Sample> samples, const ModelContext& ctx) {
  std::vector<Target> targets;
  targets.reserve(samples.size());
  for (const Sample& s : samples) {
    const Post& post = ctx.corpus().post(s.post_index);
    auto node = ctx.graph().find(post.author_id);
    if (!node) throw Error("user not in social graph: " + post.author_id);
    targets.push_back({*node, post.timestamp, &ctx.post_embedding(s.post_index), s.gold});
  }
  return targets;
}

void check_finite(ModelParams& grads) {
  for (const TensorRef& t : tensors(grads)) {
    for (double x : t.values()) {
      if (!std::isfinite(x)) throw Error("non-finite gradient in " + t.name);
    }
  }
}

}  // namespace

std::string_view to_string(HistoryKind kind) noexcept {
  return kind == HistoryKind::PE ? "pe" : "mean";
}

std::optional<HistoryKind> parse_history_kind(std::string_view text) noexcept {
  if (text == "pe" || text == "PE") return HistoryKind::PE;
  if (text == "mean" || text == "MEAN") return HistoryKind::MEAN;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be positive");
  if (!(learning_rate > 0)) throw InputError("learning_rate must be positive");
  if (weight_decay < 0) throw InputError("weight_decay must be non-negative");
  if (k < 1) throw InputError("k must be at least 1");
  if (lambda < 1) throw InputError("lambda must be at least 1");
  if (hidden < 1) throw InputError("hidden must be positive");
  if (batch_size < 0) throw InputError("batch_size must be non-negative");
  const double sum = split.train + split.validation + split.test;
  if (split.train < 0 || split.validation < 0 || split.test < 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw InputError("split fractions must be non-negative and sum to 1");
  }
}

int head_input_dim(const TrainConfig& config, int text_dim) noexcept {
  if (config.text_only) return text_dim;
  return social_output_dim(config.hidden, config.k) + text_dim;
}

ModelParams init_params(const TrainConfig& config, int text_dim, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams p;
  if (!config.text_only) {
    if (config.history == HistoryKind::PE) {
      p.alpha = Vector::Constant(config.lambda, 1.0 / config.lambda);
    }
    const int h = config.hidden;
    p.encoder.input_projection = xavier(h, text_dim, text_dim, h, rng);
    p.encoder.input_bias = Vector::Zero(h);
    p.encoder.layers.resize(std::size_t(config.k));
    for (int l = 1; l <= config.k; ++l) {
      const int in = layer_input_dim(h, config.k, l);
      for (int q = 1; q <= config.k; ++q) {
        ShellParams sp;
        sp.projection = xavier(h, in, in, h, rng);
        if (config.aggregator == AggregatorKind::H2GAT) {
          sp.attention = xavier(2 * h, 1, 2 * h, 1, rng);
        }
        p.encoder.layers[std::size_t(l - 1)].push_back(std::move(sp));
      }
    }
  }
  const int head_in = head_input_dim(config, text_dim);
  p.head_weight = xavier(head_in, kNumStanceLabels, head_in, kNumStanceLabels, rng);
  p.head_bias = Vector::Zero(kNumStanceLabels);
  return p;
}

ModelParams zeros_like(const ModelParams& like) {
  ModelParams out;
  out.alpha = Vector::Zero(like.alpha.size());
  out.encoder = zeros_like(like.encoder);
  out.head_weight = Matrix::Zero(like.head_weight.rows(), like.head_weight.cols());
  out.head_bias = Vector::Zero(like.head_bias.size());
  return out;
}

std::vector<TensorRef> tensors(ModelParams& params) {
  std::vector<TensorRef> out;
  auto push = [&out](std::string name, auto& t) {
    if (t.size() == 0) return;
    out.push_back({std::move(name), t.data(), t.rows(), t.cols()});
  };
  push("alpha", params.alpha);
  push("encoder.input_projection", params.encoder.input_projection);
  push("encoder.input_bias", params.encoder.input_bias);
  for (std::size_t l = 0; l < params.encoder.layers.size(); ++l) {
    for (std::size_t q = 0; q < params.encoder.layers[l].size(); ++q) {
      const std::string prefix =
          "encoder.layer" + std::to_string(l + 1) + ".order" + std::to_string(q + 1);
      push(prefix + ".projection", params.encoder.layers[l][q].projection);
      push(prefix + ".attention", params.encoder.layers[l][q].attention);
    }
  }
  push("head.weight", params.head_weight);
  push("head.bias", params.head_bias);
  return out;
}

ModelContext::ModelContext(const SocialGraph& graph, const Corpus& corpus,
                           const EmbeddingProvider& provider, int max_order)
    : graph_(&graph),
      corpus_(&corpus),
      provider_(&provider),
      shells_(graph, max_order),
      embeddings_(corpus.size()),
      has_embedding_(corpus.size(), false) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Post& post = corpus.post(i);
    if (!graph.find(post.author_id)) continue;
    embeddings_[i] = provider.embed(post);
    if (embeddings_[i].size() != provider.dimension() || !embeddings_[i].allFinite()) {
      throw Error("provider returned an invalid embedding for post " + post.id);
    }
    has_embedding_[i] = true;
  }
}

const Vector& ModelContext::post_embedding(std::size_t index) const {
  if (index >= embeddings_.size() || !has_embedding_[index]) {
    throw Error("no embedding for post index " + std::to_string(index));
  }
  return embeddings_[index];
}

std::vector<Sample> labelled_samples(const ModelContext& context) {
  std::vector<Sample> out;
  const Corpus& corpus = context.corpus();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Post& post = corpus.post(i);
    if (post.label && context.graph().find(post.author_id)) {
      out.push_back({i, *post.label});
    }
  }
  return out;
}

StanceLabel argmax_label(const std::array<double, kNumStanceLabels>& p) noexcept {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumStanceLabels; ++c) {
    if (p[c] > p[best]) best = c;
  }
  return kAllStanceLabels[best];
}

Prediction forward(const Post& post, const ModelContext& context,
                   const ModelParams& params, const TrainConfig& config) {
  auto node = context.graph().find(post.author_id);
  if (!node) throw Error("user not in social graph: " + post.author_id);
  const Vector text = context.provider().embed(post);
  const Target target{*node, post.timestamp, &text, std::nullopt};
  std::vector<Prediction> out;
  run_batch(context, params, config, std::span(&target, 1), &out, nullptr);
  return out.front();
}

std::vector<Prediction> forward_samples(std::span<const Sample> samples,
                                        const ModelContext& context,
                                        const ModelParams& params,
                                        const TrainConfig& config) {
  auto targets = sample_targets(samples, context);
  for (auto& t : targets) t.gold.reset();
  std::vector<Prediction> out;
  run_batch(context, params, config, targets, &out, nullptr);
  return out;
}

double loss(std::span<const Sample> batch, const ModelContext& context,
            const ModelParams& params, const TrainConfig& config) {
  if (batch.empty()) throw Error("loss needs a non-empty batch");
  const auto targets = sample_targets(batch, context);
  return run_batch(context, params, config, targets, nullptr, nullptr) /
         double(batch.size());
}

LossGradient gradients(std::span<const Sample> batch, const ModelContext& context,
                       const ModelParams& params, const TrainConfig& config) {
  if (batch.empty()) throw Error("gradients need a non-empty batch");
  const auto targets = sample_targets(batch, context);
  LossGradient out;
  out.gradient = zeros_like(params);
  out.loss = run_batch(context, params, config, targets, nullptr, &out.gradient) /
             double(batch.size());
  if (!std::isfinite(out.loss)) throw Error("non-finite loss");
  check_finite(out.gradient);
  return out;
}

OptimizerState OptimizerState::for_params(const ModelParams& params) {
  return OptimizerState{zeros_like(params), zeros_like(params), 0};
}

void adam_step(ModelParams& params, ModelParams& grads, OptimizerState& state,
               double learning_rate, double weight_decay) {
  auto theta = tensors(params);
  auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (theta.size() != g.size() || theta.size() != m.size() || theta.size() != v.size()) {
    throw Error("optimizer state does not match parameters");
  }
  ++state.step;
  const double correction1 = 1.0 - std::pow(kAdamBeta1, double(state.step));
  const double correction2 = 1.0 - std::pow(kAdamBeta2, double(state.step));
  for (std::size_t t = 0; t < theta.size(); ++t) {
    if (theta[t].size() != g[t].size()) throw Error("gradient shape mismatch: " + theta[t].name);
    auto th = theta[t].values();
    auto gr = g[t].values();
    auto mm = m[t].values();
    auto vv = v[t].values();
    for (std::size_t i = 0; i < th.size(); ++i) {
      th[i] -= learning_rate * weight_decay * th[i];
      mm[i] = kAdamBeta1 * mm[i] + (1.0 - kAdamBeta1) * gr[i];
      vv[i] = kAdamBeta2 * vv[i] + (1.0 - kAdamBeta2) * gr[i] * gr[i];
      const double m_hat = mm[i] / correction1;
      const double v_hat = vv[i] / correction2;
      th[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

SplitSizes split_sizes(std::size_t n, const SplitFractions& fractions) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9) throw Error("split fractions must sum to 1");
  SplitSizes s;
  s.validation = std::size_t(std::llround(double(n) * fractions.validation));
  s.test = std::size_t(std::llround(double(n) * fractions.test));
  if (s.validation + s.test > n) throw Error("too few samples to split");
  s.train = n - s.validation - s.test;
  if (s.train == 0 || (fractions.validation > 0 && s.validation == 0) ||
      (fractions.test > 0 && s.test == 0)) {
    throw Error("too few samples for non-empty splits (" + std::to_string(n) + ")");
  }
  return s;
}

double accuracy(std::span<const Sample> samples, const ModelContext& context,
                const ModelParams& params, const TrainConfig& config) {
  if (samples.empty()) return 0.0;
  const auto predictions = forward_samples(samples, context, params, config);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (predictions[i].label == samples[i].gold) ++correct;
  }
  return double(correct) / double(samples.size());
}

TrainResult train(const ModelContext& context, const TrainConfig& config) {
  const auto samples = labelled_samples(context);
  return train(context, samples, config);
}

TrainResult train(const ModelContext& context, std::span<const Sample> samples,
                  const TrainConfig& config) {
  config.validate();
  if (!config.text_only && config.k > context.shells().max_order()) {
    throw Error("context shell cache does not cover k");
  }
  if (samples.empty()) throw InputError("no labelled samples in the social graph");
  auto split = split_dataset(std::vector<Sample>(samples.begin(), samples.end()),
                             config.split, config.seed);

  TrainResult result;
  result.sizes = {split.train.size(), split.validation.size(), split.test.size()};
  ModelParams params = init_params(config, context.text_dim(), config.seed);
  OptimizerState state = OptimizerState::for_params(params);
  result.params = params;
  result.best_val_accuracy = -1.0;

  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Sample> order = split.train;
  const std::size_t batch =
      config.batch_size == 0 ? order.size() : std::size_t(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(std::span<Sample>(order));
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      LossGradient lg;
      try {
        lg = gradients(std::span(order).subspan(start, len), context, params, config);
      } catch (const Error& e) {
        throw DivergenceError(epoch, "training diverged at epoch " +
                                         std::to_string(epoch) + ": " + e.what());
      }
      total += lg.loss * double(len);
      adam_step(params, lg.gradient, state, config.learning_rate, config.weight_decay);
    }
    const double train_loss = total / double(order.size());
    if (!std::isfinite(train_loss)) {
      throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
    }
    const double val = split.validation.empty()
                           ? 0.0
                           : accuracy(split.validation, context, params, config);
    result.log.push_back({epoch, train_loss, val});
    if (val > result.best_val_accuracy) {
      result.best_val_accuracy = val;
      result.best_epoch = epoch;
      result.params = params;
    }
  }

  if (!split.test.empty()) {
    const auto predictions = forward_samples(split.test, context, result.params, config);
    std::vector<StanceLabel> predicted, gold;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      predicted.push_back(predictions[i].label);
      gold.push_back(split.test[i].gold);
    }
    result.test = classification_metrics(predicted, gold);
  }
  return result;
}

StanceLabel classify(const Post& post, const ModelContext& context,
                     const ModelParams& params, const TrainConfig& config) {
  return forward(post, context, params, config).label;
}

SweepResult sweep(const ModelContext& context, std::span<const Sample> samples,
                  const TrainConfig& base, std::span<const int> ks,
                  std::span<const int> lambdas) {
  if (ks.empty() || lambdas.empty()) throw InputError("sweep grid must not be empty");
  SweepResult result;
  for (int k : ks) {
    for (int lambda : lambdas) {
      TrainConfig config = base;
      config.k = k;
      config.lambda = lambda;
      const TrainResult run = train(context, samples, config);
      result.cells.push_back({k, lambda, run.best_val_accuracy, run.test.accuracy});
      if (run.best_val_accuracy > result.cells[result.best].val_accuracy) {
        result.best = result.cells.size() - 1;
      }
    }
  }
  return result;
}

namespace {

constexpr std::string_view kCheckpointMagic = "stancegraph-checkpoint";
constexpr int kCheckpointVersion = 1;

std::map<std::string, std::string> config_entries(const TrainConfig& c) {
  return {
      {"epochs", std::to_string(c.epochs)},
      {"learning_rate", csv::format_double(c.learning_rate)},
      {"weight_decay", csv::format_double(c.weight_decay)},
      {"k", std::to_string(c.k)},
      {"lambda", std::to_string(c.lambda)},
      {"hidden", std::to_string(c.hidden)},
      {"seed", std::to_string(c.seed)},
      {"train_fraction", csv::format_double(c.split.train)},
      {"val_fraction", csv::format_double(c.split.validation)},
      {"test_fraction", csv::format_double(c.split.test)},
      {"batch_size", std::to_string(c.batch_size)},
      {"aggregator", std::string(to_string(c.aggregator))},
      {"history", std::string(to_string(c.history))},
      {"text_only", c.text_only ? "true" : "false"},
  };
}

[[noreturn]] void bad_checkpoint(const std::string& why) {
  throw InputError("invalid checkpoint: " + why);
}

std::int64_t to_int(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_checkpoint("bad integer " + s);
  return v;
}

double to_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_checkpoint("bad number " + s);
  return v;
}

void apply_config_entry(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "epochs") c.epochs = int(to_int(value));
  else if (key == "learning_rate") c.learning_rate = to_double(value);
  else if (key == "weight_decay") c.weight_decay = to_double(value);
  else if (key == "k") c.k = int(to_int(value));
  else if (key == "lambda") c.lambda = int(to_int(value));
  else if (key == "hidden") c.hidden = int(to_int(value));
  else if (key == "seed") c.seed = std::stoull(value);
  else if (key == "train_fraction") c.split.train = to_double(value);
  else if (key == "val_fraction") c.split.validation = to_double(value);
  else if (key == "test_fraction") c.split.test = to_double(value);
  else if (key == "batch_size") c.batch_size = int(to_int(value));
  else if (key == "aggregator") {
    auto kind = parse_aggregator_kind(value);
    if (!kind) bad_checkpoint("aggregator " + value);
    c.aggregator = *kind;
  } else if (key == "history") {
    auto kind = parse_history_kind(value);
    if (!kind) bad_checkpoint("history " + value);
    c.history = *kind;
  } else if (key == "text_only") {
    c.text_only = value == "true";
  } else {
    bad_checkpoint("unknown config key " + key);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "provider " << checkpoint.provider << '\n';
  out << "text_dim " << checkpoint.text_dim << '\n';
  for (const auto& [key, value] : config_entries(checkpoint.config)) {
    out << "config " << key << ' ' << value << '\n';
  }
  ModelParams copy = checkpoint.params;
  for (const TensorRef& t : tensors(copy)) {
    out << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << '\n';
    bool first = true;
    for (double x : t.values()) {
      if (!first) out << ' ';
      out << csv::format_double(x);
      first = false;
    }
    out << '\n';
  }
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) bad_checkpoint("empty file");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kCheckpointMagic) bad_checkpoint("missing header");
    if (version != kCheckpointVersion) {
      bad_checkpoint("unsupported version " + std::to_string(version));
    }
  }
  Checkpoint cp;
  std::map<std::string, std::vector<double>> values;
  std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> shapes;
  bool ended = false;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (tag == "provider") {
      std::getline(fields >> std::ws, cp.provider);
    } else if (tag == "text_dim") {
      fields >> cp.text_dim;
    } else if (tag == "config") {
      std::string key, value;
      fields >> key >> value;
      apply_config_entry(cp.config, key, value);
    } else if (tag == "tensor") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      fields >> name >> rows >> cols;
      std::string data;
      if (!std::getline(in, data)) bad_checkpoint("truncated tensor " + name);
      std::istringstream tokens(data);
      std::vector<double> v;
      std::string token;
      while (tokens >> token) v.push_back(to_double(token));
      if (Eigen::Index(v.size()) != rows * cols) bad_checkpoint("size mismatch in " + name);
      shapes[name] = {rows, cols};
      values[name] = std::move(v);
    } else if (tag == "end") {
      ended = true;
      break;
    } else if (!tag.empty()) {
      bad_checkpoint("unexpected line: " + line);
    }
  }
  if (!ended) bad_checkpoint("missing end marker");
  if (cp.text_dim < 1) bad_checkpoint("text_dim must be positive");
  try {
    cp.config.validate();
  } catch (const InputError& e) {
    bad_checkpoint(e.what());
  }
  cp.params = init_params(cp.config, cp.text_dim, cp.config.seed);
  auto expected = tensors(cp.params);
  if (expected.size() != values.size()) bad_checkpoint("tensor set mismatch");
  for (const TensorRef& t : expected) {
    auto it = values.find(t.name);
    if (it == values.end()) bad_checkpoint("missing tensor " + t.name);
    if (shapes[t.name] != std::make_pair(t.rows, t.cols)) bad_checkpoint("shape mismatch " + t.name);
    std::copy(it->second.begin(), it->second.end(), t.data);
  }
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void write_metric_log(std::ostream& out, std::span<const EpochMetrics> log) {
  out << "epoch,train_loss,val_accuracy\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << csv::format_double(e.train_loss) << ','
        << csv::format_double(e.val_accuracy) << '\n';
  }
}

}  // namespace stancegraph

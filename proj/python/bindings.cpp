#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "stancegraph/corpus.hpp"
#include "stancegraph/embed.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/eval.hpp"
#include "stancegraph/gbdt.hpp"
#include "stancegraph/hesitancy.hpp"
#include "stancegraph/model.hpp"
#include "stancegraph/social_encoder.hpp"
#include "stancegraph/socialgraph.hpp"
#include "stancegraph/synthetic.hpp"

namespace py = pybind11;
namespace sg = stancegraph;

namespace {

py::dict report_dict(const sg::MetricReport& r) {
  py::dict d;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["f1"] = r.f1;
  d["accuracy"] = r.accuracy;
  return d;
}

sg::RatingMatrix to_matrix(const std::vector<std::vector<std::int64_t>>& counts) {
  return sg::RatingMatrix::from_counts(counts);
}

std::vector<std::string> names_of(const sg::SocialGraph& g, const std::vector<sg::NodeId>& ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto v : ids) out.push_back(g.name(v));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Social-context stance classification, agreement statistics and boosted trees.";

  // Translators run newest first, so the derived InputError goes last.
  py::register_exception<sg::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<sg::InputError>(m, "InputError", PyExc_ValueError);

  // corpus
  m.def("clean_text", &sg::clean_text, py::arg("text"));
  m.def(
      "is_vaccine_related",
      [](const std::string& text, std::optional<std::vector<std::string>> keywords) {
        sg::Post p;
        p.id = "x";
        p.author_id = "x";
        p.text = text;
        const sg::Corpus one(std::vector<sg::Post>{p});
        const auto kept = keywords ? sg::filter_vaccine_related(one, *keywords)
                                   : sg::filter_vaccine_related(one);
        return !kept.empty();
      },
      py::arg("text"), py::arg("keywords") = py::none());

  py::class_<sg::Corpus>(m, "Corpus")
      .def_static("load", &sg::load_posts, py::arg("path"))
      .def("__len__", &sg::Corpus::size)
      .def("users", &sg::Corpus::users)
      .def("post_ids", [](const sg::Corpus& c) {
        std::vector<std::string> ids;
        for (const auto& p : c.posts()) ids.push_back(p.id);
        return ids;
      })
      .def(
          "recent_posts",
          [](const sg::Corpus& c, const std::string& user, std::int64_t t, int lambda) {
            std::vector<std::string> ids;
            for (auto i : sg::recent_posts(c, user, t, lambda)) ids.push_back(c.post(i).id);
            return ids;
          },
          py::arg("user"), py::arg("t"), py::arg("lam"))
      .def(
          "filter_vaccine_related",
          [](const sg::Corpus& c, std::optional<std::vector<std::string>> keywords) {
            return keywords ? sg::filter_vaccine_related(c, *keywords) : sg::filter_vaccine_related(c);
          },
          py::arg("keywords") = py::none());

  // social graph
  py::class_<sg::SocialGraph>(m, "SocialGraph")
      .def(py::init<std::vector<std::string>, const std::vector<std::pair<std::string, std::string>>&>(),
           py::arg("nodes"), py::arg("edges"))
      .def_static("load", &sg::load_social_graph, py::arg("nodes_path"), py::arg("edges_path"))
      .def_property_readonly("node_count", &sg::SocialGraph::node_count)
      .def_property_readonly("edge_count", &sg::SocialGraph::edge_count)
      .def_property_readonly("average_degree", &sg::SocialGraph::average_degree)
      .def("names", &sg::SocialGraph::names)
      .def(
          "khop_neighborhood",
          [](const sg::SocialGraph& g, const std::string& v, int k) {
            return names_of(g, sg::khop_neighborhood(g, g.require(v), k));
          },
          py::arg("node"), py::arg("k"))
      .def(
          "exact_order_neighborhood",
          [](const sg::SocialGraph& g, const std::string& v, int k) {
            return names_of(g, sg::exact_order_neighborhood(g, g.require(v), k));
          },
          py::arg("node"), py::arg("k"));

  m.def(
      "largest_component",
      [](const std::vector<std::tuple<std::string, std::string, std::int64_t>>& edges,
         std::int64_t min_weight) {
        sg::WeightedGraph g;
        for (const auto& [u, v, w] : edges) {
          g.add_node(u);
          g.add_node(v);
          g.add_weight(u, v, w);
        }
        return sg::largest_weakly_connected_component(sg::prune_edges(g, min_weight));
      },
      py::arg("weighted_edges"), py::arg("min_weight") = 1,
      "Largest connected component after dropping edges lighter than min_weight.");

  // embeddings
  py::class_<sg::EmbeddingProvider>(m, "EmbeddingProvider")
      .def_property_readonly("dimension", &sg::EmbeddingProvider::dimension)
      .def("describe", &sg::EmbeddingProvider::describe);
  py::class_<sg::PrecomputedStore, sg::EmbeddingProvider>(m, "PrecomputedStore")
      .def_static(
          "load",
          [](const std::filesystem::path& path) { return sg::load_embedding_store(path); },
          py::arg("path"))
      .def("__len__", &sg::PrecomputedStore::size)
      .def("lookup", &sg::PrecomputedStore::lookup, py::arg("post_id"));
  py::class_<sg::HashedNgramEncoder, sg::EmbeddingProvider>(m, "HashedNgramEncoder")
      .def(py::init<int, int, int>(), py::arg("dimension") = 64, py::arg("min_n") = 3,
           py::arg("max_n") = 5)
      .def("encode", &sg::HashedNgramEncoder::encode, py::arg("text"));
  m.def("fnv1a64", &sg::fnv1a64, py::arg("data"));

  // social encoder primitives
  m.def(
      "aggregate_history_pe",
      [](const std::vector<sg::Vector>& history, const sg::Vector& alpha, Eigen::Index dim) {
        return sg::aggregate_history_pe(history, alpha, dim);
      },
      py::arg("history"), py::arg("alpha"), py::arg("dim"));
  m.def(
      "aggregate_history_mean",
      [](const std::vector<sg::Vector>& history, Eigen::Index dim) {
        return sg::aggregate_history_mean(history, dim);
      },
      py::arg("history"), py::arg("dim"));
  m.def(
      "gat_attend",
      [](const sg::Vector& center, const std::vector<sg::Vector>& neighbors,
         const sg::Matrix& projection, const sg::Vector& attention) {
        const auto a = sg::gat_attend(center, neighbors, {projection, attention});
        return py::make_tuple(a.output, a.weights);
      },
      py::arg("center"), py::arg("neighbors"), py::arg("projection"), py::arg("attention"),
      "Returns (output, attention weights in neighbor order).");

  // model
  py::class_<sg::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &sg::TrainConfig::epochs)
      .def_readwrite("learning_rate", &sg::TrainConfig::learning_rate)
      .def_readwrite("weight_decay", &sg::TrainConfig::weight_decay)
      .def_readwrite("k", &sg::TrainConfig::k)
      .def_readwrite("lam", &sg::TrainConfig::lambda)
      .def_readwrite("hidden", &sg::TrainConfig::hidden)
      .def_readwrite("seed", &sg::TrainConfig::seed)
      .def_readwrite("batch_size", &sg::TrainConfig::batch_size)
      .def_readwrite("text_only", &sg::TrainConfig::text_only)
      .def_property(
          "aggregator", [](const sg::TrainConfig& c) { return std::string(sg::to_string(c.aggregator)); },
          [](sg::TrainConfig& c, const std::string& s) {
            auto k = sg::parse_aggregator_kind(s);
            if (!k) throw sg::InputError("unknown aggregator: " + s);
            c.aggregator = *k;
          })
      .def_property(
          "history", [](const sg::TrainConfig& c) { return std::string(sg::to_string(c.history)); },
          [](sg::TrainConfig& c, const std::string& s) {
            auto k = sg::parse_history_kind(s);
            if (!k) throw sg::InputError("unknown history kind: " + s);
            c.history = *k;
          });

  m.def(
      "train",
      [](const sg::Corpus& corpus, const sg::SocialGraph& graph,
         const sg::EmbeddingProvider& provider, const sg::TrainConfig& config) {
        config.validate();
        sg::TrainResult result;
        {
          py::gil_scoped_release release;
          const sg::ModelContext ctx(graph, corpus, provider, config.k);
          result = sg::train(ctx, config);
        }
        py::list log;
        for (const auto& e : result.log) log.append(py::make_tuple(e.epoch, e.train_loss, e.val_accuracy));
        py::dict out;
        out["log"] = log;
        out["best_epoch"] = result.best_epoch;
        out["best_val_accuracy"] = result.best_val_accuracy;
        out["test"] = report_dict(result.test);
        return out;
      },
      py::arg("corpus"), py::arg("graph"), py::arg("provider"), py::arg("config"));

  m.def(
      "heterophily_benchmark",
      [](int users, std::uint64_t seed) {
        sg::synthetic::HeterophilyOptions options;
        options.users = users;
        auto b = sg::synthetic::make_heterophily_benchmark(options, seed);
        return py::make_tuple(std::move(b.corpus), std::move(b.graph), std::move(b.embeddings));
      },
      py::arg("users") = 500, py::arg("seed") = 1,
      "Synthetic (corpus, graph, embedding store) with cross-population wiring.");

  // eval
  m.def(
      "classification_metrics",
      [](const std::vector<int>& predictions, const std::vector<int>& golds, int num_classes) {
        return report_dict(sg::classification_metrics(predictions, golds, num_classes));
      },
      py::arg("predictions"), py::arg("golds"), py::arg("num_classes") = 4);
  m.def(
      "average_observed_agreement",
      [](const std::vector<std::vector<std::int64_t>>& c) {
        return sg::average_observed_agreement(to_matrix(c));
      },
      py::arg("counts"));
  m.def(
      "fleiss_kappa",
      [](const std::vector<std::vector<std::int64_t>>& c) { return sg::fleiss_kappa(to_matrix(c)); },
      py::arg("counts"));
  m.def(
      "krippendorff_alpha",
      [](const std::vector<std::vector<int>>& ratings, int num_categories) {
        return sg::krippendorff_alpha(std::span<const std::vector<int>>(ratings), num_categories);
      },
      py::arg("ratings"), py::arg("num_categories"),
      "ratings[i] lists the category indices given to item i; missing ratings are simply absent.");

  // hesitancy
  m.def(
      "hesitancy_score",
      [](std::int64_t np, std::int64_t nn) { return sg::hesitancy_score(np, nn); },
      py::arg("n_positive"), py::arg("n_negative"));
  m.def(
      "classify_change",
      [](double before, double after, double threshold) {
        return std::string(sg::to_string(sg::classify_change(before, after, threshold)));
      },
      py::arg("before"), py::arg("after"), py::arg("threshold") = sg::kDefaultChangeThreshold);

  // gbdt
  py::class_<sg::gbdt::Model>(m, "GbdtModel")
      .def_property_readonly("num_features", &sg::gbdt::Model::num_features)
      .def_property_readonly("rounds", [](const sg::gbdt::Model& g) { return g.trees().size(); })
      .def("predict_proba",
           [](const sg::gbdt::Model& g, const sg::gbdt::FeatureMatrix& x) {
             Eigen::MatrixXd out(x.rows(), g.config().num_classes);
             for (Eigen::Index i = 0; i < x.rows(); ++i) {
               const Eigen::VectorXd row = x.row(i).transpose();
               const auto p = sg::gbdt::predict_proba(g, {row.data(), std::size_t(row.size())});
               for (std::size_t c = 0; c < p.size(); ++c) out(i, Eigen::Index(c)) = p[c];
             }
             return out;
           })
      .def("predict",
           [](const sg::gbdt::Model& g, const sg::gbdt::FeatureMatrix& x) {
             std::vector<int> out;
             for (Eigen::Index i = 0; i < x.rows(); ++i) {
               const Eigen::VectorXd row = x.row(i).transpose();
               out.push_back(sg::gbdt::predict(g, {row.data(), std::size_t(row.size())}));
             }
             return out;
           })
      .def("dumps",
           [](const sg::gbdt::Model& g) {
             std::ostringstream out;
             g.write(out);
             return out.str();
           })
      .def_static("loads", [](const std::string& text) {
        std::istringstream in(text);
        return sg::gbdt::Model::read(in);
      });
  m.def(
      "gbdt_fit",
      [](const sg::gbdt::FeatureMatrix& x, const std::vector<int>& y, int rounds, int max_depth,
         double shrinkage, int num_classes) {
        sg::gbdt::Config config{rounds, max_depth, shrinkage, num_classes};
        py::gil_scoped_release release;
        return sg::gbdt::fit(x, y, config);
      },
      py::arg("features"), py::arg("labels"), py::arg("rounds") = 100, py::arg("max_depth") = 5,
      py::arg("shrinkage") = 0.1, py::arg("num_classes") = 3);
}

#include "stancegraph/eval.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"

namespace stancegraph {

MetricReport classification_metrics(std::span<const int> predictions,
                                    std::span<const int> golds, int num_classes) {
  if (predictions.size() != golds.size()) {
    throw Error("predictions and golds differ in length");
  }
  if (golds.empty()) throw Error("no predictions to evaluate");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::size_t> tp(k, 0), predicted(k, 0), actual(k, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const int p = predictions[i];
    const int g = golds[i];
    if (p < 0 || g < 0 || p >= num_classes || g >= num_classes) {
      throw Error("class index out of range");
    }
    ++predicted[p];
    ++actual[g];
    if (p == g) {
      ++tp[p];
      ++correct;
    }
  }

  MetricReport report;
  report.per_class.resize(k);
  std::size_t present = 0;
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics& m = report.per_class[c];
    m.support = actual[c];
    m.precision = predicted[c] ? double(tp[c]) / double(predicted[c]) : 0.0;
    m.recall = actual[c] ? double(tp[c]) / double(actual[c]) : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    if (predicted[c] || actual[c]) {
      ++present;
      report.precision += m.precision;
      report.recall += m.recall;
      report.f1 += m.f1;
    }
  }
  report.precision /= double(present);
  report.recall /= double(present);
  report.f1 /= double(present);
  report.accuracy = double(correct) / double(golds.size());
  return report;
}

MetricReport classification_metrics(std::span<const StanceLabel> predictions,
                                    std::span<const StanceLabel> golds) {
  std::vector<int> p(predictions.size()), g(golds.size());
  std::transform(predictions.begin(), predictions.end(), p.begin(),
                 [](StanceLabel l) { return int(index_of(l)); });
  std::transform(golds.begin(), golds.end(), g.begin(),
                 [](StanceLabel l) { return int(index_of(l)); });
  return classification_metrics(p, g, int(kNumStanceLabels));
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  if (reports.empty()) throw Error("no reports to average");
  MetricReport out;
  for (const auto& r : reports) {
    out.precision += r.precision;
    out.recall += r.recall;
    out.f1 += r.f1;
    out.accuracy += r.accuracy;
  }
  const double n = double(reports.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  out.accuracy /= n;
  return out;
}

std::string to_json(const MetricReport& report) {
  nlohmann::ordered_json obj;
  obj["precision"] = report.precision;
  obj["recall"] = report.recall;
  obj["f1"] = report.f1;
  obj["accuracy"] = report.accuracy;
  return obj.dump();
}

RatingMatrix::RatingMatrix(std::size_t items, std::size_t categories)
    : items_(items), categories_(categories), counts_(items * categories, 0) {}

RatingMatrix RatingMatrix::from_counts(
    const std::vector<std::vector<std::int64_t>>& counts) {
  const std::size_t c = counts.empty() ? 0 : counts.front().size();
  RatingMatrix m(counts.size(), c);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i].size() != c) throw Error("ragged rating matrix");
    for (std::size_t j = 0; j < c; ++j) m.add(i, j, counts[i][j]);
  }
  return m;
}

std::int64_t RatingMatrix::count(std::size_t item, std::size_t category) const {
  return counts_.at(item * categories_ + category);
}

void RatingMatrix::add(std::size_t item, std::size_t category, std::int64_t n) {
  auto& cell = counts_.at(item * categories_ + category);
  if (cell + n < 0) throw Error("rating counts must be non-negative");
  cell += n;
}

std::int64_t RatingMatrix::raters(std::size_t item) const {
  std::int64_t total = 0;
  for (std::size_t c = 0; c < categories_; ++c) total += count(item, c);
  return total;
}

double average_observed_agreement(const RatingMatrix& m) {
  if (m.items() == 0) throw Error("no items to compare");
  double sum = 0;
  for (std::size_t i = 0; i < m.items(); ++i) {
    const std::int64_t r = m.raters(i);
    if (r < 2) throw Error("average observed agreement needs at least 2 raters per item");
    std::int64_t agreeing = 0;
    for (std::size_t c = 0; c < m.categories(); ++c) {
      const std::int64_t n = m.count(i, c);
      agreeing += n * (n - 1);
    }
    sum += double(agreeing) / double(r * (r - 1));
  }
  return sum / double(m.items());
}

double fleiss_kappa(const RatingMatrix& m) {
  if (m.items() == 0) throw Error("no items to compare");
  const std::int64_t r = m.raters(0);
  if (r < 2) throw Error("Fleiss' kappa needs at least 2 raters per item");
  std::vector<double> category_totals(m.categories(), 0.0);
  double p_bar = 0;
  for (std::size_t i = 0; i < m.items(); ++i) {
    if (m.raters(i) != r) {
      throw Error("Fleiss' kappa needs the same number of raters for every item");
    }
    std::int64_t squares = 0;
    for (std::size_t c = 0; c < m.categories(); ++c) {
      const std::int64_t n = m.count(i, c);
      squares += n * n;
      category_totals[c] += double(n);
    }
    p_bar += double(squares - r) / double(r * (r - 1));
  }
  p_bar /= double(m.items());
  const double total = double(m.items()) * double(r);
  double p_e = 0;
  for (double t : category_totals) p_e += (t / total) * (t / total);
  if (p_e >= 1.0) {
    if (p_bar >= 1.0) return 1.0;
    throw Error("degenerate expected agreement");
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

double krippendorff_alpha(const RatingMatrix& m) {
  const std::size_t k = m.categories();
  std::vector<double> coincidence(k * k, 0.0);
  for (std::size_t i = 0; i < m.items(); ++i) {
    const std::int64_t mu = m.raters(i);
    if (mu < 2) continue;
    for (std::size_t c = 0; c < k; ++c) {
      const std::int64_t nc = m.count(i, c);
      if (nc == 0) continue;
      for (std::size_t d = 0; d < k; ++d) {
        const std::int64_t pairs = nc * (m.count(i, d) - (c == d ? 1 : 0));
        coincidence[c * k + d] += double(pairs) / double(mu - 1);
      }
    }
  }
  std::vector<double> marginal(k, 0.0);
  double n = 0;
  double disagree = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      marginal[c] += coincidence[c * k + d];
      if (c != d) disagree += coincidence[c * k + d];
    }
    n += marginal[c];
  }
  if (n < 2) throw Error("no pairable ratings");
  double expected = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c != d) expected += marginal[c] * marginal[d];
    }
  }
  if (expected == 0) throw Error("no variation in data");
  return 1.0 - (n - 1.0) * disagree / expected;
}

double krippendorff_alpha(std::span<const std::vector<int>> ratings, int num_categories) {
  RatingMatrix m(ratings.size(), static_cast<std::size_t>(num_categories));
  for (std::size_t i = 0; i < ratings.size(); ++i) {
    for (int c : ratings[i]) {
      if (c < 0 || c >= num_categories) throw Error("category index out of range");
      m.add(i, static_cast<std::size_t>(c));
    }
  }
  return krippendorff_alpha(m);
}

AgreementData parse_agreement(std::istream& in, std::string_view source) {
  static constexpr std::array<std::string_view, 3> kHeader = {"item_id", "rater_id",
                                                              "label"};
  const auto rows = csv::read(in, kHeader, source);
  std::map<std::string, int> category_index;
  for (const auto& row : rows) {
    if (row.fields[2].empty()) {
      throw InputError(std::string(source) + " line " + std::to_string(row.line) +
                       ": empty label");
    }
    category_index.emplace(row.fields[2], 0);
  }
  AgreementData data;
  for (auto& [name, index] : category_index) {
    index = static_cast<int>(data.categories.size());
    data.categories.push_back(name);
  }
  std::unordered_map<std::string, std::size_t> item_index;
  for (const auto& row : rows) {
    auto [it, fresh] = item_index.emplace(row.fields[0], data.items.size());
    if (fresh) {
      data.items.push_back(row.fields[0]);
      data.ratings.emplace_back();
    }
    data.ratings[it->second].push_back(category_index.at(row.fields[2]));
  }
  return data;
}

AgreementData load_agreement(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_agreement(in, path.string());
}

RatingMatrix rating_matrix(const AgreementData& data) {
  RatingMatrix m(data.items.size(), data.categories.size());
  for (std::size_t i = 0; i < data.ratings.size(); ++i) {
    for (int c : data.ratings[i]) m.add(i, static_cast<std::size_t>(c));
  }
  return m;
}

AgreementData one_vs_rest(const AgreementData& data, std::size_t category) {
  if (category >= data.categories.size()) throw Error("category index out of range");
  AgreementData out;
  out.items = data.items;
  out.categories = {data.categories[category], "rest"};
  out.ratings.reserve(data.ratings.size());
  for (const auto& item : data.ratings) {
    std::vector<int> binary;
    binary.reserve(item.size());
    for (int c : item) binary.push_back(static_cast<std::size_t>(c) == category ? 0 : 1);
    out.ratings.push_back(std::move(binary));
  }
  return out;
}

}  // namespace stancegraph

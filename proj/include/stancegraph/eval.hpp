#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stancegraph/corpus.hpp"

namespace stancegraph {

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;  // gold occurrences
};

// Macro averages over the classes that occur in either predictions or golds.
struct MetricReport {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;
  std::vector<ClassMetrics> per_class;  // indexed by class
};

// A class with no predicted positives has precision 0; with no gold
// positives, recall 0; F1 is 0 when precision + recall is 0.
MetricReport classification_metrics(std::span<const int> predictions,
                                    std::span<const int> golds, int num_classes);
MetricReport classification_metrics(std::span<const StanceLabel> predictions,
                                    std::span<const StanceLabel> golds);

// Field-wise mean of the four headline numbers.
MetricReport mean_report(std::span<const MetricReport> reports);

// Flat JSON object {"precision":..,"recall":..,"f1":..,"accuracy":..}.
std::string to_json(const MetricReport& report);

// Items x categories table of rating counts.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t items, std::size_t categories);
  static RatingMatrix from_counts(const std::vector<std::vector<std::int64_t>>& counts);

  std::size_t items() const noexcept { return items_; }
  std::size_t categories() const noexcept { return categories_; }
  std::int64_t count(std::size_t item, std::size_t category) const;
  void add(std::size_t item, std::size_t category, std::int64_t n = 1);
  std::int64_t raters(std::size_t item) const;

 private:
  std::size_t items_;
  std::size_t categories_;
  std::vector<std::int64_t> counts_;
};

// Mean over items of the fraction of agreeing rater pairs. Every item needs
// at least two ratings.
double average_observed_agreement(const RatingMatrix& m);

// Fleiss' kappa; every item must have the same number (>= 2) of ratings.
// When expected agreement is 1 the result is 1.0 if observed agreement is
// also 1, otherwise Error("degenerate expected agreement").
double fleiss_kappa(const RatingMatrix& m);

// Krippendorff's alpha with the nominal metric via the coincidence matrix.
// Items with fewer than two ratings are unpairable and ignored.
double krippendorff_alpha(const RatingMatrix& m);
// `ratings[i]` lists the category indices given to item i.
double krippendorff_alpha(std::span<const std::vector<int>> ratings, int num_categories);

// Ratings gathered from CSV item_id,rater_id,label.
struct AgreementData {
  std::vector<std::string> items;       // first-seen order
  std::vector<std::string> categories;  // ascending
  std::vector<std::vector<int>> ratings;  // per item, category indices
};

AgreementData parse_agreement(std::istream& in, std::string_view source);
AgreementData load_agreement(const std::filesystem::path& path);
RatingMatrix rating_matrix(const AgreementData& data);
// Binary view of one category against the rest: index 0 = category, 1 = rest.
AgreementData one_vs_rest(const AgreementData& data, std::size_t category);

}  // namespace stancegraph

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stancegraph/corpus.hpp"
#include "stancegraph/socialgraph.hpp"

namespace stancegraph {

enum class Theme : std::uint8_t {
  PositiveNews = 0,
  NegativeNews,
  DistrustGovernment,
  DissatisfactionPolicy,
  PharmaPerception,
  Conspiracy,
  HealthBeliefs,
  PositivePersonal,
  NegativePersonal,
  PositiveInfo,
  NegativeInfo,
};

inline constexpr std::size_t kNumThemes = 11;

std::string_view to_string(Theme theme) noexcept;
std::optional<Theme> parse_theme(std::string_view name) noexcept;

// Half-open [start, end) in seconds.
struct TimeWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
  bool contains(std::int64_t t) const noexcept { return t >= start && t < end; }
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

struct HesitancyRecord {
  std::string user;
  TimeWindow window;
  std::int64_t n_positive = 0;
  std::int64_t n_negative = 0;
  double score = 0;
};

// PO and PD count as positive, NG as negative, NE and unlabelled posts are
// ignored. Originals, retweets and quotes all count.
bool is_stance_bearing(const Post& post) noexcept;

// (n_pos - n_neg) / (n_pos + n_neg); throws Error("no stance-bearing posts")
// when both are zero.
double hesitancy_score(std::int64_t n_positive, std::int64_t n_negative);
// Scores the user's posts that fall inside the window.
HesitancyRecord hesitancy_score(const Corpus& corpus, std::string_view user,
                                const TimeWindow& window);

enum class ChangeClass : std::uint8_t { Increased = 0, Decreased = 1, Unchanged = 2 };
inline constexpr std::size_t kNumChangeClasses = 3;
std::string_view to_string(ChangeClass change) noexcept;
std::optional<ChangeClass> parse_change_class(std::string_view text) noexcept;

inline constexpr double kDefaultChangeThreshold = 0.05;

// |after - before| < threshold is Unchanged; otherwise the sign of the
// difference picks Increased or Decreased (in terms of the score).
ChangeClass classify_change(double before, double after,
                            double threshold = kDefaultChangeThreshold);

// Users with at least `min_posts` stance-bearing posts inside the window.
std::set<std::string> eligible_users(const Corpus& corpus, const TimeWindow& window,
                                     int min_posts = 3);

struct DailyProportion {
  std::int64_t day = 0;  // days since 1970-01-01 (UTC)
  // Fractions in PO, NG, NE, PD order; empty when the day has no labelled post.
  std::optional<std::array<double, kNumStanceLabels>> fractions;
};

std::string format_day(std::int64_t day);
// Parses YYYY-MM-DD into days since the epoch.
std::int64_t parse_day(std::string_view text);

// One entry per UTC day in [first_day, last_day].
std::vector<DailyProportion> daily_label_proportions(std::span<const Post> posts,
                                                     std::int64_t first_day,
                                                     std::int64_t last_day);

// Originals sorted by retweet count (descending, id ascending); the first
// ceil(quantile * n) are returned, n being the number of originals.
std::vector<Post> select_popular(std::span<const Post> posts, double quantile = 0.25);

using ThemeVector = std::array<std::int64_t, kNumThemes>;

struct ThemedPost {
  std::string post_id;
  Theme theme;
};

// CSV post_id,theme with canonical theme names.
std::vector<ThemedPost> load_theme_annotations(const std::filesystem::path& path);

// Popular originals posted in `period` that carry a theme annotation.
std::vector<ThemedPost> popular_themed_posts(const Corpus& corpus,
                                             std::span<const ThemedPost> annotations,
                                             const TimeWindow& period,
                                             double quantile = 0.25);

// For each theme, the number of distinct popular posts that one of the
// user's direct neighbors originated or retweeted during the period.
ThemeVector perceived_theme_vector(const SocialGraph& graph, NodeId user,
                                   const Corpus& corpus,
                                   std::span<const ThemedPost> popular,
                                   const TimeWindow& period);

struct ChangeRow {
  std::string user;
  ThemeVector exposure{};
  double score_before = 0;
  double score_after = 0;
  ChangeClass change = ChangeClass::Unchanged;
};

struct ChangeDatasetOptions {
  std::int64_t window_days = 14;
  int min_posts = 3;
  double threshold = kDefaultChangeThreshold;
  double popular_quantile = 0.25;
};

// Users in the graph that are eligible both in the `window_days` before and
// after `period`, with their exposure during the period and change class.
// Rows are ordered by user id.
std::vector<ChangeRow> build_change_dataset(const Corpus& corpus, const SocialGraph& graph,
                                            std::span<const ThemedPost> annotations,
                                            const TimeWindow& period,
                                            const ChangeDatasetOptions& options = {});

}  // namespace stancegraph

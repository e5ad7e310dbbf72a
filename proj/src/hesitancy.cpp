#include "stancegraph/hesitancy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"

namespace stancegraph {

namespace {

constexpr std::array<std::string_view, kNumThemes> kThemeNames = {
    "PositiveNews",     "NegativeNews",     "DistrustGovernment",
    "DissatisfactionPolicy", "PharmaPerception", "Conspiracy",
    "HealthBeliefs",    "PositivePersonal", "NegativePersonal",
    "PositiveInfo",     "NegativeInfo"};

constexpr std::array<std::string_view, kNumChangeClasses> kChangeNames = {
    "increased", "decreased", "unchanged"};

std::int64_t floor_day(std::int64_t timestamp) {
  std::int64_t day = timestamp / kSecondsPerDay;
  if (timestamp % kSecondsPerDay < 0) --day;
  return day;
}

}  // namespace

std::string_view to_string(Theme theme) noexcept {
  return kThemeNames[static_cast<std::size_t>(theme)];
}

std::optional<Theme> parse_theme(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNumThemes; ++i) {
    if (kThemeNames[i] == name) return static_cast<Theme>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ChangeClass change) noexcept {
  return kChangeNames[static_cast<std::size_t>(change)];
}

std::optional<ChangeClass> parse_change_class(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kNumChangeClasses; ++i) {
    if (kChangeNames[i] == text) return static_cast<ChangeClass>(i);
  }
  return std::nullopt;
}

bool is_stance_bearing(const Post& post) noexcept {
  return post.label && *post.label != StanceLabel::NE;
}

double hesitancy_score(std::int64_t n_positive, std::int64_t n_negative) {
  if (n_positive < 0 || n_negative < 0) throw Error("post counts must be non-negative");
  const std::int64_t total = n_positive + n_negative;
  if (total == 0) throw Error("no stance-bearing posts");
  return double(n_positive - n_negative) / double(total);
}

HesitancyRecord hesitancy_score(const Corpus& corpus, std::string_view user,
                                const TimeWindow& window) {
  HesitancyRecord record;
  record.user = std::string(user);
  record.window = window;
  for (std::size_t idx : corpus.posts_by(user)) {
    const Post& post = corpus.post(idx);
    if (!window.contains(post.timestamp) || !post.label) continue;
    switch (*post.label) {
      case StanceLabel::PO:
      case StanceLabel::PD:
        ++record.n_positive;
        break;
      case StanceLabel::NG:
        ++record.n_negative;
        break;
      case StanceLabel::NE:
        break;
    }
  }
  record.score = hesitancy_score(record.n_positive, record.n_negative);
  return record;
}

ChangeClass classify_change(double before, double after, double threshold) {
  const double delta = after - before;
  if (std::abs(delta) < threshold) return ChangeClass::Unchanged;
  return delta > 0 ? ChangeClass::Increased : ChangeClass::Decreased;
}

std::set<std::string> eligible_users(const Corpus& corpus, const TimeWindow& window,
                                     int min_posts) {
  if (min_posts < 1) throw Error("min_posts must be at least 1");
  std::unordered_map<std::string, int> counts;
  for (const Post& post : corpus.posts()) {
    if (window.contains(post.timestamp) && is_stance_bearing(post)) ++counts[post.author_id];
  }
  std::set<std::string> out;
  for (const auto& [user, n] : counts) {
    if (n >= min_posts) out.insert(user);
  }
  return out;
}

std::string format_day(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::int64_t parse_day(std::string_view text) {
  using namespace std::chrono;
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  const std::string s(text);
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
    throw InputError("expected a date YYYY-MM-DD, got '" + s + "'");
  }
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw InputError("invalid date '" + s + "'");
  return sys_days{ymd}.time_since_epoch().count();
}

std::vector<DailyProportion> daily_label_proportions(std::span<const Post> posts,
                                                     std::int64_t first_day,
                                                     std::int64_t last_day) {
  if (last_day < first_day) return {};
  const auto span_days = std::size_t(last_day - first_day + 1);
  std::vector<std::array<std::int64_t, kNumStanceLabels>> counts(span_days, {0, 0, 0, 0});
  for (const Post& post : posts) {
    if (!post.label) continue;
    const std::int64_t day = floor_day(post.timestamp);
    if (day < first_day || day > last_day) continue;
    ++counts[std::size_t(day - first_day)][index_of(*post.label)];
  }
  std::vector<DailyProportion> out;
  out.reserve(span_days);
  for (std::size_t i = 0; i < span_days; ++i) {
    DailyProportion row;
    row.day = first_day + std::int64_t(i);
    std::int64_t total = 0;
    for (auto c : counts[i]) total += c;
    if (total > 0) {
      std::array<double, kNumStanceLabels> f{};
      for (std::size_t c = 0; c < kNumStanceLabels; ++c) {
        f[c] = double(counts[i][c]) / double(total);
      }
      row.fractions = f;
    }
    out.push_back(row);
  }
  return out;
}

std::vector<Post> select_popular(std::span<const Post> posts, double quantile) {
  if (!(quantile > 0 && quantile <= 1)) throw Error("quantile must be in (0, 1]");
  std::vector<Post> originals;
  for (const Post& p : posts) {
    if (p.kind == PostKind::Original) originals.push_back(p);
  }
  std::sort(originals.begin(), originals.end(), [](const Post& a, const Post& b) {
    if (a.retweet_count != b.retweet_count) return a.retweet_count > b.retweet_count;
    return a.id < b.id;
  });
  const auto take = std::size_t(std::ceil(quantile * double(originals.size())));
  originals.resize(std::min(take, originals.size()));
  return originals;
}

std::vector<ThemedPost> load_theme_annotations(const std::filesystem::path& path) {
  static constexpr std::array<std::string_view, 2> kHeader = {"post_id", "theme"};
  std::vector<ThemedPost> out;
  std::unordered_set<std::string> seen;
  for (const auto& row : csv::read_file(path, kHeader)) {
    auto theme = parse_theme(row.fields[1]);
    if (!theme) {
      throw InputError(path.string() + " line " + std::to_string(row.line) +
                       ": unknown theme '" + row.fields[1] + "'");
    }
    if (!seen.insert(row.fields[0]).second) {
      throw InputError(path.string() + " line " + std::to_string(row.line) +
                       ": duplicate post id '" + row.fields[0] + "'");
    }
    out.push_back({row.fields[0], *theme});
  }
  return out;
}

std::vector<ThemedPost> popular_themed_posts(const Corpus& corpus,
                                             std::span<const ThemedPost> annotations,
                                             const TimeWindow& period, double quantile) {
  std::vector<Post> in_period;
  for (const Post& p : corpus.posts()) {
    if (period.contains(p.timestamp)) in_period.push_back(p);
  }
  std::unordered_map<std::string, Theme> theme_of;
  for (const auto& a : annotations) theme_of.emplace(a.post_id, a.theme);
  std::vector<ThemedPost> out;
  for (const Post& p : select_popular(in_period, quantile)) {
    if (auto it = theme_of.find(p.id); it != theme_of.end()) {
      out.push_back({p.id, it->second});
    }
  }
  return out;
}

ThemeVector perceived_theme_vector(const SocialGraph& graph, NodeId user,
                                   const Corpus& corpus,
                                   std::span<const ThemedPost> popular,
                                   const TimeWindow& period) {
  if (!graph.contains(user)) throw Error("user not in social graph");
  std::unordered_map<std::string, Theme> theme_of;
  for (const auto& p : popular) theme_of.emplace(p.post_id, p.theme);

  std::unordered_set<std::string> received;
  for (NodeId friend_id : graph.neighbors(user)) {
    for (std::size_t idx : corpus.posts_by(graph.name(friend_id))) {
      const Post& post = corpus.post(idx);
      if (!period.contains(post.timestamp)) continue;
      if (post.kind == PostKind::Original && theme_of.contains(post.id)) {
        received.insert(post.id);
      } else if (post.kind == PostKind::Retweet && theme_of.contains(*post.source_post_id)) {
        received.insert(*post.source_post_id);
      }
    }
  }
  ThemeVector counts{};
  for (const auto& id : received) ++counts[static_cast<std::size_t>(theme_of.at(id))];
  return counts;
}

std::vector<ChangeRow> build_change_dataset(const Corpus& corpus, const SocialGraph& graph,
                                            std::span<const ThemedPost> annotations,
                                            const TimeWindow& period,
                                            const ChangeDatasetOptions& options) {
  if (options.window_days < 1) throw Error("window_days must be positive");
  const std::int64_t span = options.window_days * kSecondsPerDay;
  const TimeWindow before{period.start - span, period.start};
  const TimeWindow after{period.end, period.end + span};
  const auto eligible_before = eligible_users(corpus, before, options.min_posts);
  const auto eligible_after = eligible_users(corpus, after, options.min_posts);
  const auto popular =
      popular_themed_posts(corpus, annotations, period, options.popular_quantile);

  std::vector<ChangeRow> rows;
  for (const auto& user : eligible_before) {
    if (!eligible_after.contains(user)) continue;
    auto node = graph.find(user);
    if (!node) continue;
    ChangeRow row;
    row.user = user;
    row.exposure = perceived_theme_vector(graph, *node, corpus, popular, period);
    row.score_before = hesitancy_score(corpus, user, before).score;
    row.score_after = hesitancy_score(corpus, user, after).score;
    row.change = classify_change(row.score_before, row.score_after, options.threshold);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace stancegraph

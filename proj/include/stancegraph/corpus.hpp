#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace stancegraph {

enum class StanceLabel : std::uint8_t { PO = 0, NG = 1, NE = 2, PD = 3 };

inline constexpr std::size_t kNumStanceLabels = 4;
inline constexpr std::array<StanceLabel, kNumStanceLabels> kAllStanceLabels = {
    StanceLabel::PO, StanceLabel::NG, StanceLabel::NE, StanceLabel::PD};

constexpr std::size_t index_of(StanceLabel label) noexcept {
  return static_cast<std::size_t>(label);
}
StanceLabel label_from_index(std::size_t index);
std::string_view to_string(StanceLabel label) noexcept;
std::optional<StanceLabel> parse_stance_label(std::string_view text) noexcept;

enum class PostKind : std::uint8_t { Original, Retweet, Quote };

std::string_view to_string(PostKind kind) noexcept;
std::optional<PostKind> parse_post_kind(std::string_view text) noexcept;

struct Post {
  std::string id;
  std::string author_id;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string text;
  PostKind kind = PostKind::Original;
  std::optional<std::string> source_post_id;
  std::int64_t retweet_count = 0;
  std::optional<StanceLabel> label;

  friend bool operator==(const Post&, const Post&) = default;
};

// Immutable collection of posts with a per-author index sorted by
// (timestamp, id). Safe for concurrent readers.
class Corpus {
 public:
  Corpus() = default;
  // Throws InputError on duplicate ids or a retweet without a source id.
  explicit Corpus(std::vector<Post> posts);

  const std::vector<Post>& posts() const noexcept { return posts_; }
  const Post& post(std::size_t index) const { return posts_.at(index); }
  std::size_t size() const noexcept { return posts_.size(); }
  bool empty() const noexcept { return posts_.empty(); }

  std::size_t user_count() const noexcept { return by_author_.size(); }
  // Authors in ascending order.
  std::vector<std::string> users() const;

  // Indices into posts() for one author, ascending by (timestamp, id).
  // Unknown authors yield an empty span.
  std::span<const std::size_t> posts_by(std::string_view author) const;

  std::optional<std::size_t> find(std::string_view post_id) const;

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_author_;
};

// Line-delimited JSON, one post per line. Empty lines are skipped.
Corpus parse_posts(std::istream& in);
Corpus load_posts(const std::filesystem::path& path);
void write_posts(std::ostream& out, std::span<const Post> posts);

const std::vector<std::string>& default_vaccine_keywords();

// Keeps posts whose case-folded text contains any case-folded keyword.
Corpus filter_vaccine_related(const Corpus& corpus,
                              std::span<const std::string> keywords);
Corpus filter_vaccine_related(const Corpus& corpus);

// Drops @mentions, http(s) URLs and leading "RT" tokens; collapses whitespace.
std::string clean_text(std::string_view text);

// Greedy cover over originals ordered by retweet count (descending, id
// ascending). Posts are taken in that order until every author has
// originated or retweeted at least one taken post. If the originals run out
// first, everything taken so far is returned.
std::vector<Post> select_annotation_set(const Corpus& corpus);

// Indices of the author's posts strictly before t, most recent first,
// truncated to lambda entries.
std::vector<std::size_t> recent_posts(const Corpus& corpus,
                                      std::string_view user, std::int64_t t,
                                      int lambda);

// ASCII lower-casing; bytes >= 0x80 pass through unchanged.
std::string ascii_lower(std::string_view text);

}  // namespace stancegraph

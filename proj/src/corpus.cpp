#include "stancegraph/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "stancegraph/error.hpp"

namespace stancegraph {

namespace {

constexpr std::array<std::string_view, kNumStanceLabels> kLabelNames = {
    "PO", "NG", "NE", "PD"};

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

bool is_url(std::string_view token) {
  const std::string lowered = ascii_lower(token);
  for (std::string_view scheme : {"http://", "https://"}) {
    if (lowered.size() > scheme.size() && lowered.starts_with(scheme)) {
      return true;
    }
  }
  return false;
}

[[noreturn]] void field_error(std::size_t line, std::string_view field,
                              std::string_view problem) {
  std::ostringstream msg;
  msg << "posts line " << line << ": field '" << field << "' " << problem;
  throw InputError(msg.str());
}

const nlohmann::json& require_field(const nlohmann::json& obj,
                                    std::size_t line, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) field_error(line, field, "is missing");
  return *it;
}

std::string require_string(const nlohmann::json& obj, std::size_t line,
                           const char* field) {
  const auto& value = require_field(obj, line, field);
  if (!value.is_string()) field_error(line, field, "must be a string");
  return value.get<std::string>();
}

std::int64_t require_integer(const nlohmann::json& obj, std::size_t line,
                             const char* field) {
  const auto& value = require_field(obj, line, field);
  if (!value.is_number_integer()) {
    field_error(line, field, "must be an integer");
  }
  return value.get<std::int64_t>();
}

Post parse_post_line(const std::string& text, std::size_t line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::ostringstream msg;
    msg << "posts line " << line << ": invalid JSON (" << e.what() << ")";
    throw InputError(msg.str());
  }
  if (!obj.is_object()) {
    std::ostringstream msg;
    msg << "posts line " << line << ": expected a JSON object";
    throw InputError(msg.str());
  }

  Post post;
  post.id = require_string(obj, line, "id");
  post.author_id = require_string(obj, line, "author_id");
  post.timestamp = require_integer(obj, line, "timestamp");
  post.text = require_string(obj, line, "text");

  const std::string kind = require_string(obj, line, "kind");
  auto parsed_kind = parse_post_kind(kind);
  if (!parsed_kind) field_error(line, "kind", "must be original|retweet|quote");
  post.kind = *parsed_kind;

  const auto& source = require_field(obj, line, "source_post_id");
  if (source.is_string()) {
    post.source_post_id = source.get<std::string>();
  } else if (!source.is_null()) {
    field_error(line, "source_post_id", "must be a string or null");
  }
  if (post.kind != PostKind::Original && !post.source_post_id) {
    field_error(line, "source_post_id", "is required for retweets and quotes");
  }

  post.retweet_count = require_integer(obj, line, "retweet_count");
  if (post.retweet_count < 0) {
    field_error(line, "retweet_count", "must be non-negative");
  }

  const auto& label = require_field(obj, line, "label");
  if (label.is_string()) {
    post.label = parse_stance_label(label.get<std::string>());
    if (!post.label) field_error(line, "label", "must be one of PO, NG, NE, PD");
  } else if (!label.is_null()) {
    field_error(line, "label", "must be a string or null");
  }
  return post;
}

}  // namespace

StanceLabel label_from_index(std::size_t index) {
  if (index >= kNumStanceLabels) {
    throw Error("stance label index out of range: " + std::to_string(index));
  }
  return kAllStanceLabels[index];
}

std::string_view to_string(StanceLabel label) noexcept {
  return kLabelNames[index_of(label)];
}

std::optional<StanceLabel> parse_stance_label(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kNumStanceLabels; ++i) {
    if (kLabelNames[i] == text) return kAllStanceLabels[i];
  }
  return std::nullopt;
}

std::string_view to_string(PostKind kind) noexcept {
  switch (kind) {
    case PostKind::Original:
      return "original";
    case PostKind::Retweet:
      return "retweet";
    case PostKind::Quote:
      return "quote";
  }
  return "original";
}

std::optional<PostKind> parse_post_kind(std::string_view text) noexcept {
  if (text == "original") return PostKind::Original;
  if (text == "retweet") return PostKind::Retweet;
  if (text == "quote") return PostKind::Quote;
  return std::nullopt;
}

Corpus::Corpus(std::vector<Post> posts) : posts_(std::move(posts)) {
  by_id_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& p = posts_[i];
    if (p.kind == PostKind::Retweet && !p.source_post_id) {
      throw InputError("retweet without source_post_id: " + p.id);
    }
    if (p.retweet_count < 0) {
      throw InputError("negative retweet_count: " + p.id);
    }
    if (!by_id_.emplace(p.id, i).second) {
      throw InputError("duplicate post id: " + p.id);
    }
    by_author_[p.author_id].push_back(i);
  }
  for (auto& [author, indices] : by_author_) {
    std::sort(indices.begin(), indices.end(),
              [this](std::size_t a, std::size_t b) {
                const Post& pa = posts_[a];
                const Post& pb = posts_[b];
                if (pa.timestamp != pb.timestamp) {
                  return pa.timestamp < pb.timestamp;
                }
                return pa.id < pb.id;
              });
  }
}

std::vector<std::string> Corpus::users() const {
  std::vector<std::string> out;
  out.reserve(by_author_.size());
  for (const auto& entry : by_author_) out.push_back(entry.first);
  std::sort(out.begin(), out.end());
  return out;
}

std::span<const std::size_t> Corpus::posts_by(std::string_view author) const {
  auto it = by_author_.find(std::string(author));
  if (it == by_author_.end()) return {};
  return it->second;
}

std::optional<std::size_t> Corpus::find(std::string_view post_id) const {
  auto it = by_id_.find(std::string(post_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Corpus parse_posts(std::istream& in) {
  std::vector<Post> posts;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Post post = parse_post_line(line, line_no);
    if (!seen.insert(post.id).second) {
      throw InputError("posts line " + std::to_string(line_no) +
                       ": duplicate post id '" + post.id + "'");
    }
    posts.push_back(std::move(post));
  }
  return Corpus(std::move(posts));
}

Corpus load_posts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open posts file: " + path.string());
  return parse_posts(in);
}

void write_posts(std::ostream& out, std::span<const Post> posts) {
  for (const Post& p : posts) {
    nlohmann::json obj;
    obj["id"] = p.id;
    obj["author_id"] = p.author_id;
    obj["timestamp"] = p.timestamp;
    obj["text"] = p.text;
    obj["kind"] = std::string(to_string(p.kind));
    obj["source_post_id"] =
        p.source_post_id ? nlohmann::json(*p.source_post_id) : nullptr;
    obj["retweet_count"] = p.retweet_count;
    obj["label"] =
        p.label ? nlohmann::json(std::string(to_string(*p.label))) : nullptr;
    out << obj.dump() << '\n';
  }
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

const std::vector<std::string>& default_vaccine_keywords() {
  static const std::vector<std::string> keywords = {
      "vax", "vaccin", "covidvic", "impfstoff", "vacin", "vacuna", "impfung"};
  return keywords;
}

Corpus filter_vaccine_related(const Corpus& corpus,
                              std::span<const std::string> keywords) {
  if (keywords.empty()) throw Error("keyword list must not be empty");
  std::vector<std::string> folded;
  folded.reserve(keywords.size());
  for (const auto& k : keywords) folded.push_back(ascii_lower(k));

  std::vector<Post> kept;
  for (const Post& p : corpus.posts()) {
    const std::string text = ascii_lower(p.text);
    const bool match = std::any_of(
        folded.begin(), folded.end(),
        [&](const std::string& k) { return text.find(k) != std::string::npos; });
    if (match) kept.push_back(p);
  }
  return Corpus(std::move(kept));
}

Corpus filter_vaccine_related(const Corpus& corpus) {
  return filter_vaccine_related(corpus, default_vaccine_keywords());
}

std::string clean_text(std::string_view text) {
  std::vector<std::string_view> tokens = split_tokens(text);
  std::erase_if(tokens, [](std::string_view t) { return t.starts_with('@'); });
  std::erase_if(tokens, is_url);
  std::size_t first = 0;
  while (first < tokens.size() && tokens[first] == "RT") ++first;

  std::string out;
  for (std::size_t i = first; i < tokens.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out.append(tokens[i]);
  }
  return out;
}

std::vector<Post> select_annotation_set(const Corpus& corpus) {
  const auto& posts = corpus.posts();
  std::vector<std::size_t> originals;
  std::unordered_map<std::string, std::vector<std::string>> retweeters;
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const Post& p = posts[i];
    if (p.kind == PostKind::Original) originals.push_back(i);
    if (p.kind == PostKind::Retweet) {
      retweeters[*p.source_post_id].push_back(p.author_id);
    }
  }
  std::sort(originals.begin(), originals.end(),
            [&](std::size_t a, std::size_t b) {
              if (posts[a].retweet_count != posts[b].retweet_count) {
                return posts[a].retweet_count > posts[b].retweet_count;
              }
              return posts[a].id < posts[b].id;
            });

  std::unordered_set<std::string> uncovered;
  for (const auto& user : corpus.users()) uncovered.insert(user);

  std::vector<Post> selected;
  for (std::size_t idx : originals) {
    if (uncovered.empty()) break;
    const Post& p = posts[idx];
    selected.push_back(p);
    uncovered.erase(p.author_id);
    if (auto it = retweeters.find(p.id); it != retweeters.end()) {
      for (const auto& user : it->second) uncovered.erase(user);
    }
  }
  return selected;
}

std::vector<std::size_t> recent_posts(const Corpus& corpus,
                                      std::string_view user, std::int64_t t,
                                      int lambda) {
  if (lambda < 1) throw Error("lambda must be at least 1");
  std::span<const std::size_t> mine = corpus.posts_by(user);
  // First index with timestamp >= t.
  auto end = std::partition_point(
      mine.begin(), mine.end(),
      [&](std::size_t i) { return corpus.post(i).timestamp < t; });
  std::vector<std::size_t> out;
  for (auto it = end; it != mine.begin() && out.size() < std::size_t(lambda);) {
    --it;
    out.push_back(*it);
  }
  return out;
}

}  // namespace stancegraph

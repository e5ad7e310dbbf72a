#include "stancegraph/embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"

namespace stancegraph {

PrecomputedStore::PrecomputedStore(int dimension) : dimension_(dimension) {
  if (dimension < 1) throw InputError("embedding dimension must be positive");
}

void PrecomputedStore::insert(const std::string& post_id, Vector values) {
  if (values.size() != dimension_) {
    throw InputError("embedding for '" + post_id + "' has " +
                     std::to_string(values.size()) + " values, expected " +
                     std::to_string(dimension_));
  }
  if (!values.allFinite()) {
    throw InputError("embedding for '" + post_id + "' is not finite");
  }
  if (!vectors_.emplace(post_id, std::move(values)).second) {
    throw InputError("duplicate embedding id: " + post_id);
  }
}

bool PrecomputedStore::contains(std::string_view post_id) const {
  return vectors_.contains(std::string(post_id));
}

const Vector& PrecomputedStore::lookup(std::string_view post_id) const {
  auto it = vectors_.find(std::string(post_id));
  if (it == vectors_.end()) throw Error("unknown post id: " + std::string(post_id));
  return it->second;
}

Vector PrecomputedStore::embed(const Post& post) const { return lookup(post.id); }

std::string PrecomputedStore::describe() const {
  return "store:d=" + std::to_string(dimension_);
}

void PrecomputedStore::write(std::ostream& out) const {
  std::vector<const std::string*> ids;
  ids.reserve(vectors_.size());
  for (const auto& entry : vectors_) ids.push_back(&entry.first);
  std::sort(ids.begin(), ids.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  out << "d=" << dimension_ << '\n';
  for (const std::string* id : ids) {
    out << *id << '\t';
    const Vector& v = vectors_.at(*id);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << csv::format_double(v[i]);
    }
    out << '\n';
  }
}

PrecomputedStore parse_embedding_store(std::istream& in, std::string_view source,
                                       std::optional<int> expected_dimension) {
  const std::string where(source);
  std::string line;
  std::size_t line_no = 0;
  std::optional<PrecomputedStore> store;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!store) {
      if (!line.starts_with("d=")) {
        throw InputError(where + " line " + std::to_string(line_no) +
                         ": expected header d=<int>");
      }
      const auto d = csv::parse_int(std::string_view(line).substr(2), where,
                                    line_no, "d");
      if (d < 1) {
        throw InputError(where + " line " + std::to_string(line_no) +
                         ": dimension must be positive");
      }
      if (expected_dimension && *expected_dimension != d) {
        throw InputError(where + ": store dimension " + std::to_string(d) +
                         " does not match expected " +
                         std::to_string(*expected_dimension));
      }
      store.emplace(static_cast<int>(d));
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw InputError(where + " line " + std::to_string(line_no) +
                       ": expected '<post_id>\\t<values>'");
    }
    const std::string id = line.substr(0, tab);
    std::vector<double> values;
    std::istringstream fields(line.substr(tab + 1));
    std::string token;
    while (fields >> token) {
      values.push_back(csv::parse_double(token, where, line_no, "value"));
    }
    if (static_cast<int>(values.size()) != store->dimension()) {
      throw InputError(where + " line " + std::to_string(line_no) + ": row '" +
                       id + "' has " + std::to_string(values.size()) +
                       " values, expected " + std::to_string(store->dimension()));
    }
    try {
      store->insert(id, Eigen::Map<const Vector>(values.data(), values.size()));
    } catch (const InputError& e) {
      throw InputError(where + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!store) throw InputError(where + ": missing header d=<int>");
  return std::move(*store);
}

PrecomputedStore load_embedding_store(const std::filesystem::path& path,
                                      std::optional<int> expected_dimension) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding store: " + path.string());
  return parse_embedding_store(in, path.string(), expected_dimension);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

HashedNgramEncoder::HashedNgramEncoder(int dimension, int min_n, int max_n)
    : dimension_(dimension), min_n_(min_n), max_n_(max_n) {
  if (dimension < 1) throw InputError("encoder dimension must be positive");
  if (min_n < 1 || max_n < min_n) throw InputError("invalid n-gram range");
}

std::string HashedNgramEncoder::normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : ascii_lower(text)) {
    const auto u = static_cast<unsigned char>(c);
    const bool ascii_punct = u < 0x80 && std::ispunct(u) && c != '#';
    if (!ascii_punct) out.push_back(c);
  }
  return out;
}

Vector HashedNgramEncoder::encode(std::string_view text) const {
  const std::string normalized = normalize(text);
  // Byte offsets of code point starts, plus the end sentinel.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    if ((static_cast<unsigned char>(normalized[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  const std::size_t points = starts.size();
  starts.push_back(normalized.size());

  Vector out = Vector::Zero(dimension_);
  for (int n = min_n_; n <= max_n_; ++n) {
    const auto width = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + width <= points; ++i) {
      const std::string_view gram(normalized.data() + starts[i],
                                  starts[i + width] - starts[i]);
      const std::uint64_t h = fnv1a64(gram);
      const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dimension_));
      out[bucket] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  const double norm = out.norm();
  if (norm > 0) out /= norm;
  return out;
}

Vector HashedNgramEncoder::embed(const Post& post) const {
  return encode(clean_text(post.text));
}

std::string HashedNgramEncoder::describe() const {
  return "hashed:d=" + std::to_string(dimension_) + ",n=" + std::to_string(min_n_) +
         "-" + std::to_string(max_n_);
}

}  // namespace stancegraph

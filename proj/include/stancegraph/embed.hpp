#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Dense>

#include "stancegraph/corpus.hpp"

namespace stancegraph {

using Vector = Eigen::VectorXd;

// Source of per-post text representations. Implementations are immutable
// after construction and safe to call concurrently.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dimension() const noexcept = 0;
  virtual Vector embed(const Post& post) const = 0;
  // Short description echoed into checkpoints, e.g. "hashed:d=64,n=3-5".
  virtual std::string describe() const = 0;
};

// Vectors keyed by post id, typically exported from an external encoder.
class PrecomputedStore final : public EmbeddingProvider {
 public:
  explicit PrecomputedStore(int dimension);

  // Throws InputError on a dimension mismatch, non-finite value or duplicate id.
  void insert(const std::string& post_id, Vector values);
  std::size_t size() const noexcept { return vectors_.size(); }
  bool contains(std::string_view post_id) const;

  int dimension() const noexcept override { return dimension_; }
  // Throws Error("unknown post id: ...") when the id is absent.
  Vector embed(const Post& post) const override;
  const Vector& lookup(std::string_view post_id) const;
  std::string describe() const override;

  // Rows in ascending id order so output is reproducible.
  void write(std::ostream& out) const;

 private:
  int dimension_;
  std::unordered_map<std::string, Vector> vectors_;
};

// Store file: "d=<int>" header, then "<post_id>\t<v1> ... <vd>" per line.
// When `expected_dimension` is set it must match the header.
PrecomputedStore parse_embedding_store(std::istream& in, std::string_view source,
                                       std::optional<int> expected_dimension = {});
PrecomputedStore load_embedding_store(const std::filesystem::path& path,
                                      std::optional<int> expected_dimension = {});

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Signed feature hashing of character n-grams of the cleaned post text.
// Text is ASCII case-folded and stripped of ASCII punctuation other than '#'.
// Each n-gram (counted in UTF-8 code points, n in [min_n, max_n]) is hashed
// with 64-bit FNV-1a; bucket = hash mod d, sign = -1 when bit 63 is set.
// The accumulated vector is L2-normalized; text without n-grams maps to zero.
class HashedNgramEncoder final : public EmbeddingProvider {
 public:
  explicit HashedNgramEncoder(int dimension = 64, int min_n = 3, int max_n = 5);

  int dimension() const noexcept override { return dimension_; }
  int min_n() const noexcept { return min_n_; }
  int max_n() const noexcept { return max_n_; }

  Vector encode(std::string_view text) const;
  Vector embed(const Post& post) const override;
  std::string describe() const override;

  // The normalized text n-grams are extracted from.
  static std::string normalize(std::string_view text);

 private:
  int dimension_;
  int min_n_;
  int max_n_;
};

// Convenience wrapper matching the provider contract.
inline Vector embed_post(const EmbeddingProvider& provider, const Post& post) {
  return provider.embed(post);
}

}  // namespace stancegraph

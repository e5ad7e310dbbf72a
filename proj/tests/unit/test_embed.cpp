#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stancegraph/embed.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/random.hpp"

using namespace stancegraph;

namespace {

// Textbook FNV-1a, written out independently of the library.
std::uint64_t reference_fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

Post post_with(std::string id, std::string text) {
  Post p;
  p.id = std::move(id);
  p.author_id = "a";
  p.text = std::move(text);
  return p;
}

}  // namespace

TEST_CASE("fnv1a64 frozen values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("abc") == 0xe71fa2190541574bull);
  for (const char* s : {"vaccine", "#jab", "caf\xc3\xa9"}) CHECK(fnv1a64(s) == reference_fnv(s));
}

TEST_CASE("hashed encoder on a single trigram") {
  const HashedNgramEncoder enc(8, 3, 3);
  const auto v = enc.encode("abc");
  // 0xe71fa2190541574b mod 8 = 3, bit 63 set -> -1
  Vector expected = Vector::Zero(8);
  expected[3] = -1.0;
  CHECK(v == expected);
  const std::uint64_t h = reference_fnv("abc");
  CHECK(h % 8 == 3);
  CHECK((h >> 63) == 1);
}

TEST_CASE("hashed encoder edge cases") {
  const HashedNgramEncoder enc(16);
  CHECK(enc.encode("") == Vector::Zero(16));
  CHECK(enc.encode("ab") == Vector::Zero(16));  // shorter than every n
  CHECK(enc.encode("Get the vaccine") == enc.encode("Get the vaccine"));
  CHECK(enc.encode("GET THE VACCINE!") == enc.encode("get the vaccine"));
  // At d=16 "#ja" and "#jab" share bucket 11 with opposite signs and cancel.
  CHECK(enc.encode("#jab") == enc.encode("jab"));
  CHECK(HashedNgramEncoder(64).encode("#jab") != HashedNgramEncoder(64).encode("jab"));
  CHECK(enc.describe() == "hashed:d=16,n=3-5");
  // embedding goes through text cleaning
  CHECK(enc.embed(post_with("1", "RT @x: vaccines work https://t.co/a")) == enc.encode("vaccines work"));
}

TEST_CASE("n-grams are counted in code points") {
  const HashedNgramEncoder enc(1024, 3, 3);
  // four code points, eight bytes: exactly two trigrams
  const std::string text = "\xc3\xa9\xc3\xa9\xc3\xa9\xc3\xa9";
  const auto v = enc.encode(text);
  const std::string gram = "\xc3\xa9\xc3\xa9\xc3\xa9";
  const auto h = reference_fnv(gram);
  Vector expected = Vector::Zero(1024);
  expected[Eigen::Index(h % 1024)] = (h >> 63) ? -2.0 : 2.0;
  expected.normalize();
  CHECK(v.isApprox(expected, 1e-15));
}

TEST_CASE("hashed encoder norm and locality properties") {
  const HashedNgramEncoder enc(64);
  Rng rng(21);
  const std::string alphabet = "abcdefghij #";
  for (int t = 0; t < 300; ++t) {
    std::string text;
    const int len = int(rng.below(40));
    for (int i = 0; i < len; ++i) text.push_back(alphabet[rng.below(alphabet.size())]);
    const auto v = enc.encode(text);
    CHECK(v.allFinite());
    const auto norm = HashedNgramEncoder::normalize(text).size();
    if (norm < 3) {
      CHECK(v.norm() == 0.0);
    } else if (v.norm() != 0.0) {
      CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }

    // changing one character only touches buckets of overlapping n-grams
    if (len >= 12) {
      std::string changed = text;
      const auto pos = std::size_t(rng.below(std::uint64_t(len)));
      changed[pos] = changed[pos] == 'a' ? 'b' : 'a';
      std::set<Eigen::Index> allowed;
      for (const std::string* s : {&text, &changed}) {
        for (int n = 3; n <= 5; ++n) {
          for (int i = 0; i + n <= len; ++i) {
            if (std::size_t(i) <= pos && pos < std::size_t(i + n)) {
              allowed.insert(Eigen::Index(reference_fnv(s->substr(i, n)) % 64));
            }
          }
        }
      }
      // raw signed bucket counts
      auto counts = [&](const std::string& s) {
        Vector c = Vector::Zero(64);
        for (int n = 3; n <= 5; ++n) {
          for (int i = 0; i + n <= int(s.size()); ++i) {
            const auto h = reference_fnv(s.substr(i, n));
            c[Eigen::Index(h % 64)] += (h >> 63) ? -1.0 : 1.0;
          }
        }
        return c;
      };
      const Vector a = counts(HashedNgramEncoder::normalize(text));
      const Vector b = counts(HashedNgramEncoder::normalize(changed));
      for (Eigen::Index i = 0; i < 64; ++i) {
        if (a[i] != b[i]) CHECK(allowed.count(i) == 1);
      }
      // the library output equals the normalised oracle counts
      if (a.norm() > 0) CHECK(enc.encode(text).isApprox(a / a.norm(), 1e-14));
    }
  }
}

TEST_CASE("precomputed store") {
  std::istringstream in("d=4\np1\t1 2 3 4\np2\t0.5 -0.25 0 1e-3\n");
  const auto store = parse_embedding_store(in, "mem");
  CHECK(store.size() == 2);
  CHECK(store.dimension() == 4);
  CHECK(store.lookup("p2")[1] == -0.25);
  CHECK(store.embed(post_with("p1", "ignored"))[3] == 4.0);
  CHECK_THROWS_WITH(store.embed(post_with("p9", "")), doctest::Contains("unknown post id"));

  std::istringstream short_row("d=4\np1\t1 2 3\n");
  CHECK_THROWS_WITH_AS(parse_embedding_store(short_row, "mem"), doctest::Contains("line 2"), InputError);
  std::istringstream dup("d=2\np1\t1 2\np1\t3 4\n");
  CHECK_THROWS_AS(parse_embedding_store(dup, "mem"), InputError);
  std::istringstream mismatch("d=2\np1\t1 2\n");
  CHECK_THROWS_AS(parse_embedding_store(mismatch, "mem", 3), InputError);
  std::istringstream nan("d=2\np1\tnan 2\n");
  CHECK_THROWS_AS(parse_embedding_store(nan, "mem"), InputError);
}

TEST_CASE("store write and reload is bit-exact") {
  PrecomputedStore store(3);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    Vector v(3);
    for (int j = 0; j < 3; ++j) v[j] = rng.normal() * 1e3;
    store.insert("id" + std::to_string(i), v);
  }
  const auto path = std::filesystem::temp_directory_path() / "stancegraph_store_roundtrip.tsv";
  {
    std::ofstream out(path);
    store.write(out);
  }
  const auto back = load_embedding_store(path, 3);
  REQUIRE(back.size() == store.size());
  for (int i = 0; i < 50; ++i) {
    const auto id = "id" + std::to_string(i);
    CHECK(back.lookup(id) == store.lookup(id));
  }
}

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "stancegraph/csv.hpp"
#include "stancegraph/error.hpp"
#include "stancegraph/random.hpp"

using namespace stancegraph;

TEST_CASE("split_line handles quotes and trimming") {
  CHECK(csv::split_line("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(csv::split_line("\"x,y\",\"he said \"\"hi\"\"\"") ==
        std::vector<std::string>{"x,y", "he said \"hi\""});
  CHECK(csv::split_line("a,,") == std::vector<std::string>{"a", "", ""});
}

TEST_CASE("read requires the exact header") {
  static constexpr std::string_view header[] = {"u", "v"};
  std::istringstream good("u,v\na,b\n\nc,d\n");
  const auto rows = csv::read(good, header, "mem");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].line == 4);
  CHECK(rows[1].fields[0] == "c");

  std::istringstream wrong("v,u\na,b\n");
  CHECK_THROWS_AS(csv::read(wrong, header, "mem"), InputError);
  std::istringstream ragged("u,v\na\n");
  CHECK_THROWS_WITH_AS(csv::read(ragged, header, "mem"), doctest::Contains("line 2"), InputError);
}

TEST_CASE("numbers parse strictly") {
  CHECK(csv::parse_int("42", "f", 1, "x") == 42);
  CHECK_THROWS_AS(csv::parse_int("4x", "f", 1, "x"), InputError);
  CHECK(csv::parse_double("-1.5e3", "f", 1, "x") == -1500.0);
  CHECK_THROWS_AS(csv::parse_double("", "f", 1, "x"), InputError);
}

TEST_CASE("format_double round-trips bit-exactly") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, double(int(rng.below(40)) - 20));
    const auto text = csv::format_double(v);
    CHECK(csv::parse_double(text, "f", 1, "x") == v);
  }
  CHECK(csv::format_double(0.1) == "0.1");
}

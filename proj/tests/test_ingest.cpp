#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "concept_hmm/error.hpp"
#include "concept_hmm/ingest.hpp"
#include "support/oracles.hpp"

using namespace chmm;

namespace {
Document parse(const std::string& text, IngestOptions opt = {}) {
  std::istringstream in(text);
  return parse_triples(in, opt);
}
}  // namespace

TEST_CASE("parse explicit vectors") {
  const auto doc = parse(R"({"s":"db","r":[0.9,-0.1],"o":"cloud"}
{"s":"app","r":[0.5,0.3],"o":"cloud"}
)");
  CHECK(doc.length() == 2);
  CHECK(doc.entities() == 3);
  CHECK(doc.dim() == 2);
  CHECK(doc.entity_names == std::vector<std::string>{"db", "cloud", "app"});
  CHECK(doc.observations[1].subject == 2);
  CHECK(doc.observations[1].object == 1);
  CHECK(doc.observations[0].relation == std::vector<double>{0.9, -0.1});
}

TEST_CASE("r_label records are vectorized with the configured dimension and seed") {
  const auto doc = parse("# comment line\n\n{\"s\":\"databases\",\"r_label\":\"for\",\"o\":\"apps\"}\n",
                         IngestOptions{4, 7});
  REQUIRE(doc.length() == 1);
  CHECK(doc.observations[0].relation == vectorize_relation("for", 4, 7));
}

TEST_CASE("parse errors carry the line number") {
  SUBCASE("dimension mismatch") {
    try {
      parse("{\"s\":\"a\",\"r\":[1,2],\"o\":\"b\"}\n{\"s\":\"a\",\"r\":[1,2,3],\"o\":\"b\"}\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("malformed JSON") {
    try {
      parse("{\"s\":\"a\",\"r\":[1],\"o\":\"b\"}\n# ok\n{not json\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("both r and r_label") {
    CHECK_THROWS_AS(parse("{\"s\":\"a\",\"r\":[1],\"r_label\":\"x\",\"o\":\"b\"}\n"), ParseError);
  }
  SUBCASE("missing object") { CHECK_THROWS_AS(parse("{\"s\":\"a\",\"r\":[1]}\n"), ParseError); }
  SUBCASE("empty file") { CHECK_THROWS_AS(parse("# only a comment\n"), ParseError); }
}

TEST_CASE("vectorize_relation") {
  const auto a = vectorize_relation("for", 2, 7);
  CHECK(a == vectorize_relation("for", 2, 7));
  const auto b = vectorize_relation("to ensure", 2, 7);
  CHECK(a != b);
  CHECK(a != vectorize_relation("for", 2, 8));
  for (const char* label : {"for", "to ensure", "x", "is part of", "uses"}) {
    for (std::size_t d : {1u, 2u, 4u, 16u}) {
      const auto v = vectorize_relation(label, d, 3);
      double norm = 0.0;
      for (double x : v) norm += x * x;
      CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS_AS(vectorize_relation("", 4, 0), std::invalid_argument);
}

TEST_CASE("serialize then parse preserves the document bit-exactly") {
  std::mt19937_64 gen(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5, d = 1 + trial % 4, T = 1 + trial * 3;
    const Document doc = testing::random_document(gen, n, d, T, 1e3);
    std::stringstream buf;
    write_triples(buf, doc);
    const Document back = parse_triples(buf);
    REQUIRE(back.length() == T);
    CHECK(back.dim() == d);
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(back.observations[t].relation == doc.observations[t].relation);
      CHECK(back.entity_names[back.observations[t].subject] == doc.entity_names[doc.observations[t].subject]);
      CHECK(back.entity_names[back.observations[t].object] == doc.entity_names[doc.observations[t].object]);
    }
  }
}

TEST_CASE("entity ids are stable under changes to later lines") {
  const std::string head = "{\"s\":\"a\",\"r\":[1],\"o\":\"b\"}\n{\"s\":\"c\",\"r\":[1],\"o\":\"a\"}\n";
  const auto one = parse(head + "{\"s\":\"d\",\"r\":[1],\"o\":\"e\"}\n{\"s\":\"f\",\"r\":[1],\"o\":\"b\"}\n");
  const auto two = parse(head + "{\"s\":\"f\",\"r\":[1],\"o\":\"b\"}\n{\"s\":\"d\",\"r\":[1],\"o\":\"e\"}\n");
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(one.observations[t].subject == two.observations[t].subject);
    CHECK(one.observations[t].object == two.observations[t].object);
  }
}

TEST_CASE("duplicate triples are kept") {
  const auto doc = parse("{\"s\":\"a\",\"r\":[1],\"o\":\"b\"}\n{\"s\":\"a\",\"r\":[1],\"o\":\"b\"}\n");
  CHECK(doc.length() == 2);
  CHECK(doc.entities() == 2);
}

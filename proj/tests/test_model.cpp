#include <doctest.h>

#include <cmath>
#include <numbers>

#include "concept_hmm/ingest.hpp"
#include "concept_hmm/model.hpp"
#include "support/oracles.hpp"

using namespace chmm;

namespace {

ModelParams uniform_model(std::size_t b, std::size_t k, std::size_t n, std::size_t d) {
  ModelParams m(b, k, n, d, 1.0);
  for (std::size_t j = 0; j < b; ++j) {
    m.pi(j) = 1.0 / static_cast<double>(b);
    for (std::size_t j2 = 0; j2 < b; ++j2) m.trans(j, j2) = 1.0 / static_cast<double>(b);
    for (std::size_t p = 0; p < m.pairs(); ++p) m.f(j, p) = 1.0 / static_cast<double>(m.pairs());
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t e = 0; e < n; ++e) m.q(c, e) = 1.0 / static_cast<double>(n);
  return m;
}

// Two contexts and three concepts with the illustrative pair-generation table:
// context 1: (C1,C2)=0.35 (C2,C3)=0.2 (C1,C3)=0.45; context 2: 0.15 0.6 0.25.
ModelParams illustrative_model() {
  ModelParams m(2, 3, 8, 2, 0.1);
  m.pi(0) = 0.8;
  m.pi(1) = 0.2;
  m.trans(0, 0) = 0.6;
  m.trans(0, 1) = 0.4;
  m.trans(1, 0) = 0.7;
  m.trans(1, 1) = 0.3;
  const double table[2][3] = {{0.35, 0.2, 0.45}, {0.15, 0.6, 0.25}};
  for (std::size_t j = 0; j < 2; ++j) {
    m.f(j, pair_index(3, {0, 1})) = table[j][0];
    m.f(j, pair_index(3, {1, 2})) = table[j][1];
    m.f(j, pair_index(3, {0, 2})) = table[j][2];
  }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t e = 0; e < 8; ++e) m.q(c, e) = 1.0 / 8.0;
  return m;
}

}  // namespace

TEST_CASE("pair and state indexing are bijections") {
  for (std::size_t k = 2; k <= 6; ++k) {
    for (std::size_t p = 0; p < pair_count(k); ++p) {
      const ConceptPair cp = pair_at(k, p);
      CHECK(cp.first != cp.second);
      CHECK(pair_index(k, cp) == p);
    }
  }
  const ModelParams m = uniform_model(3, 4, 2, 1);
  CHECK(m.states() == 3 * 4 * 3);
  for (std::size_t s = 0; s < m.states(); ++s) CHECK(flatten(m, unflatten(m, s)) == s);
  CHECK_THROWS_AS(pair_index(4, {2, 2}), std::out_of_range);
  CHECK_THROWS_AS(unflatten(m, m.states()), std::out_of_range);
}

TEST_CASE("validate accepts a uniform model") {
  CHECK(validate(uniform_model(2, 3, 5, 2)).empty());
}

TEST_CASE("validate names a transition row that does not sum to one") {
  ModelParams m = uniform_model(2, 3, 5, 2);
  m.trans(1, 0) = 0.4;  // row 1 now sums to 0.9
  const auto v = validate(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].location == "trans[1]");
}

TEST_CASE("validate reports out-of-range probabilities and non-finite vectors") {
  ModelParams m = uniform_model(1, 2, 2, 1);
  m.q(0, 0) = 1.5;
  m.q(0, 1) = -0.5;
  m.v(0)[0] = std::nan("");
  const auto v = validate(m);
  CHECK(v.size() == 3);
}

TEST_CASE("model file rejects a non-null diagonal concept pair") {
  auto doc = to_json(uniform_model(2, 3, 5, 2));
  CHECK(validate(doc).empty());
  doc["f"][0][1][1] = 0.1;
  const auto v = validate(doc);
  REQUIRE(v.size() == 1);
  CHECK(v[0].location == "f[0][1][1]");
  CHECK(v[0].message.find("diagonal concept pair") != std::string::npos);
  CHECK_THROWS_AS(model_from_json(doc), ParseError);
}

TEST_CASE("model file round-trips exactly") {
  std::mt19937_64 gen(11);
  const ModelParams m = testing::random_model(gen, 2, 3, 4, 3, 0.25);
  const auto text = to_json(m).dump(2);
  const ModelParams back = model_from_json(nlohmann::json::parse(text));
  CHECK(back == m);
  CHECK(to_json(back).dump(2) == text);
}

TEST_CASE("hmm_initial") {
  SUBCASE("b=1 with uniform f over two ordered pairs") {
    const ModelParams m = uniform_model(1, 2, 2, 1);
    CHECK(hmm_initial(m, {0, {0, 1}}) == doctest::Approx(0.5));
    CHECK(hmm_initial(m, {0, {1, 0}}) == doctest::Approx(0.5));
  }
  SUBCASE("illustrative context chain") {
    const ModelParams m = illustrative_model();
    REQUIRE(validate(m).empty());
    CHECK(hmm_initial(m, {0, {0, 1}}) == doctest::Approx(0.28).epsilon(1e-12));
  }
  SUBCASE("sums to one over all states") {
    std::mt19937_64 gen(3);
    const ModelParams m = testing::random_model(gen, 3, 4, 5, 2, 0.5);
    double total = 0.0;
    for (std::size_t s = 0; s < m.states(); ++s) total += hmm_initial(m, unflatten(m, s));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS(hmm_initial(uniform_model(1, 2, 2, 1), {1, {0, 1}}));
}

TEST_CASE("hmm_transition") {
  SUBCASE("b=1 reduces to f") {
    std::mt19937_64 gen(5);
    const ModelParams m = testing::random_model(gen, 1, 3, 4, 2, 0.5);
    for (std::size_t s = 0; s < m.states(); ++s)
      for (std::size_t s2 = 0; s2 < m.states(); ++s2)
        CHECK(hmm_transition(m, unflatten(m, s), unflatten(m, s2)) == doctest::Approx(m.f(0, s2)));
  }
  SUBCASE("every induced row sums to one") {
    std::mt19937_64 gen(6);
    const ModelParams m = testing::random_model(gen, 3, 3, 4, 2, 0.5);
    for (std::size_t s = 0; s < m.states(); ++s) {
      double row = 0.0;
      for (std::size_t s2 = 0; s2 < m.states(); ++s2) row += hmm_transition(m, unflatten(m, s), unflatten(m, s2));
      CHECK(std::abs(row - 1.0) < 1e-10);
    }
  }
  SUBCASE("illustrative chain into (2,2,3)") {
    const ModelParams m = illustrative_model();
    CHECK(hmm_transition(m, {0, {0, 2}}, {1, {1, 2}}) == doctest::Approx(0.4 * 0.6).epsilon(1e-12));
  }
}

TEST_CASE("hmm_emission") {
  ModelParams m = testing::toy_model();
  const StateIndex s{0, {0, 1}};
  SUBCASE("Gaussian peak") {
    Observation o{0, {0.0}, 1};
    CHECK(hmm_emission(m, s, o) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
    CHECK(hmm_emission(m, s, o) == doctest::Approx(0.3989423).epsilon(1e-7));
  }
  SUBCASE("unit offset") {
    Observation o{0, {1.0}, 1};
    CHECK(hmm_emission(m, s, o) == doctest::Approx(0.2419707).epsilon(1e-7));
  }
  SUBCASE("zero membership annihilates") {
    Observation o{1, {0.0}, 1};
    CHECK(hmm_emission(m, s, o) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    Observation o{0, {0.0, 1.0}, 1};
    CHECK_THROWS_AS(hmm_emission(m, s, o), std::invalid_argument);
  }
}

TEST_CASE("emission integrates to the membership product (d=1 quadrature)") {
  ModelParams m(1, 2, 3, 1, 0.3);
  m.pi(0) = 1.0;
  m.trans(0, 0) = 1.0;
  m.f(0, 0) = m.f(0, 1) = 0.5;
  const double q0[] = {0.2, 0.5, 0.3}, q1[] = {0.6, 0.1, 0.3};
  for (std::size_t e = 0; e < 3; ++e) {
    m.q(0, e) = q0[e];
    m.q(1, e) = q1[e];
  }
  m.v(0)[0] = 0.7;
  const StateIndex s{0, {0, 1}};
  // Trapezoid over +-12 sigma around the mean.
  const double lo = 0.7 - 12 * 0.3, hi = 0.7 + 12 * 0.3;
  const int steps = 40000;
  const double h = (hi - lo) / steps;
  double integral = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    integral += w * hmm_emission(m, s, Observation{1, {lo + i * h}, 2});
  }
  integral *= h;
  CHECK(std::abs(integral - 0.5 * 0.3) < 1e-6);
}

TEST_CASE("max_abs_difference covers every parameter block") {
  ModelParams a = uniform_model(2, 3, 4, 2);
  ModelParams b = a;
  CHECK(max_abs_difference(a, b) == 0.0);
  b.v(3)[1] += 0.25;
  CHECK(max_abs_difference(a, b) == doctest::Approx(0.25));
}

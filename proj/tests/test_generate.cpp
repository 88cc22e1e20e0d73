#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "concept_hmm/generate.hpp"
#include "concept_hmm/inference.hpp"
#include "support/oracles.hpp"

using namespace chmm;

namespace {
const std::vector<double> kPi = {0.8, 0.2};
const std::vector<double> kTrans = {0.6, 0.4, 0.7, 0.3};
}  // namespace

TEST_CASE("sequence_probability") {
  SUBCASE("two-context chain over five sentences") {
    CHECK(0.8 * 0.4 * 0.3 * 0.7 * 0.4 == doctest::Approx(0.02688).epsilon(1e-14));
    const std::vector<std::size_t> seq = {0, 1, 1, 0, 1};
    CHECK(std::abs(sequence_probability(kPi, kTrans, seq) - 0.02688) < 1e-12);
  }
  SUBCASE("single state is the initial probability") {
    for (std::size_t i : {0u, 1u}) {
      const std::vector<std::size_t> seq = {i};
      CHECK(sequence_probability(kPi, kTrans, seq) == kPi[i]);
    }
  }
  SUBCASE("all sequences of a fixed length sum to one") {
    for (std::size_t z = 1; z <= 8; ++z) {
      double total = 0.0;
      std::vector<std::size_t> seq(z);
      for (std::size_t mask = 0; mask < (std::size_t{1} << z); ++mask) {
        for (std::size_t i = 0; i < z; ++i) seq[i] = (mask >> i) & 1u;
        total += sequence_probability(kPi, kTrans, seq);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("errors") {
    const std::vector<std::size_t> bad = {0, 2};
    CHECK_THROWS_AS(sequence_probability(kPi, kTrans, bad), std::out_of_range);
    CHECK_THROWS_AS(sequence_probability(kPi, kTrans, std::vector<std::size_t>{}), std::invalid_argument);
  }
}

TEST_CASE("a deterministic model yields the forced triple sequence") {
  ModelParams m(2, 2, 3, 2, 1e-9);
  m.pi(0) = 1.0;
  m.trans(0, 1) = 1.0;
  m.trans(1, 0) = 1.0;
  m.f(0, pair_index(2, {0, 1})) = 1.0;
  m.f(1, pair_index(2, {1, 0})) = 1.0;
  m.q(0, 2) = 1.0;
  m.q(1, 0) = 1.0;
  m.v(0)[0] = 1.0;
  m.v(1)[1] = -2.0;
  const auto sampled = sample_document(m, 6, 9);
  for (std::size_t t = 0; t < 6; ++t) {
    const auto& o = sampled.document.observations[t];
    const bool even = t % 2 == 0;
    CHECK(sampled.states[t].context == (even ? 0u : 1u));
    CHECK(o.subject == (even ? 2u : 0u));
    CHECK(o.object == (even ? 0u : 2u));
    const std::vector<double> expected = even ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, -2.0};
    for (std::size_t x = 0; x < 2; ++x) CHECK(std::abs(o.relation[x] - expected[x]) < 1e-7);
  }
}

TEST_CASE("sampling statistics") {
  std::mt19937_64 gen(31);
  const ModelParams m = testing::random_model(gen, 2, 3, 4, 2, 0.5);
  const std::size_t T = 100000;
  const auto sampled = sample_document(m, T, 4242);
  const auto& obs = sampled.document.observations;

  SUBCASE("subject frequencies given the first concept match q") {
    for (std::size_t c = 0; c < 3; ++c) {
      std::vector<double> counts(4, 0.0);
      double total = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        if (sampled.states[t].pair.first != c) continue;
        counts[obs[t].subject] += 1.0;
        total += 1.0;
      }
      REQUIRE(total > 1000);
      for (std::size_t e = 0; e < 4; ++e) {
        const double p = m.q(c, e);
        const double se = std::sqrt(p * (1 - p) / total);
        CHECK(std::abs(counts[e] / total - p) <= 3 * se + 1e-12);
      }
    }
  }
  SUBCASE("relation means per pair match v") {
    for (std::size_t p = 0; p < m.pairs(); ++p) {
      const ConceptPair cp = pair_at(3, p);
      std::vector<double> sum(2, 0.0);
      double count = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        if (!(sampled.states[t].pair == cp)) continue;
        for (std::size_t x = 0; x < 2; ++x) sum[x] += obs[t].relation[x];
        count += 1.0;
      }
      if (count < 30) continue;
      for (std::size_t x = 0; x < 2; ++x) CHECK(std::abs(sum[x] / count - m.v(p)[x]) <= 3 * 0.5 / std::sqrt(count));
    }
  }
  SUBCASE("context transitions pass a chi-square check") {
    double chi2 = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      std::vector<double> counts(2, 0.0);
      double total = 0.0;
      for (std::size_t t = 1; t < T; ++t) {
        if (sampled.states[t - 1].context != j) continue;
        counts[sampled.states[t].context] += 1.0;
        total += 1.0;
      }
      for (std::size_t j2 = 0; j2 < 2; ++j2) {
        const double expected = total * m.trans(j, j2);
        chi2 += (counts[j2] - expected) * (counts[j2] - expected) / expected;
      }
    }
    // Two rows with one degree of freedom each; the 99.9% quantile of chi2(2) is 13.8.
    CHECK(chi2 < 13.8);
  }
}

TEST_CASE("the hidden path always has positive density") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const ModelParams m = testing::random_model(gen, 3, 3, 5, 2, 0.3);
    const auto sampled = sample_document(m, 50, static_cast<std::uint64_t>(trial));
    CHECK(joint_density(m, sampled.document, sampled.states) > 0.0);
    CHECK(std::isfinite(log_likelihood(m, sampled.document)));
  }
}

TEST_CASE("sampling is deterministic per seed") {
  std::mt19937_64 gen(9);
  const ModelParams m = testing::random_model(gen, 2, 3, 4, 2, 0.5);
  const auto a = sample_document(m, 40, 1), b = sample_document(m, 40, 1), c = sample_document(m, 40, 2);
  std::ostringstream sa, sb, sc;
  write_triples(sa, a.document);
  write_triples(sb, b.document);
  write_triples(sc, c.document);
  CHECK(sa.str() == sb.str());
  CHECK(sa.str() != sc.str());
  CHECK_THROWS_AS(sample_document(m, 0, 1), std::invalid_argument);
}

TEST_CASE("states sidecar format") {
  const std::vector<StateIndex> states = {{0, {0, 1}}, {1, {2, 0}}};
  std::ostringstream out;
  write_states(out, states);
  CHECK(out.str() == "[0,0,1]\n[1,2,0]\n");
}

#include "concept_hmm/generate.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "concept_hmm/error.hpp"
#include "concept_hmm/rng.hpp"

namespace chmm {

double sequence_probability(std::span<const double> pi, std::span<const double> trans,
                            std::span<const std::size_t> states) {
  const std::size_t b = pi.size();
  if (trans.size() != b * b) throw std::invalid_argument("transition matrix must be b x b");
  if (states.empty()) throw std::invalid_argument("empty context sequence");
  for (std::size_t s : states)
    if (s >= b) throw std::out_of_range("context index " + std::to_string(s) + " out of range");
  double prob = pi[states[0]];
  for (std::size_t t = 1; t < states.size(); ++t) prob *= trans[states[t - 1] * b + states[t]];
  return prob;
}

SampledDocument sample_document(const ModelParams& params, std::size_t T, std::uint64_t seed) {
  if (T == 0) throw std::invalid_argument("sample_document: T must be at least 1");
  const std::size_t b = params.contexts(), k = params.concepts(), n = params.entities();
  const std::size_t P = params.pairs(), d = params.dim();
  Rng rng(seed);

  SampledDocument out;
  out.document.entity_names = params.entity_names();
  if (out.document.entity_names.empty()) {
    out.document.entity_names.reserve(n);
    for (std::size_t e = 0; e < n; ++e) out.document.entity_names.push_back("e" + std::to_string(e));
  }
  out.document.observations.reserve(T);
  out.states.reserve(T);

  std::size_t context = 0;
  for (std::size_t t = 0; t < T; ++t) {
    context = t == 0 ? rng.categorical(params.pi_data())
                     : rng.categorical(params.trans_data().subspan(context * b, b));
    const std::size_t pair = rng.categorical(params.f_data().subspan(context * P, P));
    const ConceptPair cp = pair_at(k, pair);
    Observation obs;
    obs.subject = rng.categorical(params.q_data().subspan(cp.first * n, n));
    obs.object = rng.categorical(params.q_data().subspan(cp.second * n, n));
    const auto mean = params.v(pair);
    obs.relation.resize(d);
    for (std::size_t x = 0; x < d; ++x) obs.relation[x] = mean[x] + params.sigma() * rng.normal();
    out.document.observations.push_back(std::move(obs));
    out.states.push_back({context, cp});
  }
  return out;
}

void write_states(std::ostream& out, std::span<const StateIndex> states) {
  for (const auto& s : states) out << '[' << s.context << ',' << s.pair.first << ',' << s.pair.second << "]\n";
}

void save_states(std::span<const StateIndex> states, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write states file " + path);
  write_states(out, states);
}

}  // namespace chmm

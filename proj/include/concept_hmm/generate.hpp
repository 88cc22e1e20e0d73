#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "concept_hmm/ingest.hpp"
#include "concept_hmm/model.hpp"

namespace chmm {

/// Probability of a context sequence under (pi, trans): pi[s0] * prod trans[s_t][s_{t+1}].
/// trans is row-major b x b.
double sequence_probability(std::span<const double> pi, std::span<const double> trans,
                            std::span<const std::size_t> states);

struct SampledDocument {
  Document document;
  std::vector<StateIndex> states;
};

/// Runs the generation cycle T times: advance the context chain, draw a
/// concept pair from f, instantiate subject/object from q, and perturb the
/// pair's relation vector with isotropic N(0, sigma^2) noise.
SampledDocument sample_document(const ModelParams& params, std::size_t T, std::uint64_t seed);

/// One JSON array [context, first, second] per line.
void write_states(std::ostream& out, std::span<const StateIndex> states);
void save_states(std::span<const StateIndex> states, const std::string& path);

}  // namespace chmm

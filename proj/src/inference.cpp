#include "concept_hmm/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "concept_hmm/error.hpp"

namespace chmm {

Grid emission_table(const ModelParams& params, const Document& doc) {
  const std::size_t T = doc.length(), P = params.pairs(), k = params.concepts();
  Grid table(T, P);
  for (std::size_t t = 0; t < T; ++t) {
    const Observation& obs = doc.observations[t];
    if (obs.relation.size() != params.dim())
      throw std::invalid_argument("observation " + std::to_string(t) + " has relation dimension " +
                                  std::to_string(obs.relation.size()) + ", model expects " +
                                  std::to_string(params.dim()));
    if (obs.subject >= params.entities() || obs.object >= params.entities())
      throw std::invalid_argument("observation " + std::to_string(t) +
                                  " references an entity outside the model");
    for (std::size_t p = 0; p < P; ++p) {
      const ConceptPair cp = pair_at(k, p);
      const double membership = params.q(cp.first, obs.subject) * params.q(cp.second, obs.object);
      table(t, p) = membership == 0.0 ? 0.0 : membership * relation_density(params, p, obs.relation);
    }
  }
  return table;
}

namespace {

void check_emissions(const ModelParams& params, const Grid& emissions) {
  if (emissions.cols() != params.pairs())
    throw std::invalid_argument("emission table width does not match k(k-1)");
  if (emissions.rows() == 0) throw std::invalid_argument("document is empty");
}

double normalize(std::span<double> row) {
  double total = 0.0;
  for (double x : row) total += x;
  if (total > 0.0 && std::isfinite(total))
    for (double& x : row) x /= total;
  return total;
}

// Per-context sums of row t of a b x P-blocked trellis.
std::vector<double> context_mass(const Grid& trellis, std::size_t t, std::size_t b, std::size_t P) {
  std::vector<double> mass(b, 0.0);
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t p = 0; p < P; ++p) mass[j] += trellis(t, j * P + p);
  return mass;
}

// w[j'] = sum_p f(j', p) * e_{t}(p) * beta_hat_{t}(j', p)
std::vector<double> weighted_inflow(const ModelParams& params, const Grid& emissions, const Grid& beta,
                                    std::size_t t) {
  const std::size_t b = params.contexts(), P = params.pairs();
  std::vector<double> w(b, 0.0);
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t p = 0; p < P; ++p) w[j] += params.f(j, p) * emissions(t, p) * beta(t, j * P + p);
  return w;
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Grid& emissions) {
  check_emissions(params, emissions);
  const std::size_t T = emissions.rows(), b = params.contexts(), P = params.pairs();
  ForwardResult out;
  out.alpha = Grid(T, b * P);
  out.scale.resize(T);
  out.log_scale.resize(T);

  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> inflow(b);
    if (t == 0) {
      for (std::size_t j = 0; j < b; ++j) inflow[j] = params.pi(j);
    } else {
      const auto mass = context_mass(out.alpha, t - 1, b, P);
      for (std::size_t j = 0; j < b; ++j) {
        double acc = 0.0;
        for (std::size_t from = 0; from < b; ++from) acc += mass[from] * params.trans(from, j);
        inflow[j] = acc;
      }
    }
    auto row = out.alpha.row(t);
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t p = 0; p < P; ++p) row[j * P + p] = inflow[j] * params.f(j, p) * emissions(t, p);
    const double c = normalize(row);
    if (!(c > 0.0) || !std::isfinite(c)) throw ZeroLikelihoodError(t);
    out.scale[t] = c;
    out.log_scale[t] = std::log(c);
    out.log_likelihood += out.log_scale[t];
  }
  return out;
}

ForwardResult forward(const ModelParams& params, const Document& doc) {
  return forward(params, emission_table(params, doc));
}

Grid backward(const ModelParams& params, const Grid& emissions, std::span<const double> scale) {
  check_emissions(params, emissions);
  const std::size_t T = emissions.rows(), b = params.contexts(), P = params.pairs();
  if (scale.size() != T) throw std::invalid_argument("scale vector length does not match the document");
  Grid beta(T, b * P, 1.0);
  for (std::size_t t = T - 1; t-- > 0;) {
    const auto w = weighted_inflow(params, emissions, beta, t + 1);
    for (std::size_t j = 0; j < b; ++j) {
      double acc = 0.0;
      for (std::size_t to = 0; to < b; ++to) acc += params.trans(j, to) * w[to];
      acc /= scale[t + 1];
      // beta_t depends on the state only through its context.
      for (std::size_t p = 0; p < P; ++p) beta(t, j * P + p) = acc;
    }
  }
  return beta;
}

Grid backward(const ModelParams& params, const Document& doc, std::span<const double> scale) {
  return backward(params, emission_table(params, doc), scale);
}

double log_likelihood(const ModelParams& params, const Document& doc) {
  return forward(params, doc).log_likelihood;
}

double Posteriors::pair(std::size_t t, std::size_t l1, std::size_t l2) const {
  if (l1 == l2) return 0.0;
  return gamma_pair(t, pair_index(gamma_first_concept.cols(), {l1, l2}));
}

void derive_marginals(Posteriors& post, const ModelParams& params) {
  const std::size_t T = post.gamma.rows(), b = params.contexts(), P = params.pairs();
  const std::size_t k = params.concepts();
  if (post.gamma.cols() != b * P) throw std::invalid_argument("gamma width does not match model");
  post.gamma_context = Grid(T, b);
  post.gamma_pair = Grid(T, P);
  post.gamma_first_concept = Grid(T, k);
  post.gamma_second_concept = Grid(T, k);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t j = 0; j < b; ++j)
      for (std::size_t p = 0; p < P; ++p) {
        const double g = post.gamma(t, j * P + p);
        post.gamma_context(t, j) += g;
        post.gamma_pair(t, p) += g;
      }
    for (std::size_t p = 0; p < P; ++p) {
      const ConceptPair cp = pair_at(k, p);
      post.gamma_first_concept(t, cp.first) += post.gamma_pair(t, p);
      post.gamma_second_concept(t, cp.second) += post.gamma_pair(t, p);
    }
  }
}

std::vector<Grid> xi_context_fast(const Grid& alpha, const Grid& beta, const ModelParams& params,
                                  const Grid& emissions) {
  check_emissions(params, emissions);
  const std::size_t T = emissions.rows(), b = params.contexts(), P = params.pairs();
  if (alpha.rows() != T || beta.rows() != T || alpha.cols() != b * P || beta.cols() != b * P)
    throw std::invalid_argument("alpha/beta trellis shapes do not match the model and document");
  std::vector<Grid> xi;
  xi.reserve(T > 0 ? T - 1 : 0);
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const auto mass = context_mass(alpha, t, b, P);
    const auto w = weighted_inflow(params, emissions, beta, t + 1);
    Grid slice(b, b);
    for (std::size_t j1 = 0; j1 < b; ++j1)
      for (std::size_t j2 = 0; j2 < b; ++j2) slice(j1, j2) = mass[j1] * params.trans(j1, j2) * w[j2];
    const double total = normalize(slice.data());
    if (!(total > 0.0)) throw ZeroLikelihoodError(t + 1);
    xi.push_back(std::move(slice));
  }
  return xi;
}

std::vector<Grid> xi_context_fast(const Grid& alpha, const Grid& beta, const ModelParams& params,
                                  const Document& doc) {
  return xi_context_fast(alpha, beta, params, emission_table(params, doc));
}

Posteriors posteriors(const ModelParams& params, const Document& doc) {
  const Grid emissions = emission_table(params, doc);
  const ForwardResult fwd = forward(params, emissions);
  const Grid beta = backward(params, emissions, fwd.scale);
  const std::size_t T = emissions.rows(), N = params.states();

  Posteriors post;
  post.log_likelihood = fwd.log_likelihood;
  post.gamma = Grid(T, N);
  for (std::size_t t = 0; t < T; ++t) {
    auto row = post.gamma.row(t);
    for (std::size_t s = 0; s < N; ++s) row[s] = fwd.alpha(t, s) * beta(t, s);
    if (!(normalize(row) > 0.0)) throw ZeroLikelihoodError(t);
  }
  derive_marginals(post, params);
  post.xi_context = xi_context_fast(fwd.alpha, beta, params, emissions);
  return post;
}

double joint_density(const ModelParams& params, const Document& doc, std::span<const StateIndex> states) {
  if (states.size() != doc.length())
    throw std::invalid_argument("state sequence length " + std::to_string(states.size()) +
                                " does not match document length " + std::to_string(doc.length()));
  if (states.empty()) throw std::invalid_argument("empty state sequence");
  double density = hmm_initial(params, states[0]) * hmm_emission(params, states[0], doc.observations[0]);
  for (std::size_t t = 1; t < states.size(); ++t)
    density *= hmm_transition(params, states[t - 1], states[t]) *
               hmm_emission(params, states[t], doc.observations[t]);
  return density;
}

}  // namespace chmm

#pragma once

#include <span>
#include <vector>

#include "concept_hmm/grid.hpp"
#include "concept_hmm/ingest.hpp"
#include "concept_hmm/model.hpp"

namespace chmm {

/// Emission densities memoized per (t, concept pair). The emission does not
/// depend on the context, so one T x k(k-1) table serves all b contexts.
Grid emission_table(const ModelParams& params, const Document& doc);

/// Scaled forward pass. Each alpha row is normalized to sum to 1; scale(t) is
/// the normalizer, so the unscaled alpha_t equals alpha(t, s) * prod_{u<=t} scale(u)
/// and the log-likelihood is the sum of log_scale.
struct ForwardResult {
  Grid alpha;                     // T x N
  std::vector<double> scale;      // c_t
  std::vector<double> log_scale;  // log c_t
  double log_likelihood = 0.0;
};

ForwardResult forward(const ModelParams& params, const Document& doc);
ForwardResult forward(const ModelParams& params, const Grid& emissions);

/// Scaled backward pass: beta_hat_t = beta_t / prod_{u>t} scale(u), so
/// beta_hat_T = 1 and sum_s alpha_hat_t(s) * beta_hat_t(s) = 1 for every t.
Grid backward(const ModelParams& params, const Document& doc, std::span<const double> scale);
Grid backward(const ModelParams& params, const Grid& emissions, std::span<const double> scale);

double log_likelihood(const ModelParams& params, const Document& doc);

struct Posteriors {
  double log_likelihood = 0.0;
  Grid gamma;                 // T x N
  Grid gamma_context;         // T x b        gamma_t((j,*,*))
  Grid gamma_pair;            // T x k(k-1)   gamma_t((*,l1,l2)), pair-indexed
  Grid gamma_first_concept;   // T x k        gamma_t((*,l1,*))
  Grid gamma_second_concept;  // T x k        gamma_t((*,*,l2))
  std::vector<Grid> xi_context;  // T-1 entries, each b x b

  std::size_t length() const noexcept { return gamma.rows(); }
  double pair(std::size_t t, std::size_t l1, std::size_t l2) const;
};

/// Fills every wildcard marginal of `post` from post.gamma. xi_context and
/// log_likelihood are left untouched.
void derive_marginals(Posteriors& post, const ModelParams& params);

Posteriors posteriors(const ModelParams& params, const Document& doc);

/// Context-pair transition posteriors xi_t((j1,*,*),(j2,*,*)) for t = 0..T-2.
///
/// Uses the factorization a = p_{j j'} f_{j' pair'}: for each (t+1, j') the
/// inner sum over pairs of f * emission * beta is formed once, so a step costs
/// O(b k^2 + b^2) instead of O(b^2 k^4). Each slice is normalized to sum 1.
std::vector<Grid> xi_context_fast(const Grid& alpha, const Grid& beta, const ModelParams& params,
                                  const Document& doc);
std::vector<Grid> xi_context_fast(const Grid& alpha, const Grid& beta, const ModelParams& params,
                                  const Grid& emissions);

/// P(O, Q | lambda) for an explicit state sequence (no scaling).
double joint_density(const ModelParams& params, const Document& doc, std::span<const StateIndex> states);

}  // namespace chmm

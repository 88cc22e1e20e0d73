#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "concept_hmm/error.hpp"

namespace chmm {

struct Observation;

/// Ordered concept pair (first, second) with first != second.
///
/// Pairs are stored densely in the range [0, k(k-1)): the pair index of
/// (l1, l2) is l1*(k-1) + (l2 < l1 ? l2 : l2-1). Self-pairs have no index,
/// so no probability mass can ever sit on a diagonal entry.
struct ConceptPair {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const ConceptPair&, const ConceptPair&) = default;
};

std::size_t pair_count(std::size_t k);
std::size_t pair_index(std::size_t k, ConceptPair pair);
ConceptPair pair_at(std::size_t k, std::size_t index);

/// Composite HMM state (context, first concept, second concept).
struct StateIndex {
  std::size_t context = 0;
  ConceptPair pair;
  friend bool operator==(const StateIndex&, const StateIndex&) = default;
};

/// Full parameter set of the concept-pair document model.
///
/// All indices are 0-based. Tensors are stored row-major:
///   pi     [b]
///   trans  [b][b]
///   f      [b][pair]          (pair over k(k-1) ordered pairs)
///   q      [k][n]
///   v      [pair][d]
/// sigma is a fixed hyperparameter and is never reestimated.
class ModelParams {
public:
  ModelParams() = default;
  ModelParams(std::size_t b, std::size_t k, std::size_t n, std::size_t d, double sigma);

  std::size_t contexts() const noexcept { return b_; }
  std::size_t concepts() const noexcept { return k_; }
  std::size_t entities() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t pairs() const noexcept { return pair_count(k_); }
  std::size_t states() const noexcept { return b_ * pairs(); }
  double sigma() const noexcept { return sigma_; }

  double& pi(std::size_t j) { return pi_[j]; }
  double pi(std::size_t j) const { return pi_[j]; }
  double& trans(std::size_t from, std::size_t to) { return trans_[from * b_ + to]; }
  double trans(std::size_t from, std::size_t to) const { return trans_[from * b_ + to]; }
  double& f(std::size_t j, std::size_t pair) { return f_[j * pairs() + pair]; }
  double f(std::size_t j, std::size_t pair) const { return f_[j * pairs() + pair]; }
  double& q(std::size_t c, std::size_t entity) { return q_[c * n_ + entity]; }
  double q(std::size_t c, std::size_t entity) const { return q_[c * n_ + entity]; }
  std::span<double> v(std::size_t pair) { return {v_.data() + pair * d_, d_}; }
  std::span<const double> v(std::size_t pair) const { return {v_.data() + pair * d_, d_}; }

  std::span<const double> pi_data() const { return pi_; }
  std::span<const double> trans_data() const { return trans_; }
  std::span<const double> f_data() const { return f_; }
  std::span<const double> q_data() const { return q_; }
  std::span<const double> v_data() const { return v_; }

  std::vector<std::string>& entity_names() { return entity_names_; }
  const std::vector<std::string>& entity_names() const { return entity_names_; }

  /// Normalizing constant (2 pi sigma^2)^(-d/2) of the relation density.
  double gauss_norm() const;
  /// Exponent scale 1 / (2 sigma^2).
  double gauss_rate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
  std::size_t b_ = 0, k_ = 0, n_ = 0, d_ = 0;
  double sigma_ = 1.0;
  std::vector<double> pi_, trans_, f_, q_, v_;
  std::vector<std::string> entity_names_;
};

/// Flat state index in [0, b*k*(k-1)): context-major, pair-minor.
std::size_t flatten(const ModelParams& params, StateIndex s);
StateIndex unflatten(const ModelParams& params, std::size_t flat);

inline constexpr double kProbabilityTolerance = 1e-10;

struct Violation {
  std::string location;  // e.g. "trans[1]"
  std::string message;
};

/// Empty result means every constraint holds.
std::vector<Violation> validate(const ModelParams& params);

/// Validates a model document before conversion; in addition to the numeric
/// constraints this reports structural problems such as non-null diagonal
/// concept-pair entries or missing fields.
std::vector<Violation> validate(const nlohmann::json& model_file);

double hmm_initial(const ModelParams& params, StateIndex s);
double hmm_transition(const ModelParams& params, StateIndex from, StateIndex to);
double hmm_emission(const ModelParams& params, StateIndex s, const Observation& obs);

/// Density of relation vector r under pair's Gaussian (no membership factors).
double relation_density(const ModelParams& params, std::size_t pair, std::span<const double> r);

/// L-infinity distance over every parameter entry (pi, trans, f, q, v).
double max_abs_difference(const ModelParams& a, const ModelParams& b);

inline constexpr const char* kModelFormatVersion = "concept-hmm/1";

nlohmann::json to_json(const ModelParams& params);
/// Throws ParseError listing violations if the document is not a valid model.
ModelParams model_from_json(const nlohmann::json& doc);

ModelParams load_model(const std::string& path);
void save_model(const ModelParams& params, const std::string& path);

}  // namespace chmm

#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "concept_hmm/conceptualize.hpp"
#include "concept_hmm/grid.hpp"

namespace chmm {

using EntitySet = std::set<std::string>;

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SilverRelation {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<double> vector;
};

struct SilverStandard {
  std::vector<EntitySet> concepts;
  std::vector<SilverRelation> relations;
};

/// Harmonic mean of two values; 0 when either is 0.
double f_measure(double precision, double recall);
/// Harmonic mean; 0 when any argument is 0.
double harmonic_mean(std::span<const double> values);

/// Set-overlap precision/recall/F1 of algorithm concept A against reference S.
/// f(A, S) is the closeness between the two concepts.
Scores concept_prf(const EntitySet& algorithm, const EntitySet& reference);

struct Case1Result {
  Scores scores;
  Grid closeness;  // algorithm concept x silver concept
};

/// Best-match averaging of concept closeness in both directions.
Case1Result case1_scores(std::span<const EntitySet> algorithm, std::span<const EntitySet> silver);

/// Concepts as entity sets, keeping members with prob >= vartheta; index = concept id.
std::vector<EntitySet> materialize_concepts(const ConceptualGraph& graph, double vartheta);

/// Relation closeness g = HM(f(C_from^A, C_from'^S), f(C_to^A, C_to'^S), exp(-||r - t||)),
/// averaged by best match in both directions. An algorithm graph without
/// relations scores 0; the silver standard must carry relations.
Scores case2_scores(const ConceptualGraph& graph, const SilverStandard& silver, double vartheta);

struct EvalReport {
  Scores case1;
  std::optional<Scores> case2;
  Grid closeness;
};

/// Case I over the nonempty materialized concepts; Case II when the silver
/// standard has relations.
EvalReport evaluate(const ConceptualGraph& graph, const SilverStandard& silver, double vartheta);

nlohmann::json to_json(const EvalReport& report);

/// Parses {concepts: [[names]], relations: [{from_index, to_index, vector}]}.
/// When known_entities is nonempty, every name must be in it; otherwise an
/// Error lists the unresolved names.
SilverStandard silver_from_json(const nlohmann::json& doc, const std::set<std::string>& known_entities = {});
SilverStandard load_silver(const std::string& path, const std::set<std::string>& known_entities = {});

}  // namespace chmm

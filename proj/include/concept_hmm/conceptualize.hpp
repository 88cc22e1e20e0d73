#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "concept_hmm/inference.hpp"

namespace chmm {

struct Member {
  std::string entity;
  double prob = 0.0;
  friend bool operator==(const Member&, const Member&) = default;
};

struct ConceptNode {
  std::size_t id = 0;
  std::vector<Member> members;  // descending prob, ties by entity id
  friend bool operator==(const ConceptNode&, const ConceptNode&) = default;
};

struct Relation {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<double> vector;
  double score = 0.0;
  friend bool operator==(const Relation&, const Relation&) = default;
};

struct ConceptualGraph {
  std::vector<ConceptNode> concepts;
  std::vector<Relation> relations;  // relevant pairs only, in pair-index order
  double theta = 0.0;
  double vartheta = 0.0;
  friend bool operator==(const ConceptualGraph&, const ConceptualGraph&) = default;
};

inline constexpr double kDefaultVartheta = 0.05;
inline constexpr std::size_t kDefaultTopMembers = 8;

/// S(l1, l2) = sum_t gamma_t((*,l1,l2)) as a dense k x k grid (zero diagonal).
/// The grand total equals the document length.
Grid relevance_scores(const Posteriors& post);

/// Half the uniform share: T / (2 k (k-1)).
double default_theta(std::size_t T, std::size_t k);

/// Keeps pairs with S >= theta and memberships with q >= vartheta (and q > 0).
/// Requires 0 < theta <= T and 0 <= vartheta <= 1.
ConceptualGraph build_conceptual_graph(const ModelParams& params, const Posteriors& post, double theta,
                                       double vartheta);

enum class ExportFormat { dot, structured };

ExportFormat parse_export_format(std::string_view name);

std::string export_graph(const ConceptualGraph& graph, ExportFormat format,
                         std::size_t top_members = kDefaultTopMembers);

nlohmann::json to_json(const ConceptualGraph& graph);
ConceptualGraph graph_from_json(const nlohmann::json& doc);
ConceptualGraph load_graph(const std::string& path);

}  // namespace chmm

#include "concept_hmm/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "concept_hmm/error.hpp"

namespace chmm {

using nlohmann::json;

double f_measure(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double inv = 0.0;
  for (double x : values) {
    if (!(x > 0.0)) return 0.0;
    inv += 1.0 / x;
  }
  return static_cast<double>(values.size()) / inv;
}

Scores concept_prf(const EntitySet& algorithm, const EntitySet& reference) {
  std::size_t common = 0;
  for (const auto& e : algorithm) common += reference.count(e);
  Scores s;
  if (!algorithm.empty()) s.precision = static_cast<double>(common) / static_cast<double>(algorithm.size());
  if (!reference.empty()) s.recall = static_cast<double>(common) / static_cast<double>(reference.size());
  s.f1 = f_measure(s.precision, s.recall);
  return s;
}

Case1Result case1_scores(std::span<const EntitySet> algorithm, std::span<const EntitySet> silver) {
  if (algorithm.empty() || silver.empty())
    throw std::invalid_argument("case1_scores: both conceptualizations need at least one concept");
  Case1Result out;
  out.closeness = Grid(algorithm.size(), silver.size());
  for (std::size_t i = 0; i < algorithm.size(); ++i)
    for (std::size_t j = 0; j < silver.size(); ++j) out.closeness(i, j) = concept_prf(algorithm[i], silver[j]).f1;

  double p = 0.0, r = 0.0;
  for (std::size_t i = 0; i < algorithm.size(); ++i) {
    const auto row = out.closeness.row(i);
    p += *std::max_element(row.begin(), row.end());
  }
  for (std::size_t j = 0; j < silver.size(); ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < algorithm.size(); ++i) best = std::max(best, out.closeness(i, j));
    r += best;
  }
  out.scores.precision = p / static_cast<double>(algorithm.size());
  out.scores.recall = r / static_cast<double>(silver.size());
  out.scores.f1 = f_measure(out.scores.precision, out.scores.recall);
  return out;
}

std::vector<EntitySet> materialize_concepts(const ConceptualGraph& graph, double vartheta) {
  std::size_t count = 0;
  for (const auto& node : graph.concepts) count = std::max(count, node.id + 1);
  std::vector<EntitySet> out(count);
  for (const auto& node : graph.concepts)
    for (const auto& m : node.members)
      if (m.prob >= vartheta) out[node.id].insert(m.entity);
  return out;
}

Scores case2_scores(const ConceptualGraph& graph, const SilverStandard& silver, double vartheta) {
  if (silver.relations.empty()) throw std::invalid_argument("case2_scores: silver standard has no relations");
  Scores out;
  if (graph.relations.empty()) return out;

  const auto concepts = materialize_concepts(graph, vartheta);
  auto closeness = [&](std::size_t a, std::size_t s) {
    if (a >= concepts.size() || s >= silver.concepts.size())
      throw std::out_of_range("relation endpoint refers to a missing concept");
    return concept_prf(concepts[a], silver.concepts[s]).f1;
  };

  const std::size_t na = graph.relations.size(), ns = silver.relations.size();
  Grid g(na, ns);
  for (std::size_t i = 0; i < na; ++i) {
    const Relation& ra = graph.relations[i];
    for (std::size_t j = 0; j < ns; ++j) {
      const SilverRelation& rs = silver.relations[j];
      if (ra.vector.size() != rs.vector.size())
        throw std::invalid_argument("case2_scores: relation vectors have different dimensions");
      double sq = 0.0;
      for (std::size_t x = 0; x < ra.vector.size(); ++x) sq += (ra.vector[x] - rs.vector[x]) * (ra.vector[x] - rs.vector[x]);
      const double terms[] = {closeness(ra.from, rs.from), closeness(ra.to, rs.to), std::exp(-std::sqrt(sq))};
      g(i, j) = harmonic_mean(terms);
    }
  }
  for (std::size_t i = 0; i < na; ++i) {
    const auto row = g.row(i);
    out.precision += *std::max_element(row.begin(), row.end());
  }
  for (std::size_t j = 0; j < ns; ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < na; ++i) best = std::max(best, g(i, j));
    out.recall += best;
  }
  out.precision /= static_cast<double>(na);
  out.recall /= static_cast<double>(ns);
  out.f1 = f_measure(out.precision, out.recall);
  return out;
}

EvalReport evaluate(const ConceptualGraph& graph, const SilverStandard& silver, double vartheta) {
  const auto all = materialize_concepts(graph, vartheta);
  std::vector<EntitySet> nonempty;
  for (const auto& c : all)
    if (!c.empty()) nonempty.push_back(c);
  if (nonempty.empty()) throw std::invalid_argument("evaluate: no concept has a member at this vartheta");

  EvalReport report;
  report.case1 = case1_scores(nonempty, silver.concepts).scores;
  report.closeness = Grid(all.size(), silver.concepts.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < silver.concepts.size(); ++j)
      report.closeness(i, j) = concept_prf(all[i], silver.concepts[j]).f1;
  if (!silver.relations.empty()) report.case2 = case2_scores(graph, silver, vartheta);
  return report;
}

namespace {
json scores_json(const Scores& s) { return {{"p", s.precision}, {"r", s.recall}, {"f", s.f1}}; }
}  // namespace

json to_json(const EvalReport& report) {
  json doc;
  doc["case1"] = scores_json(report.case1);
  if (report.case2) doc["case2"] = scores_json(*report.case2);
  json closeness = json::array();
  for (std::size_t i = 0; i < report.closeness.rows(); ++i) {
    const auto row = report.closeness.row(i);
    closeness.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["closeness"] = std::move(closeness);
  return doc;
}

SilverStandard silver_from_json(const json& doc, const std::set<std::string>& known_entities) {
  SilverStandard silver;
  std::vector<std::string> unresolved;
  try {
    for (const auto& concept_json : doc.at("concepts")) {
      EntitySet set;
      for (const auto& name_json : concept_json) {
        const auto name = name_json.get<std::string>();
        if (!known_entities.empty() && !known_entities.count(name) &&
            std::find(unresolved.begin(), unresolved.end(), name) == unresolved.end())
          unresolved.push_back(name);
        set.insert(name);
      }
      if (set.empty()) throw ParseError("silver concept " + std::to_string(silver.concepts.size()) + " is empty", 0);
      silver.concepts.push_back(std::move(set));
    }
    if (doc.contains("relations")) {
      for (const auto& r : doc["relations"]) {
        SilverRelation rel{r.at("from_index").get<std::size_t>(), r.at("to_index").get<std::size_t>(),
                           r.at("vector").get<std::vector<double>>()};
        if (rel.from >= silver.concepts.size() || rel.to >= silver.concepts.size() || rel.from == rel.to)
          throw ParseError("silver relation has invalid endpoints (" + std::to_string(rel.from) + "," +
                               std::to_string(rel.to) + ")",
                           0);
        silver.relations.push_back(std::move(rel));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid silver standard: ") + e.what(), 0);
  }
  if (silver.concepts.empty()) throw ParseError("silver standard has no concepts", 0);
  if (!unresolved.empty()) {
    std::string msg = "unresolved entity names in silver standard:";
    for (const auto& name : unresolved) msg += " '" + name + "'";
    throw Error(msg);
  }
  return silver;
}

SilverStandard load_silver(const std::string& path, const std::set<std::string>& known_entities) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open silver standard " + path);
  try {
    return silver_from_json(json::parse(in), known_entities);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0, path);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

}  // namespace chmm

#include "concept_hmm/conceptualize.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "concept_hmm/error.hpp"

namespace chmm {

using nlohmann::json;

Grid relevance_scores(const Posteriors& post) {
  const std::size_t k = post.gamma_first_concept.cols();
  Grid scores(k, k);
  for (std::size_t t = 0; t < post.length(); ++t)
    for (std::size_t p = 0; p < post.gamma_pair.cols(); ++p) {
      const ConceptPair cp = pair_at(k, p);
      scores(cp.first, cp.second) += post.gamma_pair(t, p);
    }
  return scores;
}

double default_theta(std::size_t T, std::size_t k) {
  return static_cast<double>(T) / (2.0 * static_cast<double>(pair_count(k)));
}

ConceptualGraph build_conceptual_graph(const ModelParams& params, const Posteriors& post, double theta,
                                       double vartheta) {
  const double T = static_cast<double>(post.length());
  if (!(theta > 0.0) || theta > T)
    throw std::invalid_argument("theta must satisfy 0 < theta <= T (T = " + std::to_string(post.length()) + ")");
  if (!(vartheta >= 0.0) || vartheta > 1.0) throw std::invalid_argument("vartheta must lie in [0, 1]");

  const std::size_t k = params.concepts(), n = params.entities();
  ConceptualGraph graph;
  graph.theta = theta;
  graph.vartheta = vartheta;

  auto name_of = [&](std::size_t e) {
    return e < params.entity_names().size() ? params.entity_names()[e] : "e" + std::to_string(e);
  };
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> ids;
    for (std::size_t e = 0; e < n; ++e)
      if (params.q(c, e) > 0.0 && params.q(c, e) >= vartheta) ids.push_back(e);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](std::size_t a, std::size_t b) { return params.q(c, a) > params.q(c, b); });
    ConceptNode node{c, {}};
    for (std::size_t e : ids) node.members.push_back({name_of(e), params.q(c, e)});
    graph.concepts.push_back(std::move(node));
  }

  const Grid scores = relevance_scores(post);
  for (std::size_t p = 0; p < params.pairs(); ++p) {
    const ConceptPair cp = pair_at(k, p);
    const double s = scores(cp.first, cp.second);
    if (s < theta) continue;
    const auto v = params.v(p);
    graph.relations.push_back({cp.first, cp.second, {v.begin(), v.end()}, s});
  }
  return graph;
}

ExportFormat parse_export_format(std::string_view name) {
  if (name == "dot") return ExportFormat::dot;
  if (name == "structured" || name == "json") return ExportFormat::structured;
  throw std::invalid_argument("unknown export format '" + std::string(name) + "'");
}

namespace {

std::string dot_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string to_dot(const ConceptualGraph& graph, std::size_t top_members) {
  std::ostringstream out;
  out << std::setprecision(4);
  out << "digraph conceptual_graph {\n";
  out << "  node [shape=box];\n";
  for (const auto& node : graph.concepts) {
    out << "  c" << node.id << " [label=\"C" << node.id;
    const std::size_t shown = std::min(top_members, node.members.size());
    for (std::size_t i = 0; i < shown; ++i)
      out << "\\n" << dot_escape(node.members[i].entity) << " (" << node.members[i].prob << ")";
    out << "\"];\n";
  }
  for (const auto& rel : graph.relations) {
    out << "  c" << rel.from << " -> c" << rel.to << " [label=\"S=" << rel.score << "\\nv=(";
    for (std::size_t x = 0; x < rel.vector.size(); ++x) out << (x ? ", " : "") << rel.vector[x];
    out << ")\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace

std::string export_graph(const ConceptualGraph& graph, ExportFormat format, std::size_t top_members) {
  switch (format) {
    case ExportFormat::dot:
      return to_dot(graph, top_members);
    case ExportFormat::structured:
      return to_json(graph).dump(2) + "\n";
  }
  throw std::invalid_argument("unknown export format");
}

json to_json(const ConceptualGraph& graph) {
  json doc;
  json concepts = json::array();
  for (const auto& node : graph.concepts) {
    json members = json::array();
    for (const auto& m : node.members) members.push_back({{"entity", m.entity}, {"prob", m.prob}});
    concepts.push_back({{"id", node.id}, {"members", std::move(members)}});
  }
  json relations = json::array();
  for (const auto& rel : graph.relations)
    relations.push_back({{"from", rel.from}, {"to", rel.to}, {"vector", rel.vector}, {"score", rel.score}});
  doc["concepts"] = std::move(concepts);
  doc["relations"] = std::move(relations);
  doc["theta"] = graph.theta;
  doc["vartheta"] = graph.vartheta;
  return doc;
}

ConceptualGraph graph_from_json(const json& doc) {
  try {
    ConceptualGraph graph;
    graph.theta = doc.at("theta").get<double>();
    graph.vartheta = doc.at("vartheta").get<double>();
    for (const auto& c : doc.at("concepts")) {
      ConceptNode node{c.at("id").get<std::size_t>(), {}};
      for (const auto& m : c.at("members"))
        node.members.push_back({m.at("entity").get<std::string>(), m.at("prob").get<double>()});
      graph.concepts.push_back(std::move(node));
    }
    for (const auto& r : doc.at("relations")) {
      graph.relations.push_back({r.at("from").get<std::size_t>(), r.at("to").get<std::size_t>(),
                                 r.at("vector").get<std::vector<double>>(), r.at("score").get<double>()});
    }
    return graph;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid conceptual graph: ") + e.what(), 0);
  }
}

ConceptualGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file " + path);
  try {
    return graph_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0, path);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

}  // namespace chmm

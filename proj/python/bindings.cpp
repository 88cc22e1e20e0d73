#include <optional>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "concept_hmm/conceptualize.hpp"
#include "concept_hmm/error.hpp"
#include "concept_hmm/evaluate.hpp"
#include "concept_hmm/generate.hpp"
#include "concept_hmm/ingest.hpp"
#include "concept_hmm/learning.hpp"

namespace py = pybind11;
using namespace chmm;

namespace {

Document document_from_text(const std::string& text, std::size_t label_dim, std::uint64_t label_seed) {
  std::istringstream in(text);
  return parse_triples(in, {label_dim, label_seed});
}

std::string document_to_text(const Document& doc) {
  std::ostringstream out;
  write_triples(out, doc);
  return out.str();
}

std::vector<std::vector<double>> grid_rows(const Grid& g) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < g.rows(); ++i) rows.emplace_back(g.row(i).begin(), g.row(i).end());
  return rows;
}

std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> state_tuples(const std::vector<StateIndex>& states) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> out;
  for (const auto& s : states) out.emplace_back(s.context, s.pair.first, s.pair.second);
  return out;
}

ConceptualGraph graph_for(const ModelParams& m, const Document& doc, std::optional<double> theta, double vartheta) {
  const Posteriors post = posteriors(m, doc);
  return build_conceptual_graph(m, post, theta.value_or(default_theta(doc.length(), m.concepts())), vartheta);
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "Concept-pair hidden Markov model for knowledge-graph conceptualization";

  auto base = py::register_exception<Error>(mod, "ConceptHmmError", PyExc_RuntimeError);
  py::register_exception<ParseError>(mod, "ParseError", base.ptr());
  py::register_exception<ZeroLikelihoodError>(mod, "ZeroLikelihoodError", base.ptr());

  py::class_<IngestOptions>(mod, "IngestOptions")
      .def(py::init([](std::size_t label_dim, std::uint64_t label_seed) { return IngestOptions{label_dim, label_seed}; }),
           py::arg("label_dim") = kDefaultLabelDim, py::arg("label_seed") = 0);

  py::class_<Document>(mod, "Document")
      .def_static("from_file", &read_triples, py::arg("path"), py::arg("options") = IngestOptions{})
      .def_static(
          "from_text",
          [](const std::string& text, std::size_t label_dim, std::uint64_t label_seed) {
            return document_from_text(text, label_dim, label_seed);
          },
          py::arg("text"), py::arg("label_dim") = kDefaultLabelDim, py::arg("label_seed") = 0)
      .def("__len__", &Document::length)
      .def_property_readonly("dim", &Document::dim)
      .def_readonly("entity_names", &Document::entity_names)
      .def_property_readonly("triples",
                             [](const Document& doc) {
                               std::vector<std::tuple<std::string, std::vector<double>, std::string>> out;
                               for (const auto& o : doc.observations)
                                 out.emplace_back(doc.entity_names[o.subject], o.relation, doc.entity_names[o.object]);
                               return out;
                             })
      .def("to_text", &document_to_text);

  py::class_<ModelParams>(mod, "Model")
      .def_static("load", &load_model, py::arg("path"))
      .def_static(
          "from_json", [](const std::string& text) { return model_from_json(nlohmann::json::parse(text)); },
          py::arg("text"))
      .def("to_json", [](const ModelParams& m) { return to_json(m).dump(2); })
      .def("save", [](const ModelParams& m, const std::string& path) { save_model(m, path); }, py::arg("path"))
      .def_property_readonly("contexts", &ModelParams::contexts)
      .def_property_readonly("concepts", &ModelParams::concepts)
      .def_property_readonly("entities", &ModelParams::entities)
      .def_property_readonly("dim", &ModelParams::dim)
      .def_property_readonly("sigma", &ModelParams::sigma)
      .def("validate",
           [](const ModelParams& m) {
             std::vector<std::pair<std::string, std::string>> out;
             for (const auto& v : validate(m)) out.emplace_back(v.location, v.message);
             return out;
           })
      .def("log_likelihood", &log_likelihood, py::arg("document"))
      .def(
          "sample",
          [](const ModelParams& m, std::size_t T, std::uint64_t seed) {
            auto sampled = sample_document(m, T, seed);
            return py::make_tuple(std::move(sampled.document), state_tuples(sampled.states));
          },
          py::arg("T"), py::arg("seed") = 0)
      .def(
          "relevance", [](const ModelParams& m, const Document& doc) { return grid_rows(relevance_scores(posteriors(m, doc))); },
          py::arg("document"))
      .def(
          "conceptual_graph",
          [](const ModelParams& m, const Document& doc, std::optional<double> theta, double vartheta) {
            return to_json(graph_for(m, doc, theta, vartheta)).dump(2);
          },
          py::arg("document"), py::arg("theta") = py::none(), py::arg("vartheta") = kDefaultVartheta)
      .def(
          "conceptual_graph_dot",
          [](const ModelParams& m, const Document& doc, std::optional<double> theta, double vartheta,
             std::size_t top_members) {
            return export_graph(graph_for(m, doc, theta, vartheta), ExportFormat::dot, top_members);
          },
          py::arg("document"), py::arg("theta") = py::none(), py::arg("vartheta") = kDefaultVartheta,
          py::arg("top_members") = kDefaultTopMembers);

  mod.def(
      "fit",
      [](const Document& doc, std::size_t b, std::size_t k, double sigma, double epsilon, std::size_t max_iters,
         std::size_t restarts, std::uint64_t seed, double smoothing_floor, std::size_t threads) {
        FitConfig config;
        config.epsilon = epsilon;
        config.max_iters = max_iters;
        config.restarts = restarts;
        config.seed = seed;
        config.smoothing_floor = smoothing_floor;
        config.threads = threads;
        FitResult result;
        {
          py::gil_scoped_release release;
          result = fit(doc, b, k, doc.dim(), sigma, config);
        }
        return py::make_tuple(std::move(result.params), fit_report(result).dump(2));
      },
      py::arg("document"), py::arg("b"), py::arg("k"), py::arg("sigma"), py::arg("epsilon") = 1e-4,
      py::arg("max_iters") = 500, py::arg("restarts") = 10, py::arg("seed") = 0, py::arg("smoothing_floor") = 1e-9,
      py::arg("threads") = 1);

  mod.def(
      "sequence_probability",
      [](const std::vector<double>& pi, const std::vector<std::vector<double>>& trans,
         const std::vector<std::size_t>& states) {
        std::vector<double> flat;
        for (const auto& row : trans) {
          if (row.size() != pi.size()) throw std::invalid_argument("transition matrix must be b x b");
          flat.insert(flat.end(), row.begin(), row.end());
        }
        return sequence_probability(pi, flat, states);
      },
      py::arg("pi"), py::arg("trans"), py::arg("states"));

  mod.def(
      "case1_scores",
      [](const std::vector<EntitySet>& algorithm, const std::vector<EntitySet>& silver) {
        const auto s = case1_scores(algorithm, silver).scores;
        return py::make_tuple(s.precision, s.recall, s.f1);
      },
      py::arg("algorithm"), py::arg("silver"));

  mod.def(
      "evaluate",
      [](const std::string& graph_json, const std::string& silver_json, std::optional<double> vartheta) {
        const auto graph = graph_from_json(nlohmann::json::parse(graph_json));
        const auto silver = silver_from_json(nlohmann::json::parse(silver_json));
        return to_json(evaluate(graph, silver, vartheta.value_or(graph.vartheta))).dump(2);
      },
      py::arg("graph_json"), py::arg("silver_json"), py::arg("vartheta") = py::none());
}

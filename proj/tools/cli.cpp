#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "concept_hmm/conceptualize.hpp"
#include "concept_hmm/error.hpp"
#include "concept_hmm/evaluate.hpp"
#include "concept_hmm/generate.hpp"
#include "concept_hmm/ingest.hpp"
#include "concept_hmm/learning.hpp"

namespace chmm::cli {

namespace {

// Flag values that parse but violate a documented range.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  if (p.extension() == ".json" || p.extension() == ".jsonl") p.replace_extension();
  return p.string() + suffix;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct FitOptions {
  std::string input, out, report;
  std::size_t b = 0, k = 0;
  double sigma = 0.0;
  std::size_t label_dim = kDefaultLabelDim;
  std::uint64_t label_seed = 0;
  FitConfig config;
  bool verbose = false;
};

struct GenerateOptions {
  std::string model, out, states_out;
  std::size_t T = 0;
  std::uint64_t seed = 0;
  bool with_states = false;
};

struct ExportOptions {
  std::string model, input, out, format = "all";
  std::size_t label_dim = kDefaultLabelDim;
  std::uint64_t label_seed = 0;
  std::optional<double> theta;
  double vartheta = kDefaultVartheta;
  std::size_t top_m = kDefaultTopMembers;
};

struct EvalOptions {
  std::string graph, silver, input, out;
  std::size_t label_dim = kDefaultLabelDim;
  std::optional<double> vartheta;
};

int cmd_fit(const FitOptions& opt, std::ostream& out) {
  const Document doc = read_triples(opt.input, {opt.label_dim, opt.label_seed});
  if (opt.k < 2) throw UsageError("--k must be at least 2");
  if (opt.b < 1) throw UsageError("--b must be at least 1");
  if (!(opt.sigma > 0.0)) throw UsageError("--sigma must be positive");
  FitConfig config = opt.config;
  try {
    check_config(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (opt.verbose) {
    config.on_iteration = [&out](std::size_t restart, std::size_t iter, double ll) {
      out << "restart " << restart << " iter " << iter << " loglik " << std::setprecision(10) << ll << '\n';
    };
  }
  const FitResult result = fit(doc, opt.b, opt.k, doc.dim(), opt.sigma, config);
  save_model(result.params, opt.out);
  const std::string report = opt.report.empty() ? sibling_path(opt.out, ".report.json") : opt.report;
  write_text(report, fit_report(result).dump(2) + "\n");
  out << "fit: T=" << doc.length() << " n=" << doc.entities() << " d=" << doc.dim() << " restart "
      << result.chosen_restart << " loglik " << std::setprecision(10) << result.loglik_trace.back() << " after "
      << result.iterations_used << " iterations\n";
  return kSuccess;
}

int cmd_generate(const GenerateOptions& opt, std::ostream& out) {
  if (opt.T < 1) throw UsageError("--T must be at least 1");
  const ModelParams params = load_model(opt.model);
  const SampledDocument sample = sample_document(params, opt.T, opt.seed);
  save_triples(sample.document, opt.out);
  if (opt.with_states) {
    const std::string states = opt.states_out.empty() ? sibling_path(opt.out, ".states.jsonl") : opt.states_out;
    save_states(sample.states, states);
  }
  out << "generate: wrote " << opt.T << " triples to " << opt.out << '\n';
  return kSuccess;
}

int cmd_export(const ExportOptions& opt, std::ostream& out) {
  std::optional<ExportFormat> only;  // empty = all formats
  if (opt.format != "all") {
    try {
      only = parse_export_format(opt.format);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (!(opt.vartheta >= 0.0) || opt.vartheta > 1.0) throw UsageError("--vartheta must lie in [0, 1]");
  const ModelParams params = load_model(opt.model);
  Document doc = read_triples(opt.input, {opt.label_dim, opt.label_seed});
  // Map document entity ids onto the model's entity dictionary by name.
  if (!params.entity_names().empty()) {
    std::map<std::string, std::size_t> index;
    for (std::size_t e = 0; e < params.entity_names().size(); ++e) index.emplace(params.entity_names()[e], e);
    for (auto& obs : doc.observations) {
      for (std::size_t* id : {&obs.subject, &obs.object}) {
        const auto it = index.find(doc.entity_names[*id]);
        if (it == index.end()) throw Error("entity '" + doc.entity_names[*id] + "' is not in the model");
        *id = it->second;
      }
    }
    doc.entity_names = params.entity_names();
  }
  const Posteriors post = posteriors(params, doc);
  const double theta = opt.theta.value_or(default_theta(doc.length(), params.concepts()));
  if (!(theta > 0.0) || theta > static_cast<double>(doc.length()))
    throw UsageError("--theta must satisfy 0 < theta <= T = " + std::to_string(doc.length()));
  const ConceptualGraph graph = build_conceptual_graph(params, post, theta, opt.vartheta);

  if (!only || *only == ExportFormat::dot)
    write_text(opt.out + ".dot", export_graph(graph, ExportFormat::dot, opt.top_m));
  if (!only || *only == ExportFormat::structured)
    write_text(opt.out + ".json", export_graph(graph, ExportFormat::structured, opt.top_m));
  out << "export: " << graph.relations.size() << " relevant relations (theta " << theta << ")\n";
  return kSuccess;
}

int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  const ConceptualGraph graph = load_graph(opt.graph);
  std::set<std::string> known;
  if (!opt.input.empty()) {
    const Document doc = read_triples(opt.input, {opt.label_dim, 0});
    known.insert(doc.entity_names.begin(), doc.entity_names.end());
  } else {
    for (const auto& node : graph.concepts)
      for (const auto& m : node.members) known.insert(m.entity);
  }
  const SilverStandard silver = load_silver(opt.silver, known);
  const double vartheta = opt.vartheta.value_or(graph.vartheta);
  if (!(vartheta >= 0.0) || vartheta > 1.0) throw UsageError("--vartheta must lie in [0, 1]");
  const EvalReport report = evaluate(graph, silver, vartheta);
  write_text(opt.out, to_json(report).dump(2) + "\n");
  out << std::setprecision(6) << "f1_case1 " << report.case1.f1 << '\n';
  if (report.case2) out << "f1_case2 " << report.case2->f1 << '\n';
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-pair HMM: fit, sample, conceptualize and evaluate knowledge-graph triples",
               "concept-hmm"};
  app.require_subcommand(1);

  FitOptions fit_opt;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a triple file with Baum-Welch");
  fit_cmd->add_option("--input", fit_opt.input, "Triple file (JSON lines)")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--b", fit_opt.b, "Number of context states")->required();
  fit_cmd->add_option("--k", fit_opt.k, "Number of concepts")->required();
  fit_cmd->add_option("--sigma", fit_opt.sigma, "Relation noise scale")->required();
  fit_cmd->add_option("--d", fit_opt.label_dim, "Dimension for r_label vectorization")->capture_default_str();
  fit_cmd->add_option("--label-seed", fit_opt.label_seed, "Seed for r_label vectorization")->capture_default_str();
  fit_cmd->add_option("--epsilon", fit_opt.config.epsilon, "Convergence threshold")->capture_default_str();
  fit_cmd->add_option("--max-iters", fit_opt.config.max_iters, "Iteration cap per restart")->capture_default_str();
  fit_cmd->add_option("--restarts", fit_opt.config.restarts, "Random restarts")->capture_default_str();
  fit_cmd->add_option("--seed", fit_opt.config.seed, "Master seed")->capture_default_str();
  fit_cmd->add_option("--smoothing-floor", fit_opt.config.smoothing_floor, "Probability floor")->capture_default_str();
  fit_cmd->add_option("--out", fit_opt.out, "Model file to write")->required();
  fit_cmd->add_option("--report", fit_opt.report, "Fit report (default: <out>.report.json)");
  fit_cmd->add_option("--threads", fit_opt.config.threads, "Worker threads for restarts (0 = all cores)")
      ->capture_default_str();
  fit_cmd->add_flag("--verbose", fit_opt.verbose, "Print per-iteration log-likelihood");

  GenerateOptions gen_opt;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a triple file from a model");
  gen_cmd->add_option("--model", gen_opt.model, "Model file")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--T", gen_opt.T, "Number of triples")->required();
  gen_cmd->add_option("--seed", gen_opt.seed, "Sampling seed")->capture_default_str();
  gen_cmd->add_option("--out", gen_opt.out, "Triple file to write")->required();
  gen_cmd->add_flag("--with-states", gen_opt.with_states, "Also write the hidden state sequence");
  gen_cmd->add_option("--states-out", gen_opt.states_out, "States file (default: <out>.states.jsonl)");

  ExportOptions exp_opt;
  auto* exp_cmd = app.add_subcommand("export", "Build and write the conceptual graph");
  exp_cmd->add_option("--model", exp_opt.model, "Model file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--input", exp_opt.input, "Triple file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--d", exp_opt.label_dim, "Dimension for r_label vectorization")->capture_default_str();
  exp_cmd->add_option("--label-seed", exp_opt.label_seed, "Seed for r_label vectorization")->capture_default_str();
  exp_cmd->add_option("--theta", exp_opt.theta, "Relevance threshold (default T / (2k(k-1)))");
  exp_cmd->add_option("--vartheta", exp_opt.vartheta, "Membership cutoff")->capture_default_str();
  exp_cmd->add_option("--top-m", exp_opt.top_m, "Entities shown per DOT node")->capture_default_str();
  exp_cmd->add_option("--format", exp_opt.format, "dot | structured | all")->capture_default_str();
  exp_cmd->add_option("--out", exp_opt.out, "Output path prefix (.dot / .json appended)")->required();

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("eval", "Score a conceptual graph against a silver standard");
  eval_cmd->add_option("--graph", eval_opt.graph, "Structured graph file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--silver", eval_opt.silver, "Silver standard file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--input", eval_opt.input, "Triple file whose entity dictionary resolves names");
  eval_cmd->add_option("--d", eval_opt.label_dim, "Dimension for r_label vectorization")->capture_default_str();
  eval_cmd->add_option("--vartheta", eval_opt.vartheta, "Membership cutoff (default: the graph's)");
  eval_cmd->add_option("--out", eval_opt.out, "Report file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_opt, out);
    if (*gen_cmd) return cmd_generate(gen_opt, out);
    if (*exp_cmd) return cmd_export(exp_opt, out);
    if (*eval_cmd) return cmd_eval(eval_opt, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace chmm::cli

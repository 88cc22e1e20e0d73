#include <doctest.h>

#include <filesystem>
#include <random>

#include <json.hpp>

#include "concept_hmm/generate.hpp"
#include "concept_hmm/ingest.hpp"
#include "support/cli_harness.hpp"
#include "support/oracles.hpp"

using namespace chmm;
using testing::run_cli;
using testing::slurp;

namespace {

// Writes a 60-triple document sampled from a small random model.
std::string sample_input(const testing::ScratchDir& dir) {
  std::mt19937_64 gen(17);
  const ModelParams m = testing::random_model(gen, 2, 3, 6, 2, 0.3);
  const std::string path = dir.file("doc.jsonl");
  save_triples(sample_document(m, 60, 3).document, path);
  return path;
}

std::vector<std::string> fit_args(const std::string& input, const std::string& out) {
  return {"fit", "--input", input, "--b", "2", "--k", "3", "--sigma", "0.3", "--seed", "7",
          "--restarts", "3", "--max-iters", "40", "--out", out};
}

}  // namespace

TEST_CASE("fit writes a model and report deterministically") {
  testing::ScratchDir dir("chmm-cli");
  const auto input = sample_input(dir);
  const auto before = slurp(input);
  const auto a = run_cli(fit_args(input, dir.file("a.json")));
  REQUIRE(a.code == 0);
  const auto b = run_cli(fit_args(input, dir.file("b.json")));
  REQUIRE(b.code == 0);
  CHECK(slurp(dir.file("a.json")) == slurp(dir.file("b.json")));
  CHECK(std::filesystem::exists(dir.file("a.report.json")));
  CHECK(slurp(input) == before);
  const auto report = nlohmann::json::parse(slurp(dir.file("a.report.json")));
  CHECK(report.at("restart_logliks").size() == 3);

  auto threaded = fit_args(input, dir.file("c.json"));
  threaded.insert(threaded.end(), {"--threads", "3"});
  REQUIRE(run_cli(threaded).code == 0);
  CHECK(slurp(dir.file("a.json")) == slurp(dir.file("c.json")));
}

TEST_CASE("fit usage errors") {
  testing::ScratchDir dir("chmm-cli");
  const auto input = sample_input(dir);
  CHECK(run_cli({"fit", "--input", input, "--b", "2", "--sigma", "0.3", "--out", dir.file("m.json")}).code == 2);
  CHECK(run_cli({"fit", "--input", input, "--b", "2", "--k", "1", "--sigma", "0.3", "--out", dir.file("m.json")})
            .code == 2);
  CHECK(run_cli({"fit", "--input", input, "--b", "2", "--k", "3", "--sigma", "0.3", "--epsilon", "-1", "--out",
                 dir.file("m.json")})
            .code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("fit reports malformed input as a runtime failure") {
  testing::ScratchDir dir("chmm-cli");
  testing::spit(dir.file("bad.jsonl"), "{\"s\":\"a\",\"r\":[1],\"o\":\"b\"}\n{oops\n");
  const auto r = run_cli({"fit", "--input", dir.file("bad.jsonl"), "--b", "1", "--k", "2", "--sigma", "0.5", "--out",
                          dir.file("m.json")});
  CHECK(r.code == 1);
  CHECK(r.err.find(":2:") != std::string::npos);
}

TEST_CASE("generate") {
  testing::ScratchDir dir("chmm-cli");
  const auto input = sample_input(dir);
  REQUIRE(run_cli(fit_args(input, dir.file("m.json"))).code == 0);
  REQUIRE(run_cli({"generate", "--model", dir.file("m.json"), "--T", "100", "--seed", "3", "--out",
                   dir.file("gen.jsonl"), "--with-states"})
              .code == 0);
  const auto count_lines = [](const std::string& text) { return std::count(text.begin(), text.end(), '\n'); };
  CHECK(count_lines(slurp(dir.file("gen.jsonl"))) == 100);
  CHECK(count_lines(slurp(dir.file("gen.states.jsonl"))) == 100);
  const Document back = read_triples(dir.file("gen.jsonl"));
  CHECK(back.length() == 100);
  CHECK(back.dim() == 2);
  CHECK(run_cli({"generate", "--model", dir.file("m.json"), "--T", "0", "--out", dir.file("x.jsonl")}).code == 2);
  testing::spit(dir.file("broken.json"), "{\"version\":\"concept-hmm/1\"}");
  CHECK(run_cli({"generate", "--model", dir.file("broken.json"), "--T", "5", "--out", dir.file("x.jsonl")}).code == 1);
}

TEST_CASE("export and eval") {
  testing::ScratchDir dir("chmm-cli");
  const auto input = sample_input(dir);
  REQUIRE(run_cli(fit_args(input, dir.file("m.json"))).code == 0);

  SUBCASE("defaults write both files") {
    REQUIRE(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--out", dir.file("g")}).code == 0);
    CHECK(slurp(dir.file("g.dot")).find("digraph") == 0);
    const auto graph = nlohmann::json::parse(slurp(dir.file("g.json")));
    CHECK(graph.at("theta").get<double>() == doctest::Approx(60.0 / 12.0));
  }
  SUBCASE("theta above T is rejected") {
    CHECK(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--theta", "61", "--out",
                   dir.file("g")})
              .code == 2);
    CHECK(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--format", "svg", "--out",
                   dir.file("g")})
              .code == 2);
  }
  SUBCASE("vartheta zero lists every positive-mass entity") {
    REQUIRE(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--vartheta", "0", "--format",
                     "structured", "--out", dir.file("g")})
                .code == 0);
    CHECK_FALSE(std::filesystem::exists(dir.file("g.dot")));
    const auto graph = nlohmann::json::parse(slurp(dir.file("g.json")));
    const auto model = nlohmann::json::parse(slurp(dir.file("m.json")));
    const auto& q = model.at("q");
    for (std::size_t c = 0; c < 3; ++c) {
      std::size_t positive = 0;
      for (const auto& x : q[c]) positive += x.get<double>() > 0.0;
      CHECK(graph["concepts"][c]["members"].size() == positive);
    }
  }
  SUBCASE("graph against itself as silver") {
    REQUIRE(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--theta", "1", "--out",
                     dir.file("g")})
                .code == 0);
    const auto graph = nlohmann::json::parse(slurp(dir.file("g.json")));
    nlohmann::json silver;
    silver["concepts"] = nlohmann::json::array();
    for (const auto& c : graph["concepts"]) {
      nlohmann::json names = nlohmann::json::array();
      for (const auto& m : c["members"]) names.push_back(m["entity"]);
      if (!names.empty()) silver["concepts"].push_back(names);
    }
    testing::spit(dir.file("silver_concepts.json"), silver.dump());
    const auto r1 = run_cli({"eval", "--graph", dir.file("g.json"), "--silver", dir.file("silver_concepts.json"),
                             "--input", input, "--out", dir.file("report1.json")});
    REQUIRE(r1.code == 0);
    CHECK(r1.out.find("f1_case1 1\n") != std::string::npos);
    CHECK(r1.out.find("f1_case2") == std::string::npos);
    CHECK_FALSE(nlohmann::json::parse(slurp(dir.file("report1.json"))).contains("case2"));

    // Every concept kept its members, so silver indices match concept ids.
    REQUIRE(silver["concepts"].size() == graph["concepts"].size());
    silver["relations"] = nlohmann::json::array();
    for (const auto& r : graph["relations"])
      silver["relations"].push_back({{"from_index", r["from"]}, {"to_index", r["to"]}, {"vector", r["vector"]}});
    REQUIRE_FALSE(silver["relations"].empty());
    testing::spit(dir.file("silver_full.json"), silver.dump());
    const auto r2 = run_cli({"eval", "--graph", dir.file("g.json"), "--silver", dir.file("silver_full.json"), "--out",
                             dir.file("report2.json")});
    REQUIRE(r2.code == 0);
    CHECK(r2.out.find("f1_case2 1\n") != std::string::npos);
  }
  SUBCASE("unknown silver entity") {
    REQUIRE(run_cli({"export", "--model", dir.file("m.json"), "--input", input, "--out", dir.file("g")}).code == 0);
    testing::spit(dir.file("silver.json"), R"({"concepts":[["ent0","no_such_entity"]]})");
    const auto r = run_cli({"eval", "--graph", dir.file("g.json"), "--silver", dir.file("silver.json"), "--input",
                            input, "--out", dir.file("report.json")});
    CHECK(r.code != 0);
    CHECK(r.err.find("no_such_entity") != std::string::npos);
  }
}

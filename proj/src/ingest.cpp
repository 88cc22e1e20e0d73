#include "concept_hmm/ingest.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "concept_hmm/error.hpp"
#include "concept_hmm/rng.hpp"

namespace chmm {

using nlohmann::json;

namespace {

// FNV-1a over the label bytes, then folded with the seed.
std::uint64_t label_hash(std::string_view label, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  std::uint64_t mix = seed ^ 0xD6E8FEB86659FD93ULL;
  return h ^ splitmix64(mix);
}

bool is_skippable(const std::string& line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

}  // namespace

std::vector<double> vectorize_relation(std::string_view label, std::size_t d, std::uint64_t seed) {
  if (label.empty()) throw std::invalid_argument("vectorize_relation: empty label");
  if (d == 0) throw std::invalid_argument("vectorize_relation: dimension must be positive");
  Rng rng(label_hash(label, seed));
  std::vector<double> out(d);
  double norm2 = 0.0;
  while (!(norm2 > 0.0)) {
    norm2 = 0.0;
    for (auto& x : out) {
      x = rng.normal();
      norm2 += x * x;
    }
  }
  const double norm = std::sqrt(norm2);
  for (auto& x : out) x /= norm;
  return out;
}

Document parse_triples(std::istream& in, const IngestOptions& options) {
  Document doc;
  std::unordered_map<std::string, std::size_t> ids;
  auto intern = [&](const std::string& name) {
    auto [it, inserted] = ids.try_emplace(name, doc.entity_names.size());
    if (inserted) doc.entity_names.push_back(name);
    return it->second;
  };

  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!rec.is_object()) throw ParseError("record must be a JSON object", line_no);
    for (const char* key : {"s", "o"}) {
      if (!rec.contains(key) || !rec[key].is_string())
        throw ParseError(std::string("missing string field \"") + key + "\"", line_no);
    }
    const bool has_vec = rec.contains("r");
    const bool has_label = rec.contains("r_label");
    if (has_vec == has_label)
      throw ParseError("record needs exactly one of \"r\" or \"r_label\"", line_no);

    Observation obs;
    if (has_vec) {
      const json& r = rec["r"];
      if (!r.is_array() || r.empty()) throw ParseError("\"r\" must be a nonempty array", line_no);
      obs.relation.reserve(r.size());
      for (const auto& x : r) {
        if (!x.is_number()) throw ParseError("\"r\" must contain only numbers", line_no);
        const double value = x.get<double>();
        if (!std::isfinite(value)) throw ParseError("\"r\" contains a non-finite value", line_no);
        obs.relation.push_back(value);
      }
    } else {
      if (!rec["r_label"].is_string()) throw ParseError("\"r_label\" must be a string", line_no);
      const auto label = rec["r_label"].get<std::string>();
      if (label.empty()) throw ParseError("empty \"r_label\"", line_no);
      obs.relation = vectorize_relation(label, options.label_dim, options.label_seed);
    }
    if (dim == 0) {
      dim = obs.relation.size();
    } else if (obs.relation.size() != dim) {
      throw ParseError("relation dimension " + std::to_string(obs.relation.size()) +
                           " does not match earlier dimension " + std::to_string(dim),
                       line_no);
    }
    obs.subject = intern(rec["s"].get<std::string>());
    obs.object = intern(rec["o"].get<std::string>());
    doc.observations.push_back(std::move(obs));
  }
  if (doc.observations.empty()) throw ParseError("triple file contains no records", 0);
  return doc;
}

Document read_triples(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open triple file " + path);
  try {
    return parse_triples(in, options);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

void write_triples(std::ostream& out, const Document& doc) {
  for (const auto& obs : doc.observations) {
    json rec;
    rec["s"] = doc.entity_names.at(obs.subject);
    rec["r"] = obs.relation;
    rec["o"] = doc.entity_names.at(obs.object);
    out << rec.dump() << '\n';
  }
}

void save_triples(const Document& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write triple file " + path);
  write_triples(out, doc);
}

}  // namespace chmm

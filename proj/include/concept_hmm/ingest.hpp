#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace chmm {

/// One sentence of a document: (subject entity, relation vector, object entity).
struct Observation {
  std::size_t subject = 0;
  std::vector<double> relation;
  std::size_t object = 0;
};

struct Document {
  std::vector<Observation> observations;
  std::vector<std::string> entity_names;  // id -> name, first-appearance order

  std::size_t length() const noexcept { return observations.size(); }
  std::size_t entities() const noexcept { return entity_names.size(); }
  std::size_t dim() const noexcept {
    return observations.empty() ? 0 : observations.front().relation.size();
  }
};

inline constexpr std::size_t kDefaultLabelDim = 4;

struct IngestOptions {
  std::size_t label_dim = kDefaultLabelDim;  // d used when vectorizing r_label
  std::uint64_t label_seed = 0;
};

/// Reads the line-delimited triple format:
///   {"s": "...", "o": "...", "r": [..]}  or  {"s": "...", "o": "...", "r_label": "..."}
/// Blank lines and lines starting with '#' are skipped. Throws ParseError with
/// the offending 1-based line number.
Document parse_triples(std::istream& in, const IngestOptions& options = {});
Document read_triples(const std::string& path, const IngestOptions& options = {});

/// Writes one {"s","r","o"} record per observation.
void write_triples(std::ostream& out, const Document& doc);
void save_triples(const Document& doc, const std::string& path);

/// Deterministic unit vector for a relation label: a seeded 64-bit hash of the
/// label drives a generator producing d standard normals, which are then
/// normalized to unit Euclidean length.
std::vector<double> vectorize_relation(std::string_view label, std::size_t d, std::uint64_t seed);

}  // namespace chmm

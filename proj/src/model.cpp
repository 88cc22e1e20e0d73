#include "concept_hmm/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "concept_hmm/ingest.hpp"

namespace chmm {

using nlohmann::json;

std::size_t pair_count(std::size_t k) { return k < 2 ? 0 : k * (k - 1); }

std::size_t pair_index(std::size_t k, ConceptPair pair) {
  if (pair.first >= k || pair.second >= k || pair.first == pair.second)
    throw std::out_of_range("invalid concept pair (" + std::to_string(pair.first) + "," +
                            std::to_string(pair.second) + ")");
  return pair.first * (k - 1) + (pair.second < pair.first ? pair.second : pair.second - 1);
}

ConceptPair pair_at(std::size_t k, std::size_t index) {
  if (index >= pair_count(k)) throw std::out_of_range("pair index out of range");
  const std::size_t first = index / (k - 1);
  const std::size_t rest = index % (k - 1);
  return {first, rest < first ? rest : rest + 1};
}

ModelParams::ModelParams(std::size_t b, std::size_t k, std::size_t n, std::size_t d, double sigma)
    : b_(b), k_(k), n_(n), d_(d), sigma_(sigma),
      pi_(b, 0.0), trans_(b * b, 0.0), f_(b * pair_count(k), 0.0), q_(k * n, 0.0),
      v_(pair_count(k) * d, 0.0) {
  if (b == 0 || k < 2 || n == 0 || d == 0)
    throw std::invalid_argument("ModelParams requires b>=1, k>=2, n>=1, d>=1");
  if (!(sigma > 0.0)) throw std::invalid_argument("ModelParams requires sigma > 0");
}

double ModelParams::gauss_norm() const {
  return std::pow(2.0 * std::numbers::pi * sigma_ * sigma_, -0.5 * static_cast<double>(d_));
}

double ModelParams::gauss_rate() const { return 1.0 / (2.0 * sigma_ * sigma_); }

std::size_t flatten(const ModelParams& params, StateIndex s) {
  if (s.context >= params.contexts()) throw std::out_of_range("state context out of range");
  return s.context * params.pairs() + pair_index(params.concepts(), s.pair);
}

StateIndex unflatten(const ModelParams& params, std::size_t flat) {
  if (flat >= params.states()) throw std::out_of_range("flat state index out of range");
  return {flat / params.pairs(), pair_at(params.concepts(), flat % params.pairs())};
}

namespace {

void check_distribution(std::span<const double> row, const std::string& where,
                        std::vector<Violation>& out) {
  double total = 0.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double p = row[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      out.push_back({where + "[" + std::to_string(i) + "]",
                     "probability " + std::to_string(p) + " outside [0,1]"});
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "row sums to " << total << ", expected 1";
    out.push_back({where, msg.str()});
  }
}

}  // namespace

std::vector<Violation> validate(const ModelParams& params) {
  std::vector<Violation> out;
  const std::size_t b = params.contexts(), k = params.concepts(), n = params.entities();
  const std::size_t d = params.dim(), P = params.pairs();
  if (b == 0) out.push_back({"b", "must be positive"});
  if (k < 2) out.push_back({"k", "must be at least 2"});
  if (n == 0) out.push_back({"n", "must be positive"});
  if (d == 0) out.push_back({"d", "must be positive"});
  if (!(params.sigma() > 0.0) || !std::isfinite(params.sigma()))
    out.push_back({"sigma", "must be positive and finite"});
  if (params.pi_data().size() != b || params.trans_data().size() != b * b ||
      params.f_data().size() != b * P || params.q_data().size() != k * n ||
      params.v_data().size() != P * d) {
    out.push_back({"shape", "stored tensor sizes do not match (b,k,n,d)"});
    return out;
  }
  if (!params.entity_names().empty() && params.entity_names().size() != n)
    out.push_back({"entity_names", "expected " + std::to_string(n) + " names"});
  if (!out.empty()) return out;

  check_distribution(params.pi_data(), "pi", out);
  for (std::size_t i = 0; i < b; ++i)
    check_distribution(params.trans_data().subspan(i * b, b), "trans[" + std::to_string(i) + "]", out);
  for (std::size_t j = 0; j < b; ++j)
    check_distribution(params.f_data().subspan(j * P, P), "f[" + std::to_string(j) + "]", out);
  for (std::size_t c = 0; c < k; ++c)
    check_distribution(params.q_data().subspan(c * n, n), "q[" + std::to_string(c) + "]", out);
  for (std::size_t i = 0; i < params.v_data().size(); ++i) {
    if (!std::isfinite(params.v_data()[i])) {
      const ConceptPair cp = pair_at(k, i / d);
      out.push_back({"v[" + std::to_string(cp.first) + "][" + std::to_string(cp.second) + "]",
                     "non-finite component"});
    }
  }
  return out;
}

double relation_density(const ModelParams& params, std::size_t pair, std::span<const double> r) {
  if (r.size() != params.dim())
    throw std::invalid_argument("relation vector has dimension " + std::to_string(r.size()) +
                                ", model expects " + std::to_string(params.dim()));
  const auto mean = params.v(pair);
  double sq = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = r[i] - mean[i];
    sq += diff * diff;
  }
  return params.gauss_norm() * std::exp(-params.gauss_rate() * sq);
}

double hmm_initial(const ModelParams& params, StateIndex s) {
  const std::size_t flat = flatten(params, s);
  return params.pi(s.context) * params.f(s.context, flat % params.pairs());
}

double hmm_transition(const ModelParams& params, StateIndex from, StateIndex to) {
  flatten(params, from);
  const std::size_t flat_to = flatten(params, to);
  return params.trans(from.context, to.context) * params.f(to.context, flat_to % params.pairs());
}

double hmm_emission(const ModelParams& params, StateIndex s, const Observation& obs) {
  const std::size_t pair = flatten(params, s) % params.pairs();
  if (obs.subject >= params.entities() || obs.object >= params.entities())
    throw std::out_of_range("observation entity id out of range");
  if (obs.relation.size() != params.dim())
    throw std::invalid_argument("relation vector dimension mismatch");
  const double membership = params.q(s.pair.first, obs.subject) * params.q(s.pair.second, obs.object);
  if (membership == 0.0) return 0.0;
  return membership * relation_density(params, pair, obs.relation);
}

double max_abs_difference(const ModelParams& a, const ModelParams& b) {
  auto linf = [](std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("parameter shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
  };
  return std::max({linf(a.pi_data(), b.pi_data()), linf(a.trans_data(), b.trans_data()),
                   linf(a.f_data(), b.f_data()), linf(a.q_data(), b.q_data()),
                   linf(a.v_data(), b.v_data())});
}

// ---------------------------------------------------------------------------
// Model file

json to_json(const ModelParams& params) {
  const std::size_t b = params.contexts(), k = params.concepts(), n = params.entities();
  json doc;
  doc["version"] = kModelFormatVersion;
  doc["b"] = b;
  doc["k"] = k;
  doc["n"] = n;
  doc["d"] = params.dim();
  doc["sigma"] = params.sigma();
  doc["pi"] = std::vector<double>(params.pi_data().begin(), params.pi_data().end());
  json trans = json::array();
  for (std::size_t i = 0; i < b; ++i) {
    auto row = params.trans_data().subspan(i * b, b);
    trans.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["trans"] = std::move(trans);
  json f = json::array();
  for (std::size_t j = 0; j < b; ++j) {
    json block = json::array();
    for (std::size_t l1 = 0; l1 < k; ++l1) {
      json row = json::array();
      for (std::size_t l2 = 0; l2 < k; ++l2)
        row.push_back(l1 == l2 ? json(nullptr) : json(params.f(j, pair_index(k, {l1, l2}))));
      block.push_back(std::move(row));
    }
    f.push_back(std::move(block));
  }
  doc["f"] = std::move(f);
  json q = json::array();
  for (std::size_t c = 0; c < k; ++c) {
    auto row = params.q_data().subspan(c * n, n);
    q.push_back(std::vector<double>(row.begin(), row.end()));
  }
  doc["q"] = std::move(q);
  json v = json::array();
  for (std::size_t l1 = 0; l1 < k; ++l1) {
    json row = json::array();
    for (std::size_t l2 = 0; l2 < k; ++l2) {
      if (l1 == l2) {
        row.push_back(nullptr);
      } else {
        auto vec = params.v(pair_index(k, {l1, l2}));
        row.push_back(std::vector<double>(vec.begin(), vec.end()));
      }
    }
    v.push_back(std::move(row));
  }
  doc["v"] = std::move(v);
  doc["entity_names"] = params.entity_names();
  return doc;
}

namespace {

// Structural checks shared by validate(json) and model_from_json.
std::vector<Violation> structural_violations(const json& doc) {
  std::vector<Violation> out;
  if (!doc.is_object()) {
    out.push_back({"<root>", "model file must be a JSON object"});
    return out;
  }
  if (!doc.contains("version") || doc["version"] != kModelFormatVersion)
    out.push_back({"version", std::string("expected \"") + kModelFormatVersion + "\""});
  for (const char* key : {"b", "k", "n", "d"}) {
    if (!doc.contains(key) || !doc[key].is_number_unsigned())
      out.push_back({key, "missing or not a nonnegative integer"});
  }
  if (!doc.contains("sigma") || !doc["sigma"].is_number())
    out.push_back({"sigma", "missing or not a number"});
  for (const char* key : {"pi", "trans", "f", "q", "v"}) {
    if (!doc.contains(key) || !doc[key].is_array()) out.push_back({key, "missing or not an array"});
  }
  if (!out.empty()) return out;

  const std::size_t b = doc["b"], k = doc["k"], n = doc["n"], d = doc["d"];
  auto is_number_array = [](const json& a, std::size_t len) {
    if (!a.is_array() || a.size() != len) return false;
    for (const auto& x : a)
      if (!x.is_number()) return false;
    return true;
  };
  if (!is_number_array(doc["pi"], b)) out.push_back({"pi", "expected " + std::to_string(b) + " numbers"});
  const json& trans = doc["trans"];
  if (trans.size() != b) out.push_back({"trans", "expected " + std::to_string(b) + " rows"});
  for (std::size_t i = 0; i < std::min(b, trans.size()); ++i)
    if (!is_number_array(trans[i], b))
      out.push_back({"trans[" + std::to_string(i) + "]", "expected " + std::to_string(b) + " numbers"});
  const json& q = doc["q"];
  if (q.size() != k) out.push_back({"q", "expected " + std::to_string(k) + " rows"});
  for (std::size_t c = 0; c < std::min(k, q.size()); ++c)
    if (!is_number_array(q[c], n))
      out.push_back({"q[" + std::to_string(c) + "]", "expected " + std::to_string(n) + " numbers"});

  const json& f = doc["f"];
  if (f.size() != b) out.push_back({"f", "expected " + std::to_string(b) + " blocks"});
  for (std::size_t j = 0; j < std::min(b, f.size()); ++j) {
    const json& block = f[j];
    if (!block.is_array() || block.size() != k) {
      out.push_back({"f[" + std::to_string(j) + "]", "expected k x k"});
      continue;
    }
    for (std::size_t l1 = 0; l1 < k; ++l1) {
      const json& row = block[l1];
      if (!row.is_array() || row.size() != k) {
        out.push_back({"f[" + std::to_string(j) + "][" + std::to_string(l1) + "]", "expected k entries"});
        continue;
      }
      for (std::size_t l2 = 0; l2 < k; ++l2) {
        const std::string where =
            "f[" + std::to_string(j) + "][" + std::to_string(l1) + "][" + std::to_string(l2) + "]";
        if (l1 == l2) {
          if (!row[l2].is_null()) out.push_back({where, "diagonal concept pair must be null"});
        } else if (!row[l2].is_number()) {
          out.push_back({where, "expected a number"});
        }
      }
    }
  }

  const json& v = doc["v"];
  if (v.size() != k) out.push_back({"v", "expected k x k"});
  for (std::size_t l1 = 0; l1 < std::min(k, v.size()); ++l1) {
    const json& row = v[l1];
    if (!row.is_array() || row.size() != k) {
      out.push_back({"v[" + std::to_string(l1) + "]", "expected k entries"});
      continue;
    }
    for (std::size_t l2 = 0; l2 < k; ++l2) {
      const std::string where = "v[" + std::to_string(l1) + "][" + std::to_string(l2) + "]";
      if (l1 == l2) {
        if (!row[l2].is_null()) out.push_back({where, "diagonal concept pair must be null"});
      } else if (!is_number_array(row[l2], d)) {
        out.push_back({where, "expected " + std::to_string(d) + " numbers"});
      }
    }
  }
  if (doc.contains("entity_names")) {
    const json& names = doc["entity_names"];
    bool ok = names.is_array() && (names.empty() || names.size() == n);
    if (ok)
      for (const auto& s : names) ok = ok && s.is_string();
    if (!ok) out.push_back({"entity_names", "expected n strings"});
  }
  if (b == 0 || k < 2 || n == 0 || d == 0)
    out.push_back({"shape", "requires b>=1, k>=2, n>=1, d>=1"});
  return out;
}

ModelParams convert(const json& doc) {
  const std::size_t b = doc["b"], k = doc["k"], n = doc["n"], d = doc["d"];
  ModelParams params(b, k, n, d, doc["sigma"].get<double>());
  for (std::size_t j = 0; j < b; ++j) params.pi(j) = doc["pi"][j].get<double>();
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < b; ++j) params.trans(i, j) = doc["trans"][i][j].get<double>();
  for (std::size_t j = 0; j < b; ++j)
    for (std::size_t p = 0; p < params.pairs(); ++p) {
      const ConceptPair cp = pair_at(k, p);
      params.f(j, p) = doc["f"][j][cp.first][cp.second].get<double>();
      auto vec = params.v(p);
      for (std::size_t x = 0; x < d; ++x) vec[x] = doc["v"][cp.first][cp.second][x].get<double>();
    }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t e = 0; e < n; ++e) params.q(c, e) = doc["q"][c][e].get<double>();
  if (doc.contains("entity_names"))
    params.entity_names() = doc["entity_names"].get<std::vector<std::string>>();
  return params;
}

std::string describe(const std::vector<Violation>& violations) {
  std::string msg = "invalid model:";
  for (const auto& v : violations) msg += "\n  " + v.location + ": " + v.message;
  return msg;
}

}  // namespace

std::vector<Violation> validate(const json& model_file) {
  auto out = structural_violations(model_file);
  if (!out.empty()) return out;
  return validate(convert(model_file));
}

ModelParams model_from_json(const json& doc) {
  auto problems = structural_violations(doc);
  if (!problems.empty()) throw ParseError(describe(problems), 0);
  ModelParams params = convert(doc);
  problems = validate(params);
  if (!problems.empty()) throw ParseError(describe(problems), 0);
  return params;
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), 0, path);
  }
  try {
    return model_from_json(doc);
  } catch (const ParseError& e) {
    throw e.in_file(path);
  }
}

void save_model(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path);
  out << to_json(params).dump(2) << '\n';
}

}  // namespace chmm

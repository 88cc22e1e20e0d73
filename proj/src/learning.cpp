#include "concept_hmm/learning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "concept_hmm/error.hpp"
#include "concept_hmm/rng.hpp"

namespace chmm {

void check_config(const FitConfig& config) {
  if (!(config.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (config.max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (config.restarts < 1) throw std::invalid_argument("restarts must be at least 1");
  if (!(config.smoothing_floor >= 0.0)) throw std::invalid_argument("smoothing_floor must be nonnegative");
}

std::vector<std::optional<double>> FitResult::restart_logliks() const {
  std::vector<std::optional<double>> out;
  out.reserve(restarts.size());
  for (const auto& r : restarts) out.push_back(r.final_log_likelihood);
  return out;
}

namespace {

void renormalize(std::span<double> row) {
  double total = 0.0;
  for (double x : row) total += x;
  for (double& x : row) x /= total;
}

}  // namespace

ModelParams reestimate(const ModelParams& params, const Document& doc, const Posteriors& post,
                       double smoothing_floor) {
  const std::size_t T = doc.length(), b = params.contexts(), k = params.concepts();
  const std::size_t n = params.entities(), d = params.dim(), P = params.pairs();
  if (post.gamma.rows() != T || post.gamma.cols() != params.states() ||
      post.gamma_context.cols() != b || post.gamma_pair.cols() != P ||
      post.gamma_first_concept.cols() != k || post.xi_context.size() + 1 != T)
    throw std::invalid_argument("posteriors do not match the model and document");

  ModelParams next = params;

  for (std::size_t j = 0; j < b; ++j) next.pi(j) = post.gamma_context(0, j);
  renormalize({&next.pi(0), b});

  // Context transitions.
  for (std::size_t j1 = 0; j1 < b; ++j1) {
    double den = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t) den += post.gamma_context(t, j1);
    if (den < kDegenerateMass) continue;
    for (std::size_t j2 = 0; j2 < b; ++j2) {
      double num = 0.0;
      for (std::size_t t = 0; t + 1 < T; ++t) num += post.xi_context[t](j1, j2);
      next.trans(j1, j2) = num / den;
    }
    renormalize({&next.trans(j1, 0), b});
  }

  // Pair generation.
  std::vector<double> pair_mass(P, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t p = 0; p < P; ++p) pair_mass[p] += post.gamma_pair(t, p);
  for (std::size_t j = 0; j < b; ++j) {
    double den = 0.0;
    for (std::size_t t = 0; t < T; ++t) den += post.gamma_context(t, j);
    if (den < kDegenerateMass) continue;
    for (std::size_t p = 0; p < P; ++p) {
      double num = 0.0;
      for (std::size_t t = 0; t < T; ++t) num += post.gamma(t, j * P + p);
      next.f(j, p) = num / den;
      if (pair_mass[p] < kDegenerateMass && smoothing_floor > 0.0) next.f(j, p) = smoothing_floor;
    }
    renormalize({&next.f(j, 0), P});
  }

  // Memberships pool first-slot and second-slot occurrences.
  for (std::size_t c = 0; c < k; ++c) {
    double den = 0.0;
    std::vector<double> num(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const Observation& obs = doc.observations[t];
      const double first = post.gamma_first_concept(t, c);
      const double second = post.gamma_second_concept(t, c);
      num[obs.subject] += first;
      num[obs.object] += second;
      den += first + second;
    }
    if (den < kDegenerateMass) continue;
    for (std::size_t e = 0; e < n; ++e) next.q(c, e) = std::max(num[e] / den, smoothing_floor);
    renormalize({&next.q(c, 0), n});
  }

  // Relation vectors: posterior-weighted mean of observed r_t.
  for (std::size_t p = 0; p < P; ++p) {
    if (pair_mass[p] < kDegenerateMass) continue;
    std::vector<double> acc(d, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      const double g = post.gamma_pair(t, p);
      const auto& r = doc.observations[t].relation;
      for (std::size_t x = 0; x < d; ++x) acc[x] += g * r[x];
    }
    auto v = next.v(p);
    for (std::size_t x = 0; x < d; ++x) v[x] = acc[x] / pair_mass[p];
  }
  return next;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t x = 0; x < a.size(); ++x) sq += (a[x] - b[x]) * (a[x] - b[x]);
  return sq;
}

// Observation indices whose relation vectors seed the pair means. The first is
// uniform; each later one is drawn with weight equal to its squared distance
// from the nearest index already chosen, so separated clusters all get a seed.
std::vector<std::size_t> spread_anchors(const Document& doc, std::size_t count, Rng& rng) {
  const std::size_t T = doc.length();
  std::vector<std::size_t> anchors{rng.uniform_index(T)};
  std::vector<double> nearest(T);
  for (std::size_t t = 0; t < T; ++t)
    nearest[t] = squared_distance(doc.observations[t].relation, doc.observations[anchors[0]].relation);
  while (anchors.size() < count) {
    double total = 0.0;
    for (double w : nearest) total += w;
    const std::size_t next = total > 0.0 ? rng.categorical(nearest) : rng.uniform_index(T);
    anchors.push_back(next);
    for (std::size_t t = 0; t < T; ++t)
      nearest[t] = std::min(nearest[t], squared_distance(doc.observations[t].relation, doc.observations[next].relation));
  }
  return anchors;
}

double profile_score(std::span<const double> counts) {
  double total = 0.0, score = 0.0;
  for (double c : counts) total += c;
  for (double c : counts)
    if (c > 0.0) score += c * std::log(c / total);
  return score;
}

// Chooses which concept pair receives each anchor. Observations are grouped by
// nearest anchor; a pair (l1, l2) pools its group's subjects into concept l1
// and objects into concept l2. Starting from a random bijection, pairwise swaps
// are accepted while they raise the pooled multinomial log-likelihood, which
// favours groups sharing subject entities landing on pairs sharing l1.
std::vector<std::size_t> assign_anchors_to_pairs(const Document& doc, const std::vector<std::size_t>& anchors,
                                                 std::size_t k, std::size_t n, Rng& rng) {
  const std::size_t P = anchors.size();
  Grid subjects(P, n), objects(P, n);
  for (const auto& obs : doc.observations) {
    std::size_t best = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < P; ++a) {
      const double sq = squared_distance(obs.relation, doc.observations[anchors[a]].relation);
      if (sq < best_sq) {
        best_sq = sq;
        best = a;
      }
    }
    subjects(best, obs.subject) += 1.0;
    objects(best, obs.object) += 1.0;
  }

  std::vector<std::size_t> slot(P);
  for (std::size_t a = 0; a < P; ++a) slot[a] = a;
  for (std::size_t a = P; a > 1; --a) std::swap(slot[a - 1], slot[rng.uniform_index(a)]);

  Grid pooled(k, n);
  auto apply = [&](std::size_t a, double sign) {
    const ConceptPair cp = pair_at(k, slot[a]);
    for (std::size_t e = 0; e < n; ++e) {
      pooled(cp.first, e) += sign * subjects(a, e);
      pooled(cp.second, e) += sign * objects(a, e);
    }
  };
  for (std::size_t a = 0; a < P; ++a) apply(a, 1.0);
  auto touched_score = [&](std::size_t a1, std::size_t a2) {
    std::vector<std::size_t> concepts;
    for (std::size_t a : {a1, a2}) {
      const ConceptPair cp = pair_at(k, slot[a]);
      concepts.push_back(cp.first);
      concepts.push_back(cp.second);
    }
    std::sort(concepts.begin(), concepts.end());
    concepts.erase(std::unique(concepts.begin(), concepts.end()), concepts.end());
    double score = 0.0;
    for (std::size_t c : concepts) score += profile_score(pooled.row(c));
    return score;
  };
  auto swap_slots = [&](std::size_t a1, std::size_t a2) {
    apply(a1, -1.0);
    apply(a2, -1.0);
    std::swap(slot[a1], slot[a2]);
    apply(a1, 1.0);
    apply(a2, 1.0);
  };

  for (bool improved = true; improved;) {
    improved = false;
    for (std::size_t a1 = 0; a1 < P; ++a1) {
      for (std::size_t a2 = a1 + 1; a2 < P; ++a2) {
        // Both slot layouts touch the same set of concepts.
        const double before = touched_score(a1, a2);
        swap_slots(a1, a2);
        if (touched_score(a1, a2) > before + 1e-9) {
          improved = true;
        } else {
          swap_slots(a1, a2);
        }
      }
    }
  }
  return slot;
}

}  // namespace

ModelParams init_random(std::size_t b, std::size_t k, std::size_t n, std::size_t d, double sigma,
                        const Document& doc, std::uint64_t seed) {
  if (doc.length() == 0) throw std::invalid_argument("init_random: empty document");
  if (doc.dim() != d) throw std::invalid_argument("init_random: document dimension differs from d");
  if (n < doc.entities()) throw std::invalid_argument("init_random: n is smaller than the document's entity count");
  ModelParams params(b, k, n, d, sigma);
  Rng rng(seed);
  auto fill = [&](std::span<double> row) {
    const auto sample = rng.dirichlet_flat(row.size());
    std::copy(sample.begin(), sample.end(), row.begin());
  };
  fill({&params.pi(0), b});
  for (std::size_t j = 0; j < b; ++j) fill({&params.trans(j, 0), b});
  for (std::size_t j = 0; j < b; ++j) fill({&params.f(j, 0), params.pairs()});
  for (std::size_t c = 0; c < k; ++c) fill({&params.q(c, 0), n});
  const auto anchors = spread_anchors(doc, params.pairs(), rng);
  const auto slot = assign_anchors_to_pairs(doc, anchors, k, n, rng);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const auto& r = doc.observations[anchors[a]].relation;
    auto v = params.v(slot[a]);
    for (std::size_t x = 0; x < d; ++x) v[x] = r[x] + (rng.uniform() - 0.5) * sigma;
  }
  params.entity_names() = doc.entity_names;
  params.entity_names().resize(n);
  for (std::size_t e = doc.entities(); e < n; ++e) params.entity_names()[e] = "e" + std::to_string(e);
  return params;
}

namespace {

ModelParams floored(const ModelParams& params, double floor) {
  ModelParams out = params;
  for (std::size_t c = 0; c < out.concepts(); ++c) {
    for (std::size_t e = 0; e < out.entities(); ++e) out.q(c, e) = std::max(out.q(c, e), floor);
    renormalize({&out.q(c, 0), out.entities()});
  }
  for (std::size_t j = 0; j < out.contexts(); ++j) {
    for (std::size_t p = 0; p < out.pairs(); ++p) out.f(j, p) = std::max(out.f(j, p), floor);
    renormalize({&out.f(j, 0), out.pairs()});
  }
  return out;
}

struct RestartRun {
  RestartOutcome outcome;
  std::optional<ModelParams> params;
};

RestartRun run_restart(const Document& doc, std::size_t b, std::size_t k, std::size_t d, double sigma,
                       const FitConfig& config, std::size_t restart, std::mutex& callback_mutex) {
  RestartRun run;
  ModelParams current = init_random(b, k, doc.entities(), d, sigma, doc, config.seed + restart);
  Posteriors post;
  try {
    post = posteriors(current, doc);
  } catch (const ZeroLikelihoodError&) {
    current = floored(current, std::max(config.smoothing_floor, 1e-9));
    try {
      post = posteriors(current, doc);
    } catch (const ZeroLikelihoodError& e) {
      run.outcome.note = std::string("discarded: ") + e.what();
      return run;
    }
  }
  run.outcome.trace.push_back(post.log_likelihood);

  while (run.outcome.iterations < config.max_iters) {
    ModelParams next = reestimate(current, doc, post, config.smoothing_floor);
    Posteriors next_post;
    try {
      next_post = posteriors(next, doc);
    } catch (const ZeroLikelihoodError& e) {
      run.outcome.note = std::string("stopped early: ") + e.what();
      break;
    }
    ++run.outcome.iterations;
    const double change = max_abs_difference(next, current);
    current = std::move(next);
    post = std::move(next_post);
    run.outcome.trace.push_back(post.log_likelihood);
    if (config.on_iteration) {
      std::lock_guard lock(callback_mutex);
      config.on_iteration(restart, run.outcome.iterations, post.log_likelihood);
    }
    if (change < config.epsilon) break;
  }
  run.outcome.final_log_likelihood = run.outcome.trace.back();
  run.params = std::move(current);
  return run;
}

}  // namespace

FitResult fit(const Document& doc, std::size_t b, std::size_t k, std::size_t d, double sigma,
              const FitConfig& config) {
  check_config(config);
  if (doc.length() == 0) throw std::invalid_argument("fit: empty document");
  if (doc.dim() != d)
    throw std::invalid_argument("fit: document relation dimension " + std::to_string(doc.dim()) +
                                " does not match d = " + std::to_string(d));

  std::vector<RestartRun> runs(config.restarts);
  std::mutex callback_mutex;
  std::size_t workers = config.threads == 0 ? std::thread::hardware_concurrency() : config.threads;
  workers = std::clamp<std::size_t>(workers, 1, config.restarts);
  if (workers == 1) {
    for (std::size_t r = 0; r < config.restarts; ++r)
      runs[r] = run_restart(doc, b, k, d, sigma, config, r, callback_mutex);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t r; (r = next.fetch_add(1)) < config.restarts;)
            runs[r] = run_restart(doc, b, k, d, sigma, config, r, callback_mutex);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  FitResult result;
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& ll = runs[r].outcome.final_log_likelihood;
    if (ll && (!best || *ll > *runs[*best].outcome.final_log_likelihood)) best = r;
    result.restarts.push_back(runs[r].outcome);
  }
  if (!best) throw Error("fit: every restart was discarded (zero likelihood under the initial model)");
  result.chosen_restart = *best;
  result.params = std::move(*runs[*best].params);
  result.loglik_trace = runs[*best].outcome.trace;
  result.iterations_used = runs[*best].outcome.iterations;
  return result;
}

nlohmann::json fit_report(const FitResult& result) {
  using nlohmann::json;
  json report;
  json logliks = json::array();
  json notes = json::array();
  json iterations = json::array();
  for (const auto& r : result.restarts) {
    logliks.push_back(r.final_log_likelihood ? json(*r.final_log_likelihood) : json(nullptr));
    notes.push_back(r.note);
    iterations.push_back(r.iterations);
  }
  report["restart_logliks"] = std::move(logliks);
  report["restart_iterations"] = std::move(iterations);
  report["restart_notes"] = std::move(notes);
  report["chosen_restart"] = result.chosen_restart;
  report["iterations"] = result.iterations_used;
  report["trace"] = result.loglik_trace;
  return report;
}

}  // namespace chmm

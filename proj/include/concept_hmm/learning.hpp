#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "concept_hmm/inference.hpp"

namespace chmm {

inline constexpr double kDegenerateMass = 1e-12;

struct FitConfig {
  double epsilon = 1e-4;          // stop when L-inf parameter change < epsilon
  std::size_t max_iters = 500;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;         // restart r uses seed + r
  double smoothing_floor = 1e-9;
  std::size_t threads = 1;        // restarts run concurrently; 0 = hardware concurrency

  // Called after every iteration with (restart, iteration, log-likelihood).
  // Invocations are serialized even when restarts run concurrently.
  std::function<void(std::size_t, std::size_t, double)> on_iteration;
};

void check_config(const FitConfig& config);

struct RestartOutcome {
  std::optional<double> final_log_likelihood;  // empty when the restart was discarded
  std::vector<double> trace;
  std::size_t iterations = 0;
  std::string note;  // reason for discarding, if any
};

struct FitResult {
  ModelParams params;                   // best restart
  std::vector<double> loglik_trace;     // best restart, one entry per evaluated parameter set
  std::size_t iterations_used = 0;      // reestimation steps in the best restart
  std::size_t chosen_restart = 0;
  std::vector<RestartOutcome> restarts;

  std::vector<std::optional<double>> restart_logliks() const;
};

/// One Baum-Welch update. Posteriors must come from (params, doc).
///
/// Degenerate denominators (total posterior mass below kDegenerateMass) carry
/// the previous row over: context rows of trans and f, concept rows of q, and
/// relation vectors of unused pairs. Pairs with no mass get smoothing_floor in
/// every f row, and q entries are floored at smoothing_floor, before rows are
/// renormalized.
ModelParams reestimate(const ModelParams& params, const Document& doc, const Posteriors& post,
                       double smoothing_floor = 1e-9);

/// Random starting point: flat-Dirichlet rows for pi, trans, f and q. Each
/// relation vector is an observed r_t plus uniform jitter in [-sigma/2, sigma/2]
/// per coordinate. The r_t are drawn with squared-distance weighting so that
/// distinct relation clusters are seeded, and are placed on concept pairs so
/// that groups sharing subject or object entities share a concept.
ModelParams init_random(std::size_t b, std::size_t k, std::size_t n, std::size_t d, double sigma,
                        const Document& doc, std::uint64_t seed);

/// Baum-Welch with random restarts; the restart with the highest final
/// log-likelihood wins. Throws Error if every restart is discarded.
FitResult fit(const Document& doc, std::size_t b, std::size_t k, std::size_t d, double sigma,
              const FitConfig& config);

nlohmann::json fit_report(const FitResult& result);

}  // namespace chmm

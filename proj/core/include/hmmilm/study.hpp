#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmmilm/archive.hpp"
#include "hmmilm/diagnostics.hpp"
#include "hmmilm/gibbs.hpp"
#include "hmmilm/simulator.hpp"

namespace hmmilm {

/// A completed fit with its summaries and wall-clock time.
struct FitReport {
  PosteriorArchive archive;
  ConvergenceReport convergence;
  std::vector<ParamSummary> params;
  std::optional<WaicResult> waic_marginal;
  std::optional<WaicResult> waic_conditional;
  double seconds = 0.0;
};

/// Runs gibbs_run and summarises it. WAIC fields stay empty when fewer than two draws
/// were retained or a chain failed.
FitReport fit_and_summarize(const FitProblem& problem, const MCMCConfig& cfg,
                            const ConvergenceThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Recovery study

struct StudyConfig {
  SimConfig sim;  // sim.seed is ignored; seeds derive from `seed`
  PriorSet priors = default_priors();
  MCMCConfig mcmc;
  ConvergenceThresholds thresholds;
  int replications = 20;
  std::uint64_t seed = 1;
  /// Concurrent replicate jobs; 0 means the hardware count. HMMILM_THREADS caps it.
  int threads = 0;
};

struct RecoveryRow {
  int replicate = 0;
  ParamId param{};
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  bool covered = false;
  bool converged = false;
};

struct CoverageRow {
  ParamId param{};
  double coverage_pct = 0.0;
  double avg_ci_width = 0.0;
  int fits = 0;
};

struct MedianRow {
  ParamId param{};
  double median_of_medians = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;
  std::vector<CoverageRow> coverage;
  std::vector<MedianRow> medians;
  int replications = 0;
  int converged = 0;
  std::vector<double> seconds;                          // per replicate, in order
  std::vector<std::pair<int, std::string>> failures;    // replicate, reason
};

/// Simulate-and-fit replicates. Replicate r simulates with Rng::derive(seed, 2r) and fits
/// with Rng::derive(seed, 2r + 1). Fit failures are recorded, not thrown; coverage and
/// medians use converged replicates only.
RecoveryReport replicate_study(const StudyConfig& cfg);

/// Same as replicate_study; rejects an empty request with ConfigError.
RecoveryReport run_recovery_study(const StudyConfig& cfg);

/// Coverage and median tables from per-replicate rows.
void aggregate_recovery(RecoveryReport& report);

/// Acceptance band [lo, hi] for a Binomial(n, p) count: lo is the largest k with
/// P(X < k) <= (1 - level) / 2 and hi the smallest k with P(X > k) <= (1 - level) / 2.
std::pair<int, int> binomial_band(int n, double p, double level = 0.95);

// ---------------------------------------------------------------------------
// Neighbourhood order selection

struct OrderRow {
  int order = 0;
  double waic = 0.0;
  bool converged = false;
};

struct NeighborhoodSelection {
  std::vector<OrderRow> rows;
  int selected = 0;
};

/// Stopping rule: walk the increasing orders and stop at the first step whose WAIC
/// decrease is below `threshold`; the order before that step is selected.
int select_neighborhood_order(const std::vector<int>& orders, const std::vector<double>& waics,
                              double threshold = 5.0);

/// Fits the queen neighbourhoods in `orders` (increasing) lazily until the rule stops.
NeighborhoodSelection run_neighborhood_selection(const GridSpec& grid, const ModelSpec& model,
                                                 const ObservationMatrix& data, const PriorSet& priors,
                                                 const MCMCConfig& cfg, const std::vector<int>& orders,
                                                 double threshold = 5.0,
                                                 const ConvergenceThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Variant ladder

struct Variant {
  std::string name;
  ModelSpec model;
  PriorSet priors = default_priors();
  FixedParams fixed;
  StateConstraints constraints;
  /// Replaces the shared population (e.g. a different neighbourhood order).
  std::optional<Population> population;
};

struct VariantRow {
  std::string name;
  std::optional<WaicResult> waic_marginal;
  std::optional<WaicResult> waic_conditional;
  std::vector<ParamSummary> params;
  std::optional<IntervalSummary> r0;
  bool converged = false;
  double seconds = 0.0;
};

/// Fits each variant to the same data; variant k uses chain seeds from
/// Rng::derive(base.seed, k).
std::vector<VariantRow> run_variant_ladder(const Population& population, const ObservationMatrix& data,
                                           const std::vector<Variant>& variants, const MCMCConfig& base,
                                           const ConvergenceThresholds& thresholds = {});

// ---------------------------------------------------------------------------
// Kernel curve

struct CurvePoint {
  double distance = 0.0;
  IntervalSummary probability;
};

/// 1 - exp(-alpha - beta(d)) over a grid of distances (orders for the neighbourhood
/// order kernel), summarised over the given draws.
std::vector<CurvePoint> kernel_curve(const std::vector<ModelParams>& draws, const KernelSpec& kernel,
                                     const std::vector<double>& distances);

}  // namespace hmmilm

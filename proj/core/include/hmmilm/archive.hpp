#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmmilm/diagnostics.hpp"
#include "hmmilm/model.hpp"

namespace hmmilm {

/// Everything one chain keeps after burn-in.
struct ChainArchive {
  /// Parameter draws for every iteration burn_in+1..iterations.
  std::vector<ModelParams> draws;
  /// Iterations at which states, functionals and WAIC terms were accumulated.
  std::vector<int> retained;
  /// functionals[f][r] for retained draw r.
  std::vector<std::vector<double>> functionals;
  /// log p(y, S | v) at every retained draw.
  std::vector<double> log_joint;
  /// Visit counts of state s at (i, t), laid out as (i * (T + 1) + t) * 3 + s.
  std::vector<std::uint32_t> state_counts;
  WaicAccumulator waic_marginal;
  WaicAccumulator waic_conditional;
  /// Set when the chain aborted; describes iteration, individual and parameters.
  std::optional<std::string> failure;
  int afss_singular_fallbacks = 0;
  /// Post burn-in acceptance rate of every random-walk-updated parameter.
  std::vector<std::pair<ParamId, double>> rw_acceptance;
};

struct PosteriorArchive {
  int individuals = 0;
  int horizon = 0;
  int iterations = 0;
  int burn_in = 0;
  int thin = 1;
  /// Parameters that were sampled (active and not fixed).
  std::array<bool, kParamCount> sampled{};
  /// Parameters that exist in the model (sampled or fixed).
  std::array<bool, kParamCount> active{};
  std::vector<std::string> functional_names;
  std::vector<ChainArchive> chains;

  bool failed() const noexcept {
    for (const auto& c : chains)
      if (c.failure) return true;
    return false;
  }
  /// Per-chain draw sequences of one parameter.
  std::vector<std::vector<double>> parameter_chains(ParamId id) const;
  /// All chains' draws of one parameter, concatenated in chain order.
  std::vector<double> pooled(ParamId id) const;
  /// Retained draws merged across chains in chain order.
  WaicAccumulator merged_waic(bool marginal) const;
};

/// Posterior state probabilities plus functional summaries.
struct StateSummary {
  int individuals = 0;
  int horizon = 0;
  /// P(S_it = s | y) laid out as (i * (T + 1) + t).
  std::vector<std::array<double, 3>> probs;
  std::vector<std::pair<std::string, IntervalSummary>> functionals;
};

/// Frequency estimates over every retained draw of every chain. Throws InputError when
/// nothing was retained.
StateSummary summarize_states(const PosteriorArchive& archive);

/// Gelman-Rubin and pooled ESS of every sampled parameter.
ConvergenceReport convergence_report(const PosteriorArchive& archive, const ConvergenceThresholds& thresholds = {});

struct ParamSummary {
  ParamId param{};
  IntervalSummary interval;
};
/// Median and central 95% interval of every active parameter.
std::vector<ParamSummary> parameter_summaries(const PosteriorArchive& archive);

}  // namespace hmmilm

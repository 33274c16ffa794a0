#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmmilm/model.hpp"

namespace hmmilm {

struct WaicResult {
  double lppd = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
  /// Per-cell log mean density and sample variance of the log density.
  std::vector<double> pointwise_lppd;
  std::vector<double> pointwise_var;
  /// Cells where at least one draw gave a zero density.
  int neg_inf_cells = 0;
  long long draws = 0;
};

/// Streaming per-cell accumulator of pointwise log densities over retained draws: a running
/// log-sum-exp for the log mean and Welford updates for the variance.
class WaicAccumulator {
 public:
  WaicAccumulator() = default;
  explicit WaicAccumulator(std::size_t cells);

  void add(std::span<const double> log_density);
  /// Pools the draws of another accumulator with the same cells.
  void merge(const WaicAccumulator& other);

  std::size_t cells() const noexcept { return max_.size(); }
  long long draws() const noexcept { return n_; }

  double log_mean(std::size_t cell) const noexcept;
  /// Sample variance (n - 1 denominator); +inf for cells that saw a zero density.
  double variance(std::size_t cell) const noexcept;
  bool saw_neg_inf(std::size_t cell) const noexcept { return neg_inf_[cell] != 0; }

 private:
  long long n_ = 0;
  std::vector<double> max_;
  std::vector<double> scaled_sum_;
  std::vector<long long> finite_;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::vector<std::uint8_t> neg_inf_;
};

/// lppd = sum log mean, p_waic = sum sample variance, waic = -2 (lppd - p_waic).
/// Throws InputError with fewer than two draws.
WaicResult waic_assemble(const WaicAccumulator& acc);

/// Convenience for tests and small post-processing: draws[q][cell].
WaicResult waic_from_draws(const std::vector<std::vector<double>>& draws);

/// A statistic together with a flag raised for degenerate input.
struct FlaggedValue {
  double value = 0.0;
  bool flagged = false;
};

/// Potential scale reduction sqrt(((n-1)/n W + B/n) / W), floored at 1. Zero within-chain
/// variance gives +inf with the flag set. Needs at least two chains of equal length >= 2.
FlaggedValue gelman_rubin(const std::vector<std::vector<double>>& chains);

/// n / (1 + 2 sum rho_k) with Geyer's initial positive sequence truncation, clipped to
/// (0, n]. A constant sequence gives 0 with the flag set. Needs n >= 10.
FlaggedValue effective_sample_size(std::span<const double> draws);

/// Sum of per-chain effective sample sizes.
FlaggedValue effective_sample_size(const std::vector<std::vector<double>>& chains);

/// Linear-interpolation sample quantile (type 7); sorts a copy.
double quantile(std::vector<double> values, double p);

struct IntervalSummary {
  double median = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
};
IntervalSummary summarize_interval(const std::vector<double>& values);

/// Basic reproduction number (N - 1) beta m; only defined for homogeneous mixing.
double r0(const KernelSpec& kernel, double beta, double m, int n);

struct ConvergenceThresholds {
  double max_gelman_rubin = 1.05;
  double min_ess = 1000.0;
};

struct ParamConvergence {
  ParamId param{};
  double gelman_rubin = 0.0;
  double ess = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::vector<ParamConvergence> params;
  bool pass = false;
};

}  // namespace hmmilm

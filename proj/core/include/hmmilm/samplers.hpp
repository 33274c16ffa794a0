#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "hmmilm/error.hpp"
#include "hmmilm/model.hpp"
#include "hmmilm/rng.hpp"

namespace hmmilm {

struct Bounds {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Interval bookkeeping of one slice update.
struct SliceStats {
  int expansions = 0;
  int contractions = 0;
};

/// One stepping-out and shrinkage slice update (Neal 2003) of a univariate log density.
/// The interval is clipped to `bounds`; at most `max_steps` expansions are made in total.
template <class F>
double slice_univariate(F&& log_target, double current, double width, Bounds bounds, Rng& rng,
                        SliceStats* stats = nullptr, int max_steps = 256) {
  const double f0 = log_target(current);
  if (!(f0 > -std::numeric_limits<double>::infinity()) || std::isnan(f0))
    throw InputError("slice sampler started outside the support of its target");
  if (!(width > 0.0) || !std::isfinite(width)) throw InputError("slice width must be positive and finite");
  const double level = f0 - rng.exponential();

  double left = current - width * rng.uniform();
  double right = left + width;
  int j = static_cast<int>(std::floor(max_steps * rng.uniform()));
  int k = max_steps - 1 - j;
  int expansions = 0;
  while (j > 0 && left > bounds.lower && log_target(left) > level) {
    left -= width;
    --j;
    ++expansions;
  }
  while (k > 0 && right < bounds.upper && log_target(right) > level) {
    right += width;
    --k;
    ++expansions;
  }
  left = std::max(left, bounds.lower);
  right = std::min(right, bounds.upper);

  int contractions = 0;
  for (;;) {
    const double x = left + (right - left) * rng.uniform();
    if (log_target(x) > level) {
      if (stats) {
        stats->expansions += expansions;
        stats->contractions += contractions;
      }
      return x;
    }
    ++contractions;
    if (x < current)
      left = x;
    else
      right = x;
    if (contractions > 10000 || !(right > left)) throw Error("slice shrinkage failed to find an acceptable point");
  }
}

/// Slice sampling along the eigenvectors of the running posterior covariance
/// (automated factor slice sampling). Directions and widths adapt only while `adapt` is
/// passed as true; the caller stops passing it after burn-in.
class FactorSliceSampler {
 public:
  FactorSliceSampler(std::vector<double> initial_widths, std::vector<Bounds> bounds, int adapt_interval = 100);

  using Target = std::function<double(std::span<const double>)>;

  /// One sweep over all factor directions. `x` is updated in place.
  void update(const Target& log_target, std::vector<double>& x, Rng& rng, bool adapt);

  int dimension() const noexcept { return static_cast<int>(base_.size()); }
  /// Column k is direction k; stored row-major as dim x dim.
  const std::vector<double>& directions() const noexcept { return directions_; }
  std::vector<double> widths() const;
  /// Number of refreshes that found a singular covariance and kept the coordinate axes.
  int singular_fallbacks() const noexcept { return singular_fallbacks_; }
  int refreshes() const noexcept { return refreshes_; }
  /// Hash of every adaptive quantity.
  std::uint64_t adaptation_fingerprint() const noexcept;

 private:
  void record(const std::vector<double>& x);
  void adapt_now();

  std::vector<double> directions_;
  std::vector<double> base_;
  std::vector<double> scale_;
  std::vector<Bounds> bounds_;
  int interval_;
  int since_adapt_ = 0;
  std::vector<int> expansions_;
  // Running covariance of every draw seen while adapting.
  long long count_ = 0;
  std::vector<double> mean_;
  std::vector<double> comoment_;
  bool eigen_basis_ = false;
  int singular_fallbacks_ = 0;
  int refreshes_ = 0;
};

/// Gaussian random-walk Metropolis step with a scale adapted toward an acceptance target.
class AdaptiveRandomWalk {
 public:
  explicit AdaptiveRandomWalk(double initial_scale, double target_rate = 0.44, int batch = 100);

  /// Returns the new state; `current_log_target` is updated to its log density.
  template <class F>
  double step(F&& log_target, double current, double& current_log_target, Rng& rng, bool adapt) {
    const double proposal = current + scale_ * rng.normal();
    const double lp = log_target(proposal);
    const double log_u = std::log(rng.uniform());
    const bool accept = lp > -std::numeric_limits<double>::infinity() && log_u < lp - current_log_target;
    ++proposals_;
    if (accept) ++accepted_;
    if (adapt) {
      ++batch_proposals_;
      if (accept) ++batch_accepted_;
      if (batch_proposals_ == batch_) adapt_now();
    }
    if (!accept) return current;
    current_log_target = lp;
    return proposal;
  }

  double scale() const noexcept { return scale_; }
  double acceptance_rate() const noexcept { return proposals_ ? static_cast<double>(accepted_) / proposals_ : 0.0; }
  void reset_counters() noexcept { proposals_ = accepted_ = 0; }
  std::uint64_t adaptation_fingerprint() const noexcept;

 private:
  void adapt_now();

  double scale_;
  double target_;
  int batch_;
  int batches_ = 0;
  int batch_proposals_ = 0;
  int batch_accepted_ = 0;
  long long proposals_ = 0;
  long long accepted_ = 0;
};

/// Which individuals keep their initial rows for the whole run.
struct StateConstraints {
  /// Undetected individuals stay susceptible throughout.
  bool no_undetected_infections = false;
  /// Further individuals whose rows are fixed at their initial values.
  std::vector<int> pinned;
};

/// Deterministic starting states with p(y, S) > 0 under the observation model. Throws
/// DataError when the data admit no valid path under the initial distribution.
StateMatrix initialize_states(const ObservationMatrix& y, const ModelSpec& model);
/// As above; with `zero_background` (alpha fixed at 0) every infection must also have an
/// infectious neighbour at the previous step, otherwise the individual starts infectious.
StateMatrix initialize_states(const ObservationMatrix& y, const ModelSpec& model, const Population& pop,
                              bool zero_background);

/// Which entries of v are free parameters of the model.
std::array<bool, kParamCount> active_parameters(const ModelSpec& model);

/// Draws every active, non-fixed parameter from its prior; fixed values are copied and
/// inactive ones left NaN.
ModelParams initialize_params(const ModelSpec& model, const PriorSet& priors,
                              const std::array<std::optional<double>, kParamCount>& fixed, Rng& rng);

}  // namespace hmmilm

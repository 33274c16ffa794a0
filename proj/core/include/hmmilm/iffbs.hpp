#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hmmilm/model.hpp"
#include "hmmilm/population.hpp"

namespace hmmilm {

class Rng;

/// Infection pressure P(j, t) = sum over infectious k in NE(j) at time t of beta_{k->j}.
///
/// Pair classes that the kernel cannot tell apart are merged into weight classes. When
/// there are few of them, integer counts of infectious neighbours per (j, t, class) are
/// kept and every pressure is evaluated as sum_k count_k * w_k in class order, so an
/// incrementally maintained value is bit-identical to a recomputation. Otherwise the
/// pressure is a sum over NE(j) in id order read straight from the state matrix.
class PressureCache {
 public:
  PressureCache(const Population& pop, const ModelSpec& model, const StateMatrix& states);

  /// Recomputes the kernel weights and every cached pressure.
  void set_beta(std::span<const double> beta);
  /// Recomputes counts and pressures from the state matrix.
  void rebuild();
  /// Call after row i of the state matrix has been overwritten; `old_row` is the previous content.
  void apply_row_change(int i, std::span<const DiseaseState> old_row);

  double pressure(int j, int t) const noexcept { return pressure_[index(j, t)]; }
  /// Pressure on j at t with neighbour i (pair class `cls` of i in NE(j)) forced
  /// non-infectious (first) and infectious (second). `i_infectious` is i's current status.
  /// Derived from the cached total, so it agrees with a direct sum up to rounding.
  std::pair<double, double> pressure_pair(int j, int t, int i, int cls, bool i_infectious) const noexcept;

  bool dense() const noexcept { return dense_; }
  int weight_class_count() const noexcept { return static_cast<int>(representatives_.size()); }
  int weight_class(int pair_class) const noexcept { return class_map_[pair_class]; }
  const PairClass& representative(int wc) const noexcept { return representatives_[wc]; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Appends the non-zero (weight class, count) pairs of infectious neighbours of j at t.
  void infectious_profile(int j, int t, std::vector<std::pair<int, int>>& out) const;

 private:
  std::size_t index(int j, int t) const noexcept { return static_cast<std::size_t>(j) * width_ + t; }
  const int* counts(int j, int t) const noexcept { return counts_.data() + index(j, t) * classes_; }
  int* counts(int j, int t) noexcept { return counts_.data() + index(j, t) * classes_; }
  double from_counts(const int* c) const noexcept;
  double direct_sum(int j, int t, int skip, bool skip_infectious) const noexcept;

  const Population& pop_;
  const ModelSpec& model_;
  const StateMatrix& states_;
  std::size_t width_ = 0;
  std::size_t classes_ = 0;
  bool dense_ = true;
  std::vector<int> class_map_;
  std::vector<PairClass> representatives_;
  std::vector<double> weights_;
  std::vector<int> counts_;
  std::vector<double> pressure_;
};

/// Per-individual tables of the forward filter, reused across sweeps.
struct FilterWorkspace {
  int horizon = 0;
  /// log P(S_it = s | y_i(0:t), S_(-i)(0:t+1)), t = 0..T.
  std::vector<std::array<double, 3>> log_filtered;
  /// log predictive probabilities, t = 1..T (row 0 holds the log initial distribution).
  std::vector<std::array<double, 3>> log_predictive;
  /// Observation log densities per state, t = 0..T.
  std::vector<std::array<double, 3>> log_obs;
  /// Log forward products for the step t -> t+1 with S_it non-infectious / infectious.
  std::vector<std::array<double, 2>> log_forward;
  /// Infection hazard of the individual for the step into t (entry 0 unused).
  std::vector<double> hazard;

  void resize(int T);
};

/// Individual forward-filtering backward-sampling for one chain. Owns the chain's state
/// matrix and pressure cache; neither copyable nor movable because the cache refers to
/// the state matrix.
class IffbsEngine {
 public:
  IffbsEngine(const Population& pop, const ModelSpec& model, const ObservationMatrix& y, StateMatrix initial,
              const ModelParams& v);
  IffbsEngine(const IffbsEngine&) = delete;
  IffbsEngine& operator=(const IffbsEngine&) = delete;

  void set_params(const ModelParams& v);
  const ModelParams& params() const noexcept { return v_; }
  const StateMatrix& states() const noexcept { return states_; }
  void set_states(const StateMatrix& states);
  /// Overwrites row i and refreshes the dependent cache entries.
  void set_row(int i, std::span<const DiseaseState> row);
  const PressureCache& cache() const noexcept { return cache_; }
  int horizon() const noexcept { return states_.horizon(); }

  /// (log product with S_it non-infectious, log product with S_it infectious) over the
  /// transitions t -> t+1 of every j with i in NE(j). Valid for t = 0..T-1.
  std::pair<double, double> forward_products(int i, int t) const noexcept;

  void filter_initial(int i, FilterWorkspace& ws) const;
  void filter_step(int i, int t, FilterWorkspace& ws) const;
  void filter_final(int i, FilterWorkspace& ws) const;
  /// Runs the whole forward pass for individual i.
  void filter(int i, FilterWorkspace& ws) const;

  /// Draws a path from the filtered tables into `path` (length T+1).
  void backward_sample(int i, const FilterWorkspace& ws, Rng& rng, std::span<DiseaseState> path) const;
  /// log probability that the backward sampler returns `path`.
  double log_path_probability(int i, const FilterWorkspace& ws, std::span<const DiseaseState> path) const;

  /// Replaces row i with an exact draw from its full conditional.
  void update_individual(int i, FilterWorkspace& ws, Rng& rng);
  /// Ascending-id sweep over every individual whose `pinned` flag is zero.
  void sweep(std::span<const std::uint8_t> pinned, FilterWorkspace& ws, Rng& rng);

  /// log p(y_it | S_(-i)(0:t), y_i(0:t-1), v) for t = 1..T written to out[t-1]; runs the filter.
  void marginal_pointwise(int i, FilterWorkspace& ws, std::span<double> out) const;

 private:
  std::array<double, 3> predict(const FilterWorkspace& ws, int t) const noexcept;
  void normalize_row(int i, int t, std::array<double, 3>& row) const;

  const Population& pop_;
  const ModelSpec& model_;
  const ObservationMatrix& y_;
  StateMatrix states_;
  ModelParams v_;
  double log_stay_ = 0.0;
  double log_remove_ = 0.0;
  PressureCache cache_;
  bool weights_ready_ = false;
  std::vector<DiseaseState> scratch_;
};

}  // namespace hmmilm

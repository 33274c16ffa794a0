#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmmilm/population.hpp"

namespace hmmilm {

class Rng;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum class DiseaseState : std::uint8_t { Susceptible = 1, Infectious = 2, Removed = 3 };

constexpr int index_of(DiseaseState s) noexcept { return static_cast<int>(s) - 1; }
constexpr DiseaseState state_at(int k) noexcept { return static_cast<DiseaseState>(k + 1); }

/// Latent disease states for N individuals over t = 0..T.
class StateMatrix {
 public:
  StateMatrix() = default;
  StateMatrix(int n, int horizon, DiseaseState fill = DiseaseState::Susceptible);

  int individuals() const noexcept { return n_; }
  int horizon() const noexcept { return horizon_; }

  DiseaseState operator()(int i, int t) const noexcept { return data_[offset(i, t)]; }
  DiseaseState& operator()(int i, int t) noexcept { return data_[offset(i, t)]; }

  std::span<const DiseaseState> row(int i) const noexcept { return {data_.data() + offset(i, 0), width()}; }
  std::span<DiseaseState> row(int i) noexcept { return {data_.data() + offset(i, 0), width()}; }

  /// No 2->1, 3->1, 3->2 or 1->3 steps along row i.
  bool row_is_monotone(int i) const noexcept;
  bool is_monotone() const noexcept;

  bool operator==(const StateMatrix&) const = default;

 private:
  std::size_t width() const noexcept { return static_cast<std::size_t>(horizon_) + 1; }
  std::size_t offset(int i, int t) const noexcept { return static_cast<std::size_t>(i) * width() + t; }

  int n_ = 0;
  int horizon_ = 0;
  std::vector<DiseaseState> data_;
};

/// Binary detections y_it for t = 0..T; y_i0 is always 0.
class ObservationMatrix {
 public:
  ObservationMatrix() = default;
  ObservationMatrix(int n, int horizon);

  int individuals() const noexcept { return n_; }
  int horizon() const noexcept { return horizon_; }

  bool operator()(int i, int t) const noexcept { return data_[offset(i, t)] != 0; }
  /// Sets y_it. Setting y_i0 = 1 is rejected.
  void set(int i, int t, bool detected);

  /// Any detection strictly before t.
  bool previously_detected(int i, int t) const noexcept { return first_[i] < t; }
  /// First detection time, if the individual was ever detected.
  std::optional<int> first_detection(int i) const noexcept {
    return first_[i] <= horizon_ ? std::optional<int>(first_[i]) : std::nullopt;
  }
  int detection_count(int i) const noexcept;
  int total_detections() const noexcept;

  bool operator==(const ObservationMatrix&) const = default;

 private:
  std::size_t offset(int i, int t) const noexcept {
    return static_cast<std::size_t>(i) * (static_cast<std::size_t>(horizon_) + 1) + t;
  }
  void refresh_first(int i) noexcept;

  int n_ = 0;
  int horizon_ = 0;
  std::vector<std::uint8_t> data_;
  std::vector<int> first_;
};

// ---------------------------------------------------------------------------
// Parameters

enum class ParamId : int { Theta = 0, M = 1, Alpha = 2, Beta0 = 3, Beta1 = 4, Beta2 = 5 };
inline constexpr int kParamCount = 6;
inline constexpr std::array<ParamId, kParamCount> kAllParams{ParamId::Theta, ParamId::M,     ParamId::Alpha,
                                                             ParamId::Beta0, ParamId::Beta1, ParamId::Beta2};

std::string_view param_name(ParamId id) noexcept;
std::optional<ParamId> param_from_name(std::string_view name) noexcept;

/// v = (theta, m, alpha, beta). Unused entries (theta under deterministic
/// observation models, surplus betas) hold NaN.
struct ModelParams {
  double theta = std::numeric_limits<double>::quiet_NaN();
  double m = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 3> beta{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                             std::numeric_limits<double>::quiet_NaN()};

  double get(ParamId id) const noexcept;
  void set(ParamId id, double value) noexcept;
};

// ---------------------------------------------------------------------------
// Kernels

enum class KernelKind {
  PowerLawTaylor,
  PowerLawExact,
  NeighborhoodOrder,
  Linear,
  QuadraticConstrained,
  HomogeneousWardClosure,
};

std::string_view kernel_name(KernelKind kind) noexcept;
std::optional<KernelKind> kernel_from_name(std::string_view name) noexcept;

struct KernelSpec {
  KernelKind kind = KernelKind::PowerLawTaylor;
  double anchor = 1.35;  // expansion point a of the Taylor kernel; never sampled
  double dmax = 3.36;    // reference distance of the linear / quadratic kernels
  double dmin = 0.5;     // lower end of the quadratic monotonicity interval

  int parameter_count() const noexcept;
  bool uses_distance() const noexcept;
};

/// Effect of disease spread beta_{j->i} for a pair with the given geometry.
/// Throws ParameterDomainError when beta violates the variant's constraints and
/// InputError when the pair is outside the kernel's admissible range.
double kernel_effect(const KernelSpec& spec, std::span<const double> beta, const PairClass& pair);

/// True when beta satisfies the variant's constraints (positivity, monotonicity).
bool kernel_parameters_valid(const KernelSpec& spec, std::span<const double> beta) noexcept;

/// Reed-Frost infection probability 1 - exp(-alpha - beta_sum).
double infection_probability(double alpha, double beta_sum) noexcept;

/// log(1 - exp(-h)) for h >= 0, accurate over the whole range.
inline double log1mexp(double h) noexcept {
  if (h <= 0.0) return kNegInf;
  return h < 0.6931471805599453 ? std::log(-std::expm1(-h)) : std::log1p(-std::exp(-h));
}

/// Entry (from, to) of the SIR transition matrix. Throws ParameterDomainError for m <= 1
/// or p12 outside [0, 1].
double transition_prob(DiseaseState from, DiseaseState to, double p12, double m);

/// Log transition probability parameterised by the infection hazard
/// h = alpha + sum_j beta_{j->i} I[S_j = 2], so that log(1 - p12) = -h exactly.
inline double log_transition(DiseaseState from, DiseaseState to, double hazard, double log_stay_infectious,
                             double log_removal) noexcept {
  switch (from) {
    case DiseaseState::Susceptible:
      if (to == DiseaseState::Susceptible) return -hazard;
      if (to == DiseaseState::Infectious) return log1mexp(hazard);
      return kNegInf;
    case DiseaseState::Infectious:
      if (to == DiseaseState::Infectious) return log_stay_infectious;
      if (to == DiseaseState::Removed) return log_removal;
      return kNegInf;
    case DiseaseState::Removed:
      return to == DiseaseState::Removed ? 0.0 : kNegInf;
  }
  return kNegInf;
}

// ---------------------------------------------------------------------------
// Observation models

enum class ObservationModel { SingleDetection, ContinuousTesting, KnownRemoval, KnownInfection };

std::string_view observation_name(ObservationModel m) noexcept;
std::optional<ObservationModel> observation_from_name(std::string_view name) noexcept;

/// Whether the detection probability theta is a free parameter of the model.
constexpr bool uses_theta(ObservationModel m) noexcept {
  return m == ObservationModel::SingleDetection || m == ObservationModel::ContinuousTesting;
}
/// Whether each individual can be detected at most once.
constexpr bool single_detection_data(ObservationModel m) noexcept { return m != ObservationModel::ContinuousTesting; }

/// log p(y_it | S_it, y_i(0:t-1), theta). Impossible observations give -inf.
double obs_log_density(ObservationModel model, bool y, DiseaseState state, bool previously_detected,
                       double theta) noexcept;

// ---------------------------------------------------------------------------
// Priors

struct Prior {
  enum class Kind { Uniform, Beta, ShiftedGamma, InverseUniform, Normal };

  Kind kind = Kind::Uniform;
  double a = 0.0;      // Uniform: lower; Beta: alpha; ShiftedGamma: shape; Normal: mean
  double b = 1.0;      // Uniform: upper; Beta: beta;  ShiftedGamma: rate;  Normal: sd
  double shift = 0.0;  // ShiftedGamma: x - shift ~ Gamma(shape, rate)

  static Prior uniform(double lo, double hi) { return {Kind::Uniform, lo, hi, 0.0}; }
  static Prior beta_dist(double a, double b) { return {Kind::Beta, a, b, 0.0}; }
  static Prior shifted_gamma(double shape, double rate, double shift) { return {Kind::ShiftedGamma, shape, rate, shift}; }
  /// Density x^-2 on x > 1, i.e. 1/x ~ Uniform(0, 1).
  static Prior inverse_uniform() { return {Kind::InverseUniform, 1.0, 0.0, 0.0}; }
  static Prior normal(double mean, double sd) { return {Kind::Normal, mean, sd, 0.0}; }

  double log_density(double x) const noexcept;
  double lower() const noexcept;
  double upper() const noexcept;
  bool bounded() const noexcept { return std::isfinite(lower()) && std::isfinite(upper()); }
  double sample(Rng& rng) const;
  std::string describe() const;
};

using PriorSet = std::array<Prior, kParamCount>;

/// Defaults matching the wide priors of the plant-grid analysis.
PriorSet default_priors();

// ---------------------------------------------------------------------------
// Full model

/// P(S_i0 = s) per individual; defaults to a common triple.
class InitialStateDist {
 public:
  InitialStateDist() = default;
  InitialStateDist(int n, std::array<double, 3> common);

  int individuals() const noexcept { return static_cast<int>(probs_.size()); }
  const std::array<double, 3>& probs(int i) const { return probs_.at(i); }
  void set(int i, std::array<double, 3> p);
  double log_prob(int i, DiseaseState s) const noexcept { return log_probs_[i][index_of(s)]; }

 private:
  std::vector<std::array<double, 3>> probs_;
  std::vector<std::array<double, 3>> log_probs_;
};

struct ModelSpec {
  KernelSpec kernel;
  ObservationModel observation = ObservationModel::SingleDetection;
  InitialStateDist initial;
  /// W_t = 1 when contacts are suspended on day t; empty means always open.
  std::vector<std::uint8_t> ward_closed;

  /// Multiplier (1 - W_{t-1}) on every beta for the transition into time t.
  double contact_multiplier(int t) const noexcept {
    if (ward_closed.empty() || t < 1) return 1.0;
    return ward_closed[t - 1] ? 0.0 : 1.0;
  }
};

/// Checks that the kernel can be evaluated on every pair of the population and that
/// the initial distribution and covariates match it. Throws ConfigError.
void validate_model(const ModelSpec& model, const Population& pop, int horizon);

/// log p(y, S | v) evaluated factor by factor from the definitions.
double log_joint(const StateMatrix& states, const ObservationMatrix& y, const ModelParams& v, const ModelSpec& model,
                 const Population& pop);

/// Sum of independent log prior densities over the parameters flagged in `active`.
double log_prior(const ModelParams& v, const PriorSet& priors, const std::array<bool, kParamCount>& active);

}  // namespace hmmilm

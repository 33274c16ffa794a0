#include "hmmilm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hmmilm/error.hpp"
#include "hmmilm/rng.hpp"

namespace hmmilm {

// ---------------------------------------------------------------------------
// State and observation matrices

StateMatrix::StateMatrix(int n, int horizon, DiseaseState fill) : n_(n), horizon_(horizon) {
  if (n < 0 || horizon < 0) throw InputError("state matrix dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(n) * width(), fill);
}

bool StateMatrix::row_is_monotone(int i) const noexcept {
  const auto r = row(i);
  for (std::size_t t = 1; t < r.size(); ++t) {
    const int prev = static_cast<int>(r[t - 1]);
    const int cur = static_cast<int>(r[t]);
    if (cur < prev || cur - prev > 1) return false;
  }
  return true;
}

bool StateMatrix::is_monotone() const noexcept {
  for (int i = 0; i < n_; ++i)
    if (!row_is_monotone(i)) return false;
  return true;
}

ObservationMatrix::ObservationMatrix(int n, int horizon) : n_(n), horizon_(horizon) {
  if (n < 0 || horizon < 0) throw InputError("observation matrix dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(n) * (static_cast<std::size_t>(horizon) + 1), 0);
  first_.assign(n, horizon + 1);
}

void ObservationMatrix::set(int i, int t, bool detected) {
  if (i < 0 || i >= n_ || t < 0 || t > horizon_) throw InputError("observation index out of range");
  if (t == 0 && detected) throw InputError("no detections are possible at t = 0");
  data_[offset(i, t)] = detected ? 1 : 0;
  refresh_first(i);
}

void ObservationMatrix::refresh_first(int i) noexcept {
  first_[i] = horizon_ + 1;
  for (int t = 0; t <= horizon_; ++t) {
    if (data_[offset(i, t)]) {
      first_[i] = t;
      return;
    }
  }
}

int ObservationMatrix::detection_count(int i) const noexcept {
  int c = 0;
  for (int t = 0; t <= horizon_; ++t) c += data_[offset(i, t)];
  return c;
}

int ObservationMatrix::total_detections() const noexcept {
  int c = 0;
  for (auto v : data_) c += v;
  return c;
}

// ---------------------------------------------------------------------------
// Parameters

std::string_view param_name(ParamId id) noexcept {
  switch (id) {
    case ParamId::Theta: return "theta";
    case ParamId::M: return "m";
    case ParamId::Alpha: return "alpha";
    case ParamId::Beta0: return "beta0";
    case ParamId::Beta1: return "beta1";
    case ParamId::Beta2: return "beta2";
  }
  return "?";
}

std::optional<ParamId> param_from_name(std::string_view name) noexcept {
  for (ParamId id : kAllParams)
    if (param_name(id) == name) return id;
  return std::nullopt;
}

double ModelParams::get(ParamId id) const noexcept {
  switch (id) {
    case ParamId::Theta: return theta;
    case ParamId::M: return m;
    case ParamId::Alpha: return alpha;
    case ParamId::Beta0: return beta[0];
    case ParamId::Beta1: return beta[1];
    case ParamId::Beta2: return beta[2];
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void ModelParams::set(ParamId id, double value) noexcept {
  switch (id) {
    case ParamId::Theta: theta = value; break;
    case ParamId::M: m = value; break;
    case ParamId::Alpha: alpha = value; break;
    case ParamId::Beta0: beta[0] = value; break;
    case ParamId::Beta1: beta[1] = value; break;
    case ParamId::Beta2: beta[2] = value; break;
  }
}

// ---------------------------------------------------------------------------
// Kernels

std::string_view kernel_name(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::PowerLawTaylor: return "power_law_taylor";
    case KernelKind::PowerLawExact: return "power_law_exact";
    case KernelKind::NeighborhoodOrder: return "neighborhood_order";
    case KernelKind::Linear: return "linear";
    case KernelKind::QuadraticConstrained: return "quadratic";
    case KernelKind::HomogeneousWardClosure: return "homogeneous";
  }
  return "?";
}

std::optional<KernelKind> kernel_from_name(std::string_view name) noexcept {
  for (KernelKind k : {KernelKind::PowerLawTaylor, KernelKind::PowerLawExact, KernelKind::NeighborhoodOrder,
                       KernelKind::Linear, KernelKind::QuadraticConstrained, KernelKind::HomogeneousWardClosure})
    if (kernel_name(k) == name) return k;
  return std::nullopt;
}

int KernelSpec::parameter_count() const noexcept {
  switch (kind) {
    case KernelKind::NeighborhoodOrder:
    case KernelKind::QuadraticConstrained: return 3;
    case KernelKind::HomogeneousWardClosure: return 1;
    default: return 2;
  }
}

bool KernelSpec::uses_distance() const noexcept {
  return kind != KernelKind::NeighborhoodOrder && kind != KernelKind::HomogeneousWardClosure;
}

bool kernel_parameters_valid(const KernelSpec& spec, std::span<const double> beta) noexcept {
  if (static_cast<int>(beta.size()) < spec.parameter_count()) return false;
  for (int k = 0; k < spec.parameter_count(); ++k)
    if (!std::isfinite(beta[k])) return false;
  switch (spec.kind) {
    case KernelKind::PowerLawTaylor:
    case KernelKind::HomogeneousWardClosure: return beta[0] >= 0.0;
    case KernelKind::PowerLawExact: return beta[0] >= 0.0 && beta[1] >= 0.0;
    case KernelKind::NeighborhoodOrder: return beta[0] >= 0.0 && beta[1] >= 0.0 && beta[2] >= 0.0;
    case KernelKind::Linear: return beta[0] >= 0.0 && beta[1] >= 0.0;
    case KernelKind::QuadraticConstrained:
      return beta[0] > 0.0 && beta[1] > 0.0 && -beta[1] - 2.0 * beta[2] * (spec.dmax - spec.dmin) < 0.0;
  }
  return false;
}

double kernel_effect(const KernelSpec& spec, std::span<const double> beta, const PairClass& pair) {
  if (!kernel_parameters_valid(spec, beta))
    throw ParameterDomainError(std::string("kernel parameters violate the constraints of ") +
                               std::string(kernel_name(spec.kind)));
  const double d = pair.distance;
  if (spec.uses_distance() && !(d > 0.0 && std::isfinite(d)))
    throw InputError("distance kernels need a positive finite distance");
  switch (spec.kind) {
    case KernelKind::PowerLawTaylor: {
      const double l = std::log(d);
      const double shift = beta[1] - spec.anchor;
      return beta[0] * std::pow(d, -spec.anchor) * (1.0 - l * shift + 0.5 * l * l * shift * shift);
    }
    case KernelKind::PowerLawExact:
      return beta[0] * std::pow(d, -beta[1]);
    case KernelKind::NeighborhoodOrder:
      if (pair.order < 1 || pair.order > 3) throw InputError("neighbourhood-order kernel needs order 1, 2 or 3");
      return beta[pair.order - 1];
    case KernelKind::Linear:
      if (d > spec.dmax + 1e-12) throw InputError("linear kernel evaluated beyond its reference distance");
      return beta[0] + beta[1] * (spec.dmax - d);
    case KernelKind::QuadraticConstrained: {
      if (d > spec.dmax + 1e-12 || d < spec.dmin - 1e-12)
        throw InputError("quadratic kernel evaluated outside [dmin, dmax]");
      const double u = spec.dmax - d;
      return beta[0] + beta[1] * u + beta[2] * u * u;
    }
    case KernelKind::HomogeneousWardClosure:
      return beta[0];
  }
  return 0.0;
}

double infection_probability(double alpha, double beta_sum) noexcept { return -std::expm1(-alpha - beta_sum); }

double transition_prob(DiseaseState from, DiseaseState to, double p12, double m) {
  if (!(m > 1.0)) throw ParameterDomainError("mean infectious duration m must exceed 1");
  if (!(p12 >= 0.0 && p12 <= 1.0)) throw ParameterDomainError("infection probability outside [0, 1]");
  static constexpr double zero = 0.0;
  switch (from) {
    case DiseaseState::Susceptible:
      return to == DiseaseState::Susceptible ? 1.0 - p12 : to == DiseaseState::Infectious ? p12 : zero;
    case DiseaseState::Infectious:
      return to == DiseaseState::Infectious ? 1.0 - 1.0 / m : to == DiseaseState::Removed ? 1.0 / m : zero;
    case DiseaseState::Removed:
      return to == DiseaseState::Removed ? 1.0 : zero;
  }
  return zero;
}

// ---------------------------------------------------------------------------
// Observation models

std::string_view observation_name(ObservationModel m) noexcept {
  switch (m) {
    case ObservationModel::SingleDetection: return "single_detection";
    case ObservationModel::ContinuousTesting: return "continuous_testing";
    case ObservationModel::KnownRemoval: return "known_removal";
    case ObservationModel::KnownInfection: return "known_infection";
  }
  return "?";
}

std::optional<ObservationModel> observation_from_name(std::string_view name) noexcept {
  for (auto m : {ObservationModel::SingleDetection, ObservationModel::ContinuousTesting, ObservationModel::KnownRemoval,
                 ObservationModel::KnownInfection})
    if (observation_name(m) == name) return m;
  return std::nullopt;
}

namespace {

double point_mass(bool y, bool one) noexcept { return y == one ? 0.0 : kNegInf; }

double bernoulli(bool y, double theta) noexcept { return y ? std::log(theta) : std::log1p(-theta); }

}  // namespace

double obs_log_density(ObservationModel model, bool y, DiseaseState state, bool previously_detected,
                       double theta) noexcept {
  switch (model) {
    case ObservationModel::SingleDetection:
      if (state == DiseaseState::Infectious && !previously_detected) return bernoulli(y, theta);
      return point_mass(y, false);
    case ObservationModel::ContinuousTesting:
      if (state == DiseaseState::Infectious) return bernoulli(y, theta);
      return point_mass(y, false);
    case ObservationModel::KnownRemoval:
      return point_mass(y, state == DiseaseState::Removed && !previously_detected);
    case ObservationModel::KnownInfection:
      return point_mass(y, state == DiseaseState::Infectious && !previously_detected);
  }
  return kNegInf;
}

// ---------------------------------------------------------------------------
// Priors

double Prior::log_density(double x) const noexcept {
  if (!std::isfinite(x)) return kNegInf;
  switch (kind) {
    case Kind::Uniform:
      return (x >= a && x <= b) ? -std::log(b - a) : kNegInf;
    case Kind::Beta:
      if (!(x > 0.0 && x < 1.0)) return kNegInf;
      return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    case Kind::ShiftedGamma: {
      const double z = x - shift;
      if (!(z > 0.0)) return kNegInf;
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(z) - b * z;
    }
    case Kind::InverseUniform:
      return x > 1.0 ? -2.0 * std::log(x) : kNegInf;
    case Kind::Normal: {
      const double z = (x - a) / b;
      return -0.5 * z * z - std::log(b) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  return kNegInf;
}

double Prior::lower() const noexcept {
  switch (kind) {
    case Kind::Uniform: return a;
    case Kind::Beta: return 0.0;
    case Kind::ShiftedGamma: return shift;
    case Kind::InverseUniform: return 1.0;
    case Kind::Normal: return -std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double Prior::upper() const noexcept {
  switch (kind) {
    case Kind::Uniform: return b;
    case Kind::Beta: return 1.0;
    default: return std::numeric_limits<double>::infinity();
  }
}

double Prior::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Uniform: return rng.uniform(a, b);
    case Kind::Beta: return rng.beta(a, b);
    case Kind::ShiftedGamma: return shift + rng.gamma(a, b);
    case Kind::InverseUniform: return 1.0 / rng.uniform();
    case Kind::Normal: return a + b * rng.normal();
  }
  return 0.0;
}

std::string Prior::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Uniform: os << "uniform " << a << ' ' << b; break;
    case Kind::Beta: os << "beta " << a << ' ' << b; break;
    case Kind::ShiftedGamma: os << "shifted_gamma " << a << ' ' << b << ' ' << shift; break;
    case Kind::InverseUniform: os << "inverse_uniform"; break;
    case Kind::Normal: os << "normal " << a << ' ' << b; break;
  }
  return os.str();
}

PriorSet default_priors() {
  return {Prior::uniform(0.0, 1.0), Prior::uniform(1.0, 20.0), Prior::uniform(0.0, 1.0),
          Prior::uniform(0.0, 1.0), Prior::uniform(0.0, 20.0), Prior::normal(0.0, 5.0)};
}

double log_prior(const ModelParams& v, const PriorSet& priors, const std::array<bool, kParamCount>& active) {
  double lp = 0.0;
  for (ParamId id : kAllParams) {
    const int k = static_cast<int>(id);
    if (!active[k]) continue;
    lp += priors[k].log_density(v.get(id));
    if (lp == kNegInf) return kNegInf;
  }
  return lp;
}

// ---------------------------------------------------------------------------
// Initial state distribution and model

InitialStateDist::InitialStateDist(int n, std::array<double, 3> common) {
  probs_.resize(n);
  log_probs_.resize(n);
  for (int i = 0; i < n; ++i) set(i, common);
}

void InitialStateDist::set(int i, std::array<double, 3> p) {
  if (i < 0 || i >= individuals()) throw InputError("initial distribution index out of range");
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw InputError("initial state probabilities must be non-negative");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("initial state probabilities must sum to 1");
  probs_[i] = p;
  for (int k = 0; k < 3; ++k) log_probs_[i][k] = p[k] > 0.0 ? std::log(p[k]) : kNegInf;
}

void validate_model(const ModelSpec& model, const Population& pop, int horizon) {
  if (horizon < 1) throw ConfigError("the observation horizon T must be at least 1");
  if (model.initial.individuals() != pop.size())
    throw ConfigError("initial state distribution does not match the population size");
  if (!model.ward_closed.empty() && static_cast<int>(model.ward_closed.size()) != horizon + 1)
    throw ConfigError("ward covariates must cover t = 0..T");
  for (auto w : model.ward_closed)
    if (w > 1) throw ConfigError("ward covariates must be 0 or 1");
  const auto& k = model.kernel;
  for (const PairClass& c : pop.classes()) {
    if (k.uses_distance() && !(c.distance > 0.0 && std::isfinite(c.distance)))
      throw ConfigError(std::string(kernel_name(k.kind)) + " kernel needs positive pairwise distances");
    if (k.kind == KernelKind::NeighborhoodOrder && (c.order < 1 || c.order > 3))
      throw ConfigError("neighborhood_order kernel needs queen orders 1..3");
    if ((k.kind == KernelKind::Linear || k.kind == KernelKind::QuadraticConstrained) && c.distance > k.dmax + 1e-12)
      throw ConfigError("a neighbour lies beyond the kernel reference distance dmax");
    if (k.kind == KernelKind::QuadraticConstrained && c.distance < k.dmin - 1e-12)
      throw ConfigError("a neighbour lies closer than the quadratic kernel's dmin");
  }
}

double log_joint(const StateMatrix& states, const ObservationMatrix& y, const ModelParams& v, const ModelSpec& model,
                 const Population& pop) {
  const int n = pop.size();
  if (states.individuals() != n || y.individuals() != n) throw InputError("state, observation and population sizes differ");
  if (states.horizon() != y.horizon()) throw InputError("state and observation horizons differ");
  if (model.initial.individuals() != n) throw InputError("initial distribution does not match the population");
  const int horizon = states.horizon();
  if (!(v.m > 1.0)) throw ParameterDomainError("mean infectious duration m must exceed 1");
  const std::span<const double> beta(v.beta.data(), model.kernel.parameter_count());
  const double log_stay = std::log1p(-1.0 / v.m);
  const double log_remove = -std::log(v.m);

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += model.initial.log_prob(i, states(i, 0));
    if (total == kNegInf) return kNegInf;
    for (int t = 1; t <= horizon; ++t) {
      double hazard = 0.0;
      if (states(i, t - 1) == DiseaseState::Susceptible) {
        double pressure = 0.0;
        for (const Neighbor& nb : pop.neighbors(i))
          if (states(nb.id, t - 1) == DiseaseState::Infectious)
            pressure += kernel_effect(model.kernel, beta, pop.pair_class(nb.cls));
        hazard = v.alpha + model.contact_multiplier(t) * pressure;
      }
      total += log_transition(states(i, t - 1), states(i, t), hazard, log_stay, log_remove);
      total += obs_log_density(model.observation, y(i, t), states(i, t), y.previously_detected(i, t), v.theta);
      if (total == kNegInf) return kNegInf;
    }
  }
  return total;
}

}  // namespace hmmilm

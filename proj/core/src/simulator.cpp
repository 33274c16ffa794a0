#include "hmmilm/simulator.hpp"

#include <cmath>
#include <vector>

#include "hmmilm/error.hpp"
#include "hmmilm/rng.hpp"

namespace hmmilm {

namespace {

bool draw_observation(ObservationModel model, DiseaseState s, bool previously_detected, double theta, double u) {
  switch (model) {
    case ObservationModel::SingleDetection:
      return s == DiseaseState::Infectious && !previously_detected && u < theta;
    case ObservationModel::ContinuousTesting:
      return s == DiseaseState::Infectious && u < theta;
    case ObservationModel::KnownRemoval:
      return s == DiseaseState::Removed && !previously_detected;
    case ObservationModel::KnownInfection:
      return s == DiseaseState::Infectious && !previously_detected;
  }
  return false;
}

}  // namespace

void SimConfig::validate() const {
  if (horizon < 1) throw ConfigError("simulation horizon must be at least 1");
  validate_model(model, population, horizon);
  if (!(truth.m > 1.0)) throw ConfigError("true m must exceed 1");
  if (!(truth.alpha >= 0.0)) throw ConfigError("true alpha must be non-negative");
  if (uses_theta(model.observation) && !(truth.theta > 0.0 && truth.theta <= 1.0))
    throw ConfigError("true theta must lie in (0, 1]");
  if (!kernel_parameters_valid(model.kernel, std::span<const double>(truth.beta.data(), model.kernel.parameter_count())))
    throw ConfigError("true kernel parameters violate the kernel constraints");
}

Outbreak simulate_outbreak(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  return simulate_outbreak(cfg.population, cfg.model, cfg.truth, cfg.horizon, rng);
}

Outbreak simulate_outbreak(const Population& pop, const ModelSpec& model, const ModelParams& truth, int horizon,
                           Rng& rng) {
  const int n = pop.size();
  validate_model(model, pop, horizon);
  const std::span<const double> beta(truth.beta.data(), model.kernel.parameter_count());
  std::vector<double> weight(pop.class_count());
  for (int c = 0; c < pop.class_count(); ++c) weight[c] = kernel_effect(model.kernel, beta, pop.pair_class(c));
  if (!(truth.m > 1.0)) throw ParameterDomainError("mean infectious duration m must exceed 1");

  Outbreak out{StateMatrix(n, horizon), ObservationMatrix(n, horizon)};
  auto& s = out.states;
  auto& y = out.detections;
  for (int i = 0; i < n; ++i) {
    const auto& p = model.initial.probs(i);
    const double u = rng.uniform();
    s(i, 0) = u < p[0] ? DiseaseState::Susceptible : u < p[0] + p[1] ? DiseaseState::Infectious : DiseaseState::Removed;
  }
  const double removal = 1.0 / truth.m;
  for (int t = 1; t <= horizon; ++t) {
    const double mult = model.contact_multiplier(t);
    for (int i = 0; i < n; ++i) {
      const double u_state = rng.uniform();
      const double u_obs = rng.uniform();
      const DiseaseState prev = s(i, t - 1);
      DiseaseState next = prev;
      if (prev == DiseaseState::Susceptible) {
        double pressure = 0.0;
        for (const Neighbor& nb : pop.neighbors(i))
          if (s(nb.id, t - 1) == DiseaseState::Infectious) pressure += weight[nb.cls];
        if (u_state < infection_probability(truth.alpha, mult * pressure)) next = DiseaseState::Infectious;
      } else if (prev == DiseaseState::Infectious) {
        if (u_state < removal) next = DiseaseState::Removed;
      }
      s(i, t) = next;
      if (draw_observation(model.observation, next, y.previously_detected(i, t), truth.theta, u_obs)) y.set(i, t, true);
    }
  }
  return out;
}

ObservationMatrix simulate_observations(const StateMatrix& states, ObservationModel model, double theta, Rng& rng) {
  const int n = states.individuals();
  const int T = states.horizon();
  ObservationMatrix y(n, T);
  for (int t = 1; t <= T; ++t)
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      if (draw_observation(model, states(i, t), y.previously_detected(i, t), theta, u)) y.set(i, t, true);
    }
  return y;
}

}  // namespace hmmilm

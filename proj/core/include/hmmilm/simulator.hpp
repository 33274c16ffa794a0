#pragma once

#include <cstdint>

#include "hmmilm/model.hpp"
#include "hmmilm/population.hpp"

namespace hmmilm {

class Rng;

struct SimConfig {
  Population population;
  ModelSpec model;
  ModelParams truth;
  int horizon = 7;
  std::uint64_t seed = 1;

  /// Throws ConfigError when the truth violates a parameter constraint.
  void validate() const;
};

struct Outbreak {
  StateMatrix states;
  ObservationMatrix detections;
};

/// Synchronous forward simulation. Draw order: S_i0 for ascending i; then for each
/// t = 1..T and ascending i, one uniform for the state and one for the observation.
Outbreak simulate_outbreak(const SimConfig& cfg);
Outbreak simulate_outbreak(const Population& pop, const ModelSpec& model, const ModelParams& truth, int horizon,
                           Rng& rng);

/// Fresh detections given fixed states (one uniform per (t, i), t ascending then i).
ObservationMatrix simulate_observations(const StateMatrix& states, ObservationModel model, double theta, Rng& rng);

}  // namespace hmmilm

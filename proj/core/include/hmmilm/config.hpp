#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hmmilm/gibbs.hpp"
#include "hmmilm/io.hpp"
#include "hmmilm/model.hpp"
#include "hmmilm/population.hpp"

namespace hmmilm {

/// Model settings of one fit or one ladder variant.
struct ModelSection {
  KernelSpec kernel;
  ObservationModel observation = ObservationModel::SingleDetection;
  std::array<double, 3> initial{0.99, 0.01, 0.0};
  std::vector<std::pair<int, std::array<double, 3>>> initial_overrides;
  /// Use the covariate file's ward closures; false means always open.
  bool use_ward_closure = true;
  PriorSet priors = default_priors();
  FixedParams fixed;
  StateConstraints constraints;
  /// Neighbourhood order override (grid populations only).
  std::optional<int> order;
};

struct VariantSection {
  std::string name;
  ModelSection model;
};

/// Parsed run configuration (INI file). Sections and keys:
///
///   [population]  grid = rows:cols:row_spacing:within_row_spacing, neighborhood = queen|complete|radius,
///                 order, radius, individuals
///   [model]       kernel, observation, horizon, initial = p1,p2,p3, initial.<id> = p1,p2,p3,
///                 anchor, dmax, dmin, ward = data|open, no_undetected_infections
///   [priors]      <param> = uniform a b | beta a b | shifted_gamma shape rate shift | inverse_uniform |
///                 normal mean sd
///   [fixed]       <param> = value
///   [mcmc]        iterations, burnin, chains, seed, thin, threads, afss_interval, rw_target,
///                 full_vector_afss, time_budget, blocks = kind:p,p;kind:p, width.<param>
///   [truth]       <param> = value
///   [study]       replications, seed, threads, max_gelman_rubin, min_ess, orders, threshold,
///                 prior_m (sensitivity prior override for the recovery fits)
///   [curve]       distances = from:to:step
///   [variant.<name>]  any [model] key except horizon, plus prior.<param>, fixed.<param>, order
struct RunConfig {
  std::optional<GridSpec> grid;
  NeighborhoodRule neighborhood;
  std::optional<int> individuals;
  int horizon = 7;
  ModelSection model;
  MCMCConfig mcmc;
  ModelParams truth;
  int replications = 20;
  std::uint64_t study_seed = 1;
  int study_threads = 0;
  ConvergenceThresholds thresholds;
  std::vector<int> orders{1, 2, 3, 4};
  double order_threshold = 5.0;
  std::optional<Prior> study_prior_m;
  std::vector<double> curve_distances;
  std::vector<VariantSection> variants;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// "rows:cols:row_spacing:within_row_spacing" (spacings optional).
GridSpec parse_grid(const std::string& text);
/// "uniform 0 1", "beta 40 60", "shifted_gamma 2 0.348 1", "inverse_uniform", "normal 0 5".
Prior parse_prior(const std::string& text);
/// "from:to:step" or a comma separated list.
std::vector<double> parse_distance_grid(const std::string& text);

/// Assembles the model for a population and horizon (initial distribution and ward).
ModelSpec build_model(const ModelSection& section, int individuals, const std::vector<std::uint8_t>& ward_closed);

/// FNV-1a 64-bit hash rendered as 16 hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace hmmilm

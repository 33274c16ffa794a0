#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hmmilm/archive.hpp"
#include "hmmilm/iffbs.hpp"
#include "hmmilm/model.hpp"
#include "hmmilm/population.hpp"
#include "hmmilm/rng.hpp"
#include "hmmilm/samplers.hpp"

namespace hmmilm {

enum class SamplerKind { Slice, FactorSlice, RandomWalk };

std::string_view sampler_name(SamplerKind k) noexcept;
std::optional<SamplerKind> sampler_from_name(std::string_view name) noexcept;

/// Parameters updated together by one sampler. Blocks run in the order given.
struct ParamBlock {
  SamplerKind kind = SamplerKind::Slice;
  std::vector<ParamId> params;
};

using FixedParams = std::array<std::optional<double>, kParamCount>;

struct MCMCConfig {
  int iterations = 20000;
  int burn_in = 5000;
  int chains = 3;
  std::uint64_t seed = 1;
  /// Interval between retained draws for states, functionals and WAIC terms.
  int thin = 10;
  /// Empty means the default assignment (see default_blocks).
  std::vector<ParamBlock> blocks;
  /// One factor slice block over every free parameter.
  bool full_vector_afss = false;
  /// Initial slice / random-walk widths; default 10% of a bounded prior range, else 1.
  std::array<std::optional<double>, kParamCount> widths;
  int afss_interval = 100;
  double rw_target = 0.44;
  FixedParams fixed;
  StateConstraints constraints;
  /// Worker threads for chains; 0 means the hardware count. HMMILM_THREADS caps it.
  int threads = 0;
  /// Wall-clock limit per chain in seconds; 0 disables it. A chain that runs out is
  /// recorded as failed.
  double time_budget_seconds = 0.0;

  /// Throws ConfigError unless 0 <= burn_in < iterations, chains >= 1, thin >= 1.
  void validate() const;
};

/// Data and model of one fit.
struct FitProblem {
  Population population;
  ModelSpec model;
  ObservationMatrix data;
  PriorSet priors = default_priors();
};

/// Slice for theta and m, factor slice over (alpha, beta); all free parameters in one
/// factor slice block with `full_vector`.
std::vector<ParamBlock> default_blocks(const ModelSpec& model, const FixedParams& fixed, bool full_vector);

/// Counts that determine log p(y, S | v) as a function of v for fixed S.
struct SufficientStats {
  struct InfectionGroup {
    bool open = true;       // contacts allowed on the step (ward not closed)
    bool infected = false;  // outcome 1 -> 2 (else 1 -> 1)
    long long multiplicity = 0;
    std::vector<std::pair<int, int>> profile;  // (weight class, infectious neighbours)
  };
  std::vector<InfectionGroup> infection;
  long long stay_infectious = 0;
  long long removals = 0;
  long long detections = 0;  // Bernoulli(theta) successes
  long long misses = 0;      // Bernoulli(theta) failures
  bool impossible = false;   // a structural zero in S or y

  static SufficientStats compute(const StateMatrix& states, const ObservationMatrix& y, const ModelSpec& model,
                                 const PressureCache& cache);

  /// Infection factors: sum over groups of log(1 - p12) or log p12.
  double infection_log_lik(double alpha, std::span<const double> weights) const;
  double removal_log_lik(double m) const;
  double observation_log_lik(double theta) const;
};

/// Names of the state functionals accumulated at retained draws.
std::vector<std::string> default_functional_names();

/// One MCMC chain: step 1 updates parameter blocks against log p(y, S | v) + log p(v) with
/// S fixed, step 2 sweeps iFFBS over all unpinned individuals in ascending id order.
class GibbsChain {
 public:
  GibbsChain(const FitProblem& problem, const MCMCConfig& cfg, int chain_index);
  ~GibbsChain();
  GibbsChain(const GibbsChain&) = delete;
  GibbsChain& operator=(const GibbsChain&) = delete;

  /// One Gibbs iteration with adaptation on or off.
  void iterate(bool adapt);
  /// Parameter step only / state sweep only.
  void update_parameters(bool adapt);
  void update_states();

  /// Full run: burn-in with adaptation, then retained iterations.
  ChainArchive run();

  const ModelParams& params() const noexcept { return v_; }
  const StateMatrix& states() const noexcept { return engine_->states(); }
  /// Mutable data for successive-conditional testing; the chain reads it every iteration.
  ObservationMatrix& data() noexcept { return y_; }
  const std::vector<std::uint8_t>& pinned() const noexcept { return pinned_; }
  const std::vector<ParamBlock>& blocks() const noexcept { return blocks_; }
  std::uint64_t adaptation_fingerprint() const noexcept;
  /// Fills out[i * T + t - 1] with the partially marginalised pointwise log density.
  void marginal_pointwise(std::vector<double>& out);
  void conditional_pointwise(std::vector<double>& out) const;
  std::vector<double> functionals() const;
  void set_state(const StateMatrix& s, const ModelParams& v);

 private:
  struct BlockState;
  double block_log_target(const BlockState& b, const ModelParams& v) const;

  const FitProblem& problem_;
  const MCMCConfig& cfg_;
  int chain_index_;
  Rng rng_;
  ObservationMatrix y_;
  ModelParams v_;
  std::array<bool, kParamCount> sampled_{};
  std::vector<std::uint8_t> pinned_;
  std::vector<ParamBlock> blocks_;
  std::vector<BlockState> block_states_;
  std::unique_ptr<IffbsEngine> engine_;
  FilterWorkspace ws_;
  SufficientStats stats_;
  mutable std::vector<double> weights_scratch_;
  int iteration_ = 0;
};

/// Runs cfg.chains independent chains (in parallel, results independent of the worker
/// count) and collects their archives in chain order.
PosteriorArchive gibbs_run(const FitProblem& problem, const MCMCConfig& cfg);

/// Worker count: `requested` (or the hardware count when 0), capped by HMMILM_THREADS
/// and by `jobs`.
int resolve_threads(int requested, int jobs);

}  // namespace hmmilm

#include "hmmilm/gibbs.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <sstream>
#include <thread>

#include "hmmilm/error.hpp"
#include "parallel.hpp"

namespace hmmilm {

std::string_view sampler_name(SamplerKind k) noexcept {
  switch (k) {
    case SamplerKind::Slice: return "slice";
    case SamplerKind::FactorSlice: return "afss";
    case SamplerKind::RandomWalk: return "rw";
  }
  return "?";
}

std::optional<SamplerKind> sampler_from_name(std::string_view name) noexcept {
  for (auto k : {SamplerKind::Slice, SamplerKind::FactorSlice, SamplerKind::RandomWalk})
    if (sampler_name(k) == name) return k;
  return std::nullopt;
}

void MCMCConfig::validate() const {
  if (iterations < 1) throw ConfigError("at least one MCMC iteration is required");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn-in must satisfy 0 <= burnin < iterations");
  if (chains < 1) throw ConfigError("at least one chain is required");
  if (thin < 1) throw ConfigError("thinning interval must be at least 1");
  if (afss_interval < 1) throw ConfigError("AFSS adaptation interval must be at least 1");
  if (!(rw_target > 0.0 && rw_target < 1.0)) throw ConfigError("random-walk acceptance target must lie in (0, 1)");
  if (!(time_budget_seconds >= 0.0)) throw ConfigError("time budget must be non-negative");
}

std::vector<ParamBlock> default_blocks(const ModelSpec& model, const FixedParams& fixed, bool full_vector) {
  const auto active = active_parameters(model);
  auto free = [&](ParamId id) { return active[static_cast<int>(id)] && !fixed[static_cast<int>(id)]; };
  std::vector<ParamBlock> blocks;
  auto push = [&](SamplerKind kind, std::vector<ParamId> ids) {
    if (ids.empty()) return;
    if (ids.size() == 1 && kind == SamplerKind::FactorSlice) kind = SamplerKind::Slice;
    blocks.push_back({kind, std::move(ids)});
  };
  if (full_vector) {
    std::vector<ParamId> all;
    for (ParamId id : kAllParams)
      if (free(id)) all.push_back(id);
    push(SamplerKind::FactorSlice, all);
    return blocks;
  }
  if (free(ParamId::Theta)) push(SamplerKind::Slice, {ParamId::Theta});
  if (free(ParamId::M)) push(SamplerKind::Slice, {ParamId::M});
  std::vector<ParamId> spread;
  for (ParamId id : {ParamId::Alpha, ParamId::Beta0, ParamId::Beta1, ParamId::Beta2})
    if (free(id)) spread.push_back(id);
  push(SamplerKind::FactorSlice, spread);
  return blocks;
}

std::vector<std::string> default_functional_names() {
  return {"undetected_infected_end", "undetected_infected_during", "undetected_removed_end"};
}

// ---------------------------------------------------------------------------
// Sufficient statistics

SufficientStats SufficientStats::compute(const StateMatrix& states, const ObservationMatrix& y,
                                         const ModelSpec& model, const PressureCache& cache) {
  SufficientStats st;
  const int n = states.individuals();
  const int T = states.horizon();
  // Key layout: open, infected, then (class, count) pairs.
  std::vector<std::vector<int>> keys;
  std::vector<std::pair<int, int>> profile;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      const DiseaseState a = states(i, t);
      const DiseaseState b = states(i, t + 1);
      if (a == DiseaseState::Susceptible) {
        if (b == DiseaseState::Removed) {
          st.impossible = true;
          continue;
        }
        const bool open = model.contact_multiplier(t + 1) > 0.0;
        std::vector<int> key{open ? 1 : 0, b == DiseaseState::Infectious ? 1 : 0};
        if (open) {
          profile.clear();
          cache.infectious_profile(i, t, profile);
          for (const auto& [wc, c] : profile) {
            key.push_back(wc);
            key.push_back(c);
          }
        }
        keys.push_back(std::move(key));
      } else if (a == DiseaseState::Infectious) {
        if (b == DiseaseState::Infectious)
          ++st.stay_infectious;
        else if (b == DiseaseState::Removed)
          ++st.removals;
        else
          st.impossible = true;
      } else if (b != DiseaseState::Removed) {
        st.impossible = true;
      }
    }
    for (int t = 1; t <= T; ++t) {
      const bool yt = y(i, t);
      const DiseaseState s = states(i, t);
      const bool prev = y.previously_detected(i, t);
      const bool bernoulli = s == DiseaseState::Infectious &&
                             (model.observation == ObservationModel::ContinuousTesting ||
                              (model.observation == ObservationModel::SingleDetection && !prev));
      if (bernoulli) {
        (yt ? st.detections : st.misses) += 1;
      } else if (obs_log_density(model.observation, yt, s, prev, 0.5) == kNegInf) {
        st.impossible = true;
      }
    }
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t r = 0; r < keys.size();) {
    std::size_t e = r;
    while (e < keys.size() && keys[e] == keys[r]) ++e;
    InfectionGroup g;
    g.open = keys[r][0] != 0;
    g.infected = keys[r][1] != 0;
    g.multiplicity = static_cast<long long>(e - r);
    for (std::size_t k = 2; k + 1 < keys[r].size(); k += 2) g.profile.emplace_back(keys[r][k], keys[r][k + 1]);
    st.infection.push_back(std::move(g));
    r = e;
  }
  return st;
}

double SufficientStats::infection_log_lik(double alpha, std::span<const double> weights) const {
  double total = 0.0;
  for (const auto& g : infection) {
    double p = 0.0;
    if (g.open)
      for (const auto& [wc, c] : g.profile) p += c * weights[wc];
    const double h = alpha + p;
    const double term = g.infected ? log1mexp(h) : -h;
    if (term == kNegInf) return kNegInf;
    total += static_cast<double>(g.multiplicity) * term;
  }
  return total;
}

double SufficientStats::removal_log_lik(double m) const {
  if (!(m > 1.0)) return kNegInf;
  double total = 0.0;
  if (stay_infectious > 0) total += static_cast<double>(stay_infectious) * std::log1p(-1.0 / m);
  if (removals > 0) total -= static_cast<double>(removals) * std::log(m);
  return total;
}

double SufficientStats::observation_log_lik(double theta) const {
  if (!(theta >= 0.0 && theta <= 1.0)) return kNegInf;
  double total = 0.0;
  if (detections > 0) total += static_cast<double>(detections) * std::log(theta);
  if (misses > 0) total += static_cast<double>(misses) * std::log1p(-theta);
  return total;
}

// ---------------------------------------------------------------------------
// Chain

struct GibbsChain::BlockState {
  SamplerKind kind = SamplerKind::Slice;
  std::vector<ParamId> params;
  bool touches_theta = false;
  bool touches_m = false;
  bool touches_infection = false;
  std::vector<double> widths;
  std::vector<Bounds> bounds;
  std::unique_ptr<FactorSliceSampler> afss;
  std::vector<AdaptiveRandomWalk> rw;
};

GibbsChain::~GibbsChain() = default;

GibbsChain::GibbsChain(const FitProblem& problem, const MCMCConfig& cfg, int chain_index)
    : problem_(problem),
      cfg_(cfg),
      chain_index_(chain_index),
      rng_(Rng::derive(cfg.seed, static_cast<std::uint64_t>(chain_index))),
      y_(problem.data) {
  const auto& model = problem.model;
  const auto& pop = problem.population;
  const int n = pop.size();
  validate_model(model, pop, y_.horizon());
  if (y_.individuals() != n) throw InputError("data and population sizes differ");

  const auto active = active_parameters(model);
  for (int k = 0; k < kParamCount; ++k) sampled_[k] = active[k] && !cfg.fixed[k];

  pinned_.assign(n, 0);
  if (cfg.constraints.no_undetected_infections)
    for (int i = 0; i < n; ++i)
      if (!y_.first_detection(i)) pinned_[i] = 1;
  for (int i : cfg.constraints.pinned) {
    if (i < 0 || i >= n) throw ConfigError("pinned individual id out of range");
    pinned_[i] = 1;
  }

  const bool zero_background = cfg.fixed[static_cast<int>(ParamId::Alpha)] &&
                               *cfg.fixed[static_cast<int>(ParamId::Alpha)] == 0.0;
  StateMatrix s0 = initialize_states(y_, model, pop, zero_background);
  if (cfg.constraints.no_undetected_infections)
    for (int i = 0; i < n; ++i)
      if (!y_.first_detection(i))
        for (auto& x : s0.row(i)) x = DiseaseState::Susceptible;

  bool ok = false;
  for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
    v_ = initialize_params(model, problem.priors, cfg.fixed, rng_);
    ok = log_joint(s0, y_, v_, model, pop) > kNegInf;
  }
  if (!ok) throw DataError("no starting parameters give the initial states positive density");

  // Blocks: configured order, restricted to sampled parameters; leftovers get slice updates.
  std::vector<ParamBlock> requested =
      cfg.blocks.empty() ? default_blocks(model, cfg.fixed, cfg.full_vector_afss) : cfg.blocks;
  std::array<bool, kParamCount> covered{};
  for (auto& b : requested) {
    ParamBlock kept{b.kind, {}};
    for (ParamId id : b.params)
      if (sampled_[static_cast<int>(id)] && !covered[static_cast<int>(id)]) {
        kept.params.push_back(id);
        covered[static_cast<int>(id)] = true;
      }
    if (!kept.params.empty()) blocks_.push_back(std::move(kept));
  }
  for (ParamId id : kAllParams)
    if (sampled_[static_cast<int>(id)] && !covered[static_cast<int>(id)])
      blocks_.push_back({SamplerKind::Slice, {id}});

  for (const auto& b : blocks_) {
    BlockState bs;
    bs.kind = b.kind;
    bs.params = b.params;
    for (ParamId id : b.params) {
      const Prior& pr = problem.priors[static_cast<int>(id)];
      bs.touches_theta |= id == ParamId::Theta;
      bs.touches_m |= id == ParamId::M;
      bs.touches_infection |= id != ParamId::Theta && id != ParamId::M;
      const auto& w = cfg.widths[static_cast<int>(id)];
      bs.widths.push_back(w ? *w : pr.bounded() ? 0.1 * (pr.upper() - pr.lower()) : 1.0);
      bs.bounds.push_back({pr.lower(), pr.upper()});
    }
    if (bs.kind == SamplerKind::FactorSlice)
      bs.afss = std::make_unique<FactorSliceSampler>(bs.widths, bs.bounds, cfg.afss_interval);
    if (bs.kind == SamplerKind::RandomWalk)
      for (double w : bs.widths) bs.rw.emplace_back(w, cfg.rw_target);
    block_states_.push_back(std::move(bs));
  }

  engine_ = std::make_unique<IffbsEngine>(pop, model, y_, std::move(s0), v_);
  ws_.resize(y_.horizon());
}

double GibbsChain::block_log_target(const BlockState& b, const ModelParams& v) const {
  double lp = 0.0;
  for (ParamId id : b.params) {
    lp += problem_.priors[static_cast<int>(id)].log_density(v.get(id));
    if (lp == kNegInf) return kNegInf;
  }
  if (stats_.impossible) return kNegInf;
  if (b.touches_theta) lp += stats_.observation_log_lik(v.theta);
  if (b.touches_m) lp += stats_.removal_log_lik(v.m);
  if (lp == kNegInf) return kNegInf;
  if (b.touches_infection) {
    const auto& kernel = problem_.model.kernel;
    const std::span<const double> beta(v.beta.data(), kernel.parameter_count());
    if (!(v.alpha >= 0.0) || !kernel_parameters_valid(kernel, beta)) return kNegInf;
    const auto& cache = engine_->cache();
    weights_scratch_.resize(cache.weight_class_count());
    for (int k = 0; k < cache.weight_class_count(); ++k)
      weights_scratch_[k] = kernel_effect(kernel, beta, cache.representative(k));
    lp += stats_.infection_log_lik(v.alpha, weights_scratch_);
  }
  return lp;
}

void GibbsChain::update_parameters(bool adapt) {
  stats_ = SufficientStats::compute(engine_->states(), y_, problem_.model, engine_->cache());
  for (auto& b : block_states_) {
    switch (b.kind) {
      case SamplerKind::Slice:
        for (std::size_t k = 0; k < b.params.size(); ++k) {
          const ParamId id = b.params[k];
          ModelParams trial = v_;
          auto f = [&](double x) {
            trial.set(id, x);
            return block_log_target(b, trial);
          };
          v_.set(id, slice_univariate(f, v_.get(id), b.widths[k], b.bounds[k], rng_));
        }
        break;
      case SamplerKind::RandomWalk:
        for (std::size_t k = 0; k < b.params.size(); ++k) {
          const ParamId id = b.params[k];
          ModelParams trial = v_;
          auto f = [&](double x) {
            trial.set(id, x);
            return block_log_target(b, trial);
          };
          double current = f(v_.get(id));
          v_.set(id, b.rw[k].step(f, v_.get(id), current, rng_, adapt));
        }
        break;
      case SamplerKind::FactorSlice: {
        std::vector<double> x(b.params.size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = v_.get(b.params[k]);
        ModelParams trial = v_;
        const FactorSliceSampler::Target f = [&](std::span<const double> z) {
          for (std::size_t k = 0; k < z.size(); ++k) trial.set(b.params[k], z[k]);
          return block_log_target(b, trial);
        };
        b.afss->update(f, x, rng_, adapt);
        for (std::size_t k = 0; k < x.size(); ++k) v_.set(b.params[k], x[k]);
        break;
      }
    }
  }
  engine_->set_params(v_);
}

void GibbsChain::update_states() { engine_->sweep(pinned_, ws_, rng_); }

void GibbsChain::iterate(bool adapt) {
  ++iteration_;
  update_parameters(adapt);
  update_states();
}

void GibbsChain::set_state(const StateMatrix& s, const ModelParams& v) {
  v_ = v;
  engine_->set_params(v);
  engine_->set_states(s);
}

std::uint64_t GibbsChain::adaptation_fingerprint() const noexcept {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& b : block_states_) {
    if (b.afss) h = (h ^ b.afss->adaptation_fingerprint()) * 1099511628211ULL;
    for (const auto& rw : b.rw) h = (h ^ rw.adaptation_fingerprint()) * 1099511628211ULL;
  }
  return h;
}

void GibbsChain::marginal_pointwise(std::vector<double>& out) {
  const int n = y_.individuals();
  const int T = y_.horizon();
  out.resize(static_cast<std::size_t>(n) * T);
  for (int i = 0; i < n; ++i) {
    std::span<double> row(out.data() + static_cast<std::size_t>(i) * T, T);
    if (pinned_[i]) {
      for (int t = 1; t <= T; ++t)
        row[t - 1] = obs_log_density(problem_.model.observation, y_(i, t), engine_->states()(i, t),
                                     y_.previously_detected(i, t), v_.theta);
    } else {
      engine_->marginal_pointwise(i, ws_, row);
    }
  }
}

void GibbsChain::conditional_pointwise(std::vector<double>& out) const {
  const int n = y_.individuals();
  const int T = y_.horizon();
  out.resize(static_cast<std::size_t>(n) * T);
  const auto& s = engine_->states();
  for (int i = 0; i < n; ++i)
    for (int t = 1; t <= T; ++t)
      out[static_cast<std::size_t>(i) * T + t - 1] =
          obs_log_density(problem_.model.observation, y_(i, t), s(i, t), y_.previously_detected(i, t), v_.theta);
}

std::vector<double> GibbsChain::functionals() const {
  const auto& s = engine_->states();
  const int T = s.horizon();
  double end = 0.0;
  double during = 0.0;
  double removed = 0.0;
  for (int i = 0; i < s.individuals(); ++i) {
    if (y_.first_detection(i)) continue;
    const DiseaseState last = s(i, T);
    if (last == DiseaseState::Susceptible) continue;
    end += 1.0;
    if (s(i, 0) == DiseaseState::Susceptible) during += 1.0;
    if (last == DiseaseState::Removed) removed += 1.0;
  }
  return {end, during, removed};
}

ChainArchive GibbsChain::run() {
  ChainArchive a;
  const int n = y_.individuals();
  const int T = y_.horizon();
  const std::size_t cells = static_cast<std::size_t>(n) * T;
  a.state_counts.assign(static_cast<std::size_t>(n) * (T + 1) * 3, 0);
  a.functionals.assign(default_functional_names().size(), {});
  a.waic_marginal = WaicAccumulator(cells);
  a.waic_conditional = WaicAccumulator(cells);
  a.draws.reserve(static_cast<std::size_t>(cfg_.iterations - cfg_.burn_in));
  std::vector<double> pointwise;
  int q = 0;
  const auto started = std::chrono::steady_clock::now();
  try {
    for (q = 1; q <= cfg_.iterations; ++q) {
      if (cfg_.time_budget_seconds > 0.0 &&
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() > cfg_.time_budget_seconds)
        throw Error("time budget exceeded");
      iterate(q <= cfg_.burn_in);
      if (q == cfg_.burn_in)
        for (auto& b : block_states_)
          for (auto& rw : b.rw) rw.reset_counters();
      if (q <= cfg_.burn_in) continue;
      a.draws.push_back(v_);
      if ((q - cfg_.burn_in) % cfg_.thin != 0) continue;

      a.retained.push_back(q);
      const auto& s = engine_->states();
      for (int i = 0; i < n; ++i)
        for (int t = 0; t <= T; ++t)
          ++a.state_counts[(static_cast<std::size_t>(i) * (T + 1) + t) * 3 + index_of(s(i, t))];
      const auto f = functionals();
      for (std::size_t k = 0; k < f.size(); ++k) a.functionals[k].push_back(f[k]);
      const double lj = log_joint(s, y_, v_, problem_.model, problem_.population);
      if (!(lj > kNegInf)) throw Error("log joint density vanished at a retained draw");
      a.log_joint.push_back(lj);
      marginal_pointwise(pointwise);
      a.waic_marginal.add(pointwise);
      conditional_pointwise(pointwise);
      a.waic_conditional.add(pointwise);
    }
  } catch (const Error& e) {
    std::ostringstream os;
    os.precision(17);
    os << "chain " << chain_index_ << " aborted at iteration " << q << ": " << e.what() << "; theta=" << v_.theta
       << " m=" << v_.m << " alpha=" << v_.alpha << " beta=(" << v_.beta[0] << ',' << v_.beta[1] << ','
       << v_.beta[2] << ')';
    a.failure = os.str();
  }
  for (const auto& b : block_states_) {
    if (b.afss) a.afss_singular_fallbacks += b.afss->singular_fallbacks();
    for (std::size_t k = 0; k < b.rw.size(); ++k) a.rw_acceptance.emplace_back(b.params[k], b.rw[k].acceptance_rate());
  }
  return a;
}

// ---------------------------------------------------------------------------
// Driver

int resolve_threads(int requested, int jobs) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HMMILM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::max(1, std::min(t, std::max(jobs, 1)));
}

PosteriorArchive gibbs_run(const FitProblem& problem, const MCMCConfig& cfg) {
  cfg.validate();
  PosteriorArchive out;
  out.individuals = problem.population.size();
  out.horizon = problem.data.horizon();
  out.iterations = cfg.iterations;
  out.burn_in = cfg.burn_in;
  out.thin = cfg.thin;
  out.active = active_parameters(problem.model);
  for (int k = 0; k < kParamCount; ++k) out.sampled[k] = out.active[k] && !cfg.fixed[k];
  out.functional_names = default_functional_names();
  out.chains.resize(cfg.chains);

  detail::run_jobs(cfg.chains, resolve_threads(cfg.threads, cfg.chains), [&](int c) {
    GibbsChain chain(problem, cfg, c);
    out.chains[c] = chain.run();
  });
  return out;
}

}  // namespace hmmilm

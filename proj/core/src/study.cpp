#include "hmmilm/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>

#include "hmmilm/error.hpp"
#include "hmmilm/rng.hpp"
#include "parallel.hpp"

namespace hmmilm {

FitReport fit_and_summarize(const FitProblem& problem, const MCMCConfig& cfg, const ConvergenceThresholds& thresholds) {
  FitReport r;
  const auto start = std::chrono::steady_clock::now();
  r.archive = gibbs_run(problem, cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.convergence = convergence_report(r.archive, thresholds);
  if (!r.archive.failed()) {
    r.params = parameter_summaries(r.archive);
    const auto marginal = r.archive.merged_waic(true);
    if (marginal.draws() >= 2) {
      r.waic_marginal = waic_assemble(marginal);
      r.waic_conditional = waic_assemble(r.archive.merged_waic(false));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Recovery study

namespace {

struct ReplicateResult {
  std::vector<RecoveryRow> rows;
  double seconds = 0.0;
  std::optional<std::string> failure;
};

ReplicateResult run_replicate(const StudyConfig& cfg, int r, int inner_threads) {
  ReplicateResult out;
  Rng sim_rng(Rng::derive(cfg.seed, 2 * static_cast<std::uint64_t>(r)));
  const Outbreak sim = simulate_outbreak(cfg.sim.population, cfg.sim.model, cfg.sim.truth, cfg.sim.horizon, sim_rng);
  FitProblem problem{cfg.sim.population, cfg.sim.model, sim.detections, cfg.priors};
  MCMCConfig mcmc = cfg.mcmc;
  mcmc.seed = Rng::derive(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1);
  mcmc.threads = inner_threads;
  try {
    const FitReport fit = fit_and_summarize(problem, mcmc, cfg.thresholds);
    out.seconds = fit.seconds;
    if (fit.archive.failed()) {
      for (const auto& c : fit.archive.chains)
        if (c.failure) {
          out.failure = *c.failure;
          break;
        }
      return out;
    }
    for (const auto& p : fit.params) {
      if (!fit.archive.sampled[static_cast<int>(p.param)]) continue;
      const double truth = cfg.sim.truth.get(p.param);
      RecoveryRow row;
      row.replicate = r;
      row.param = p.param;
      row.median = p.interval.median;
      row.lo95 = p.interval.lo95;
      row.hi95 = p.interval.hi95;
      row.covered = row.lo95 <= truth && truth <= row.hi95;
      row.converged = fit.convergence.pass;
      out.rows.push_back(row);
    }
  } catch (const Error& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

RecoveryReport replicate_study(const StudyConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("a study needs at least one replication");
  cfg.mcmc.validate();
  cfg.sim.validate();

  const int outer = resolve_threads(cfg.threads, cfg.replications);
  const int inner = outer > 1 ? 1 : cfg.mcmc.threads;
  std::vector<ReplicateResult> results(cfg.replications);
  detail::run_jobs(cfg.replications, outer, [&](int r) { results[r] = run_replicate(cfg, r, inner); });

  RecoveryReport report;
  report.replications = cfg.replications;
  for (int r = 0; r < cfg.replications; ++r) {
    auto& res = results[r];
    report.seconds.push_back(res.seconds);
    if (res.failure) report.failures.emplace_back(r, *res.failure);
    if (!res.rows.empty() && res.rows.front().converged) ++report.converged;
    report.rows.insert(report.rows.end(), res.rows.begin(), res.rows.end());
  }
  aggregate_recovery(report);
  return report;
}

RecoveryReport run_recovery_study(const StudyConfig& cfg) {
  if (cfg.replications < 1) throw ConfigError("recovery study requested with zero replications");
  return replicate_study(cfg);
}

void aggregate_recovery(RecoveryReport& report) {
  report.coverage.clear();
  report.medians.clear();
  std::map<int, std::vector<const RecoveryRow*>> by_param;
  for (const auto& row : report.rows)
    if (row.converged) by_param[static_cast<int>(row.param)].push_back(&row);
  for (const auto& [id, rows] : by_param) {
    CoverageRow c;
    c.param = static_cast<ParamId>(id);
    c.fits = static_cast<int>(rows.size());
    std::vector<double> medians;
    double covered = 0.0;
    double width = 0.0;
    for (const RecoveryRow* r : rows) {
      covered += r->covered ? 1.0 : 0.0;
      width += r->hi95 - r->lo95;
      medians.push_back(r->median);
    }
    c.coverage_pct = 100.0 * covered / static_cast<double>(rows.size());
    c.avg_ci_width = width / static_cast<double>(rows.size());
    report.coverage.push_back(c);
    report.medians.push_back({c.param, quantile(medians, 0.5), quantile(medians, 0.025), quantile(medians, 0.975)});
  }
}

std::pair<int, int> binomial_band(int n, double p, double level) {
  if (n < 1) throw InputError("binomial band needs n >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("binomial probability outside [0, 1]");
  if (!(level > 0.0 && level < 1.0)) throw InputError("band level must lie in (0, 1)");
  const double tail = (1.0 - level) / 2.0;
  std::vector<double> pmf(n + 1);
  for (int k = 0; k <= n; ++k) {
    if (p == 0.0 || p == 1.0) {
      pmf[k] = (p == 0.0 ? k == 0 : k == n) ? 1.0 : 0.0;
      continue;
    }
    const double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    pmf[k] = std::exp(lc + k * std::log(p) + (n - k) * std::log1p(-p));
  }
  int lo = 0;
  double below = 0.0;  // P(X < lo + 1)
  for (int k = 0; k < n; ++k) {
    below += pmf[k];
    if (below > tail) break;
    lo = k + 1;
  }
  int hi = n;
  double above = 0.0;  // P(X > hi - 1)
  for (int k = n; k > 0; --k) {
    above += pmf[k];
    if (above > tail) break;
    hi = k - 1;
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Neighbourhood order selection

int select_neighborhood_order(const std::vector<int>& orders, const std::vector<double>& waics, double threshold) {
  if (orders.empty()) throw InputError("no neighbourhood orders supplied");
  if (waics.empty() || waics.size() > orders.size()) throw InputError("WAIC list does not match the orders");
  for (std::size_t k = 1; k < waics.size(); ++k)
    if (waics[k - 1] - waics[k] < threshold) return orders[k - 1];
  return orders[waics.size() - 1];
}

NeighborhoodSelection run_neighborhood_selection(const GridSpec& grid, const ModelSpec& model,
                                                 const ObservationMatrix& data, const PriorSet& priors,
                                                 const MCMCConfig& cfg, const std::vector<int>& orders,
                                                 double threshold, const ConvergenceThresholds& thresholds) {
  if (orders.empty()) throw ConfigError("neighbourhood selection needs at least one order");
  for (std::size_t k = 1; k < orders.size(); ++k)
    if (orders[k] <= orders[k - 1]) throw ConfigError("neighbourhood orders must be increasing");

  NeighborhoodSelection out;
  std::vector<double> waics;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    FitProblem problem{queen_neighbors(grid, orders[k]), model, data, priors};
    const FitReport fit = fit_and_summarize(problem, cfg, thresholds);
    if (!fit.waic_marginal) throw Error("fit for neighbourhood order " + std::to_string(orders[k]) + " failed");
    out.rows.push_back({orders[k], fit.waic_marginal->waic, fit.convergence.pass});
    waics.push_back(fit.waic_marginal->waic);
    if (k > 0 && waics[k - 1] - waics[k] < threshold) break;
  }
  out.selected = select_neighborhood_order(orders, waics, threshold);
  return out;
}

// ---------------------------------------------------------------------------
// Variant ladder

std::vector<VariantRow> run_variant_ladder(const Population& population, const ObservationMatrix& data,
                                           const std::vector<Variant>& variants, const MCMCConfig& base,
                                           const ConvergenceThresholds& thresholds) {
  std::vector<VariantRow> rows;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    const Variant& var = variants[k];
    FitProblem problem{var.population ? *var.population : population, var.model, data, var.priors};
    MCMCConfig cfg = base;
    cfg.seed = Rng::derive(base.seed, k);
    cfg.fixed = var.fixed;
    cfg.constraints = var.constraints;
    cfg.blocks.clear();
    const FitReport fit = fit_and_summarize(problem, cfg, thresholds);

    VariantRow row;
    row.name = var.name;
    row.waic_marginal = fit.waic_marginal;
    row.waic_conditional = fit.waic_conditional;
    row.params = fit.params;
    row.converged = fit.convergence.pass;
    row.seconds = fit.seconds;
    if (var.model.kernel.kind == KernelKind::HomogeneousWardClosure && !fit.archive.failed()) {
      std::vector<double> values;
      for (const auto& c : fit.archive.chains)
        for (const auto& d : c.draws) values.push_back(r0(var.model.kernel, d.beta[0], d.m, problem.population.size()));
      if (!values.empty()) row.r0 = summarize_interval(values);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Kernel curve

std::vector<CurvePoint> kernel_curve(const std::vector<ModelParams>& draws, const KernelSpec& kernel,
                                     const std::vector<double>& distances) {
  if (draws.empty()) throw InputError("kernel curve needs at least one draw");
  std::vector<CurvePoint> out;
  std::vector<double> values(draws.size());
  for (double d : distances) {
    PairClass pair;
    if (kernel.kind == KernelKind::NeighborhoodOrder) {
      pair.order = static_cast<int>(std::lround(d));
      pair.distance = std::numeric_limits<double>::quiet_NaN();
    } else {
      pair.distance = d;
    }
    for (std::size_t k = 0; k < draws.size(); ++k) {
      const auto& v = draws[k];
      const double b = kernel_effect(kernel, std::span<const double>(v.beta.data(), kernel.parameter_count()), pair);
      values[k] = infection_probability(v.alpha, b);
    }
    out.push_back({d, summarize_interval(values)});
  }
  return out;
}

}  // namespace hmmilm

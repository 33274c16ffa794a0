#include "hmmilm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hmmilm/archive.hpp"
#include "hmmilm/error.hpp"

namespace hmmilm {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// WAIC

WaicAccumulator::WaicAccumulator(std::size_t cells)
    : max_(cells, -kInf),
      scaled_sum_(cells, 0.0),
      finite_(cells, 0),
      mean_(cells, 0.0),
      m2_(cells, 0.0),
      neg_inf_(cells, 0) {}

void WaicAccumulator::add(std::span<const double> log_density) {
  if (log_density.size() != cells()) throw InputError("pointwise vector has the wrong number of cells");
  ++n_;
  for (std::size_t c = 0; c < cells(); ++c) {
    const double x = log_density[c];
    if (std::isnan(x)) throw InputError("NaN pointwise log density");
    if (x == -kInf) {
      neg_inf_[c] = 1;
      continue;
    }
    if (x > max_[c]) {
      scaled_sum_[c] = scaled_sum_[c] * std::exp(max_[c] - x) + 1.0;
      max_[c] = x;
    } else {
      scaled_sum_[c] += std::exp(x - max_[c]);
    }
    const long long k = ++finite_[c];
    const double delta = x - mean_[c];
    mean_[c] += delta / static_cast<double>(k);
    m2_[c] += delta * (x - mean_[c]);
  }
}

void WaicAccumulator::merge(const WaicAccumulator& other) {
  if (other.cells() != cells()) throw InputError("cannot merge WAIC accumulators over different cells");
  for (std::size_t c = 0; c < cells(); ++c) {
    neg_inf_[c] |= other.neg_inf_[c];
    const long long na = finite_[c];
    const long long nb = other.finite_[c];
    if (nb == 0) continue;
    if (na == 0) {
      max_[c] = other.max_[c];
      scaled_sum_[c] = other.scaled_sum_[c];
      finite_[c] = nb;
      mean_[c] = other.mean_[c];
      m2_[c] = other.m2_[c];
      continue;
    }
    const double hi = std::max(max_[c], other.max_[c]);
    scaled_sum_[c] = scaled_sum_[c] * std::exp(max_[c] - hi) + other.scaled_sum_[c] * std::exp(other.max_[c] - hi);
    max_[c] = hi;
    const double n = static_cast<double>(na + nb);
    const double delta = other.mean_[c] - mean_[c];
    mean_[c] += delta * static_cast<double>(nb) / n;
    m2_[c] += other.m2_[c] + delta * delta * static_cast<double>(na) * static_cast<double>(nb) / n;
    finite_[c] = na + nb;
  }
  n_ += other.n_;
}

double WaicAccumulator::log_mean(std::size_t cell) const noexcept {
  if (finite_[cell] == 0 || n_ == 0) return -kInf;
  return max_[cell] + std::log(scaled_sum_[cell]) - std::log(static_cast<double>(n_));
}

double WaicAccumulator::variance(std::size_t cell) const noexcept {
  if (neg_inf_[cell]) return kInf;
  if (n_ < 2) return 0.0;
  return m2_[cell] / static_cast<double>(n_ - 1);
}

WaicResult waic_assemble(const WaicAccumulator& acc) {
  if (acc.draws() < 2) throw InputError("WAIC needs at least two retained draws");
  WaicResult r;
  r.draws = acc.draws();
  r.pointwise_lppd.resize(acc.cells());
  r.pointwise_var.resize(acc.cells());
  for (std::size_t c = 0; c < acc.cells(); ++c) {
    r.pointwise_lppd[c] = acc.log_mean(c);
    r.pointwise_var[c] = acc.variance(c);
    if (acc.saw_neg_inf(c)) ++r.neg_inf_cells;
    r.lppd += r.pointwise_lppd[c];
    r.p_waic += r.pointwise_var[c];
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

WaicResult waic_from_draws(const std::vector<std::vector<double>>& draws) {
  if (draws.empty()) throw InputError("WAIC needs at least two retained draws");
  WaicAccumulator acc(draws.front().size());
  for (const auto& d : draws) acc.add(d);
  return waic_assemble(acc);
}

// ---------------------------------------------------------------------------
// Convergence

FlaggedValue gelman_rubin(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw InputError("Gelman-Rubin needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw InputError("Gelman-Rubin needs chains of length two or more");
  for (const auto& c : chains)
    if (c.size() != n) throw InputError("Gelman-Rubin needs chains of equal length");

  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const auto& c = chains[j];
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : c) ss += (x - mean) * (x - mean);
    means[j] = mean;
    w += ss / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  if (!(w > 0.0)) return {kInf, true};
  const double nn = static_cast<double>(n);
  const double v = (nn - 1.0) / nn * w + b / nn;
  return {std::max(1.0, std::sqrt(v / w)), false};
}

FlaggedValue effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 10) throw InputError("effective sample size needs at least 10 draws");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) d[t] = x[t] - mean;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += d[t] * d[t + lag];
    return s / static_cast<double>(n);
  };
  const double g0 = autocov(0);
  if (!(g0 > 0.0)) return {0.0, true};

  // Pairs Gamma_k = rho_{2k} + rho_{2k+1}, summed while positive.
  double sum_pairs = 0.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / g0;
    if (!(pair > 0.0)) break;
    sum_pairs += pair;
  }
  const double tau = -1.0 + 2.0 * sum_pairs;
  const double nn = static_cast<double>(n);
  if (!(tau > 0.0)) return {nn, false};
  return {std::min(nn, nn / tau), false};
}

FlaggedValue effective_sample_size(const std::vector<std::vector<double>>& chains) {
  FlaggedValue total;
  for (const auto& c : chains) {
    const auto e = effective_sample_size(std::span<const double>(c));
    total.value += e.value;
    total.flagged = total.flagged || e.flagged;
  }
  return total;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

IntervalSummary summarize_interval(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.025), quantile(values, 0.975)};
}

double r0(const KernelSpec& kernel, double beta, double m, int n) {
  if (kernel.kind != KernelKind::HomogeneousWardClosure)
    throw NotApplicableError("R0 = (N-1) beta m is only defined for homogeneous mixing");
  if (n < 1) throw InputError("population size must be positive");
  return static_cast<double>(n - 1) * beta * m;
}

// ---------------------------------------------------------------------------
// Archive summaries

std::vector<std::vector<double>> PosteriorArchive::parameter_chains(ParamId id) const {
  std::vector<std::vector<double>> out;
  out.reserve(chains.size());
  for (const auto& c : chains) {
    std::vector<double> v;
    v.reserve(c.draws.size());
    for (const auto& d : c.draws) v.push_back(d.get(id));
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> PosteriorArchive::pooled(ParamId id) const {
  std::vector<double> out;
  for (const auto& c : chains)
    for (const auto& d : c.draws) out.push_back(d.get(id));
  return out;
}

WaicAccumulator PosteriorArchive::merged_waic(bool marginal) const {
  if (chains.empty()) return {};
  WaicAccumulator acc = marginal ? chains.front().waic_marginal : chains.front().waic_conditional;
  for (std::size_t c = 1; c < chains.size(); ++c)
    acc.merge(marginal ? chains[c].waic_marginal : chains[c].waic_conditional);
  return acc;
}

StateSummary summarize_states(const PosteriorArchive& archive) {
  StateSummary s;
  s.individuals = archive.individuals;
  s.horizon = archive.horizon;
  const std::size_t cells = static_cast<std::size_t>(archive.individuals) * (archive.horizon + 1);
  std::vector<double> totals(cells * 3, 0.0);
  long long retained = 0;
  for (const auto& c : archive.chains) {
    retained += static_cast<long long>(c.retained.size());
    if (c.state_counts.size() != totals.size()) continue;
    for (std::size_t k = 0; k < totals.size(); ++k) totals[k] += c.state_counts[k];
  }
  if (retained == 0) throw InputError("the archive holds no retained draws");
  s.probs.resize(cells);
  for (std::size_t k = 0; k < cells; ++k)
    for (int st = 0; st < 3; ++st) s.probs[k][st] = totals[k * 3 + st] / static_cast<double>(retained);
  for (std::size_t f = 0; f < archive.functional_names.size(); ++f) {
    std::vector<double> values;
    for (const auto& c : archive.chains)
      if (f < c.functionals.size()) values.insert(values.end(), c.functionals[f].begin(), c.functionals[f].end());
    if (!values.empty()) s.functionals.emplace_back(archive.functional_names[f], summarize_interval(values));
  }
  return s;
}

ConvergenceReport convergence_report(const PosteriorArchive& archive, const ConvergenceThresholds& thresholds) {
  ConvergenceReport report;
  report.pass = !archive.failed();
  for (ParamId id : kAllParams) {
    if (!archive.sampled[static_cast<int>(id)]) continue;
    ParamConvergence pc;
    pc.param = id;
    const auto chains = archive.parameter_chains(id);
    bool usable = !archive.failed() && !chains.empty();
    for (const auto& c : chains) usable = usable && c.size() >= 10;
    if (!usable) {
      pc.gelman_rubin = std::numeric_limits<double>::quiet_NaN();
      pc.ess = 0.0;
      pc.pass = false;
      report.pass = false;
      report.params.push_back(pc);
      continue;
    }
    pc.gelman_rubin = chains.size() >= 2 ? gelman_rubin(chains).value : std::numeric_limits<double>::quiet_NaN();
    pc.ess = effective_sample_size(chains).value;
    const bool rhat_ok = chains.size() < 2 || pc.gelman_rubin < thresholds.max_gelman_rubin;
    pc.pass = rhat_ok && pc.ess > thresholds.min_ess;
    report.pass = report.pass && pc.pass;
    report.params.push_back(pc);
  }
  return report;
}

std::vector<ParamSummary> parameter_summaries(const PosteriorArchive& archive) {
  std::vector<ParamSummary> out;
  for (ParamId id : kAllParams) {
    if (!archive.active[static_cast<int>(id)]) continue;
    const auto values = archive.pooled(id);
    if (values.empty()) continue;
    out.push_back({id, summarize_interval(values)});
  }
  return out;
}

}  // namespace hmmilm

#include "hmmilm/iffbs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "hmmilm/error.hpp"
#include "hmmilm/logspace.hpp"
#include "hmmilm/rng.hpp"

namespace hmmilm {

namespace {

constexpr std::size_t kDenseClassLimit = 64;
constexpr std::size_t kDenseCellLimit = std::size_t{1} << 26;

bool infectious(DiseaseState s) noexcept { return s == DiseaseState::Infectious; }

// Draws an index from unnormalised log weights with a single uniform.
int draw_log_categorical(const std::array<double, 3>& lw, Rng& rng) {
  const double hi = std::max({lw[0], lw[1], lw[2]});
  std::array<double, 3> w{};
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    w[k] = std::exp(lw[k] - hi);
    total += w[k];
  }
  double u = rng.uniform() * total;
  for (int k = 0; k < 3; ++k) {
    if (w[k] <= 0.0) continue;
    if (u < w[k]) return k;
    u -= w[k];
  }
  // Rounding at the top end: fall back to the last state with mass.
  for (int k = 2; k >= 0; --k)
    if (w[k] > 0.0) return k;
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// PressureCache

PressureCache::PressureCache(const Population& pop, const ModelSpec& model, const StateMatrix& states)
    : pop_(pop), model_(model), states_(states) {
  if (states.individuals() != pop.size()) throw InputError("state matrix does not match the population");
  width_ = static_cast<std::size_t>(states.horizon()) + 1;

  // Key: what the kernel reads from a pair class.
  std::map<std::pair<std::uint64_t, int>, int> keys;
  class_map_.resize(pop.class_count());
  for (int c = 0; c < pop.class_count(); ++c) {
    const PairClass& pc = pop.pair_class(c);
    std::pair<std::uint64_t, int> key{0, 0};
    switch (model.kernel.kind) {
      case KernelKind::HomogeneousWardClosure: break;
      case KernelKind::NeighborhoodOrder: key.second = pc.order; break;
      default: key.first = std::bit_cast<std::uint64_t>(pc.distance); break;
    }
    auto [it, inserted] = keys.try_emplace(key, static_cast<int>(representatives_.size()));
    if (inserted) representatives_.push_back(pc);
    class_map_[c] = it->second;
  }
  classes_ = representatives_.size();
  weights_.assign(classes_, 0.0);
  const std::size_t cells = static_cast<std::size_t>(pop.size()) * width_;
  dense_ = classes_ <= kDenseClassLimit && cells * classes_ <= kDenseCellLimit;
  pressure_.assign(cells, 0.0);
  if (dense_) counts_.assign(cells * classes_, 0);
  rebuild();
}

double PressureCache::from_counts(const int* c) const noexcept {
  double p = 0.0;
  for (std::size_t k = 0; k < classes_; ++k)
    if (c[k] != 0) p += c[k] * weights_[k];
  return p;
}

double PressureCache::direct_sum(int j, int t, int skip, bool skip_infectious) const noexcept {
  double p = 0.0;
  for (const Neighbor& nb : pop_.neighbors(j)) {
    const bool inf = nb.id == skip ? skip_infectious : infectious(states_(nb.id, t));
    if (inf) p += weights_[class_map_[nb.cls]];
  }
  return p;
}

void PressureCache::rebuild() {
  const int n = pop_.size();
  const int T = states_.horizon();
  if (dense_) {
    std::fill(counts_.begin(), counts_.end(), 0);
    for (int j = 0; j < n; ++j)
      for (int t = 0; t <= T; ++t) {
        int* c = counts(j, t);
        for (const Neighbor& nb : pop_.neighbors(j))
          if (infectious(states_(nb.id, t))) ++c[class_map_[nb.cls]];
      }
  }
  for (int j = 0; j < n; ++j)
    for (int t = 0; t <= T; ++t)
      pressure_[index(j, t)] = dense_ ? from_counts(counts(j, t)) : direct_sum(j, t, -1, false);
}

void PressureCache::set_beta(std::span<const double> beta) {
  for (std::size_t k = 0; k < classes_; ++k) weights_[k] = kernel_effect(model_.kernel, beta, representatives_[k]);
  const int n = pop_.size();
  const int T = states_.horizon();
  for (int j = 0; j < n; ++j)
    for (int t = 0; t <= T; ++t)
      pressure_[index(j, t)] = dense_ ? from_counts(counts(j, t)) : direct_sum(j, t, -1, false);
}

void PressureCache::apply_row_change(int i, std::span<const DiseaseState> old_row) {
  const int T = states_.horizon();
  for (int t = 0; t <= T; ++t) {
    const bool was = infectious(old_row[t]);
    const bool now = infectious(states_(i, t));
    if (was == now) continue;
    for (const Neighbor& nb : pop_.reverse_neighbors(i)) {
      const std::size_t at = index(nb.id, t);
      if (dense_) {
        int* c = counts(nb.id, t);
        c[class_map_[nb.cls]] += now ? 1 : -1;
        pressure_[at] = from_counts(c);
      } else {
        pressure_[at] = direct_sum(nb.id, t, -1, false);
      }
    }
  }
}

std::pair<double, double> PressureCache::pressure_pair(int j, int t, int /*i*/, int cls, bool i_infectious) const noexcept {
  const double w = weights_[class_map_[cls]];
  const double p = pressure_[index(j, t)];
  if (!i_infectious) return {p, p + w};
  // Exact whenever i is the only infectious neighbour; clamped against rounding otherwise.
  return {std::max(0.0, p - w), p};
}

void PressureCache::infectious_profile(int j, int t, std::vector<std::pair<int, int>>& out) const {
  if (dense_) {
    const int* c = counts(j, t);
    for (std::size_t k = 0; k < classes_; ++k)
      if (c[k] != 0) out.emplace_back(static_cast<int>(k), c[k]);
    return;
  }
  const std::size_t start = out.size();
  for (const Neighbor& nb : pop_.neighbors(j))
    if (infectious(states_(nb.id, t))) out.emplace_back(class_map_[nb.cls], 1);
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end());
  // Merge runs of the same class.
  std::size_t w = start;
  for (std::size_t r = start; r < out.size(); ++r) {
    if (w > start && out[w - 1].first == out[r].first)
      out[w - 1].second += out[r].second;
    else
      out[w++] = out[r];
  }
  out.resize(w);
}

// ---------------------------------------------------------------------------
// FilterWorkspace

void FilterWorkspace::resize(int T) {
  horizon = T;
  const auto rows = static_cast<std::size_t>(T) + 1;
  log_filtered.assign(rows, {kNegInf, kNegInf, kNegInf});
  log_predictive.assign(rows, {kNegInf, kNegInf, kNegInf});
  log_obs.assign(rows, {0.0, 0.0, 0.0});
  log_forward.assign(rows, {0.0, 0.0});
  hazard.assign(rows, 0.0);
}

// ---------------------------------------------------------------------------
// IffbsEngine

IffbsEngine::IffbsEngine(const Population& pop, const ModelSpec& model, const ObservationMatrix& y,
                         StateMatrix initial, const ModelParams& v)
    : pop_(pop), model_(model), y_(y), states_(std::move(initial)), cache_(pop, model, states_) {
  if (y.individuals() != pop.size() || y.horizon() != states_.horizon())
    throw InputError("observation matrix does not match the state matrix");
  scratch_.resize(static_cast<std::size_t>(states_.horizon()) + 1);
  set_params(v);
}

void IffbsEngine::set_params(const ModelParams& v) {
  if (!(v.m > 1.0)) throw ParameterDomainError("mean infectious duration m must exceed 1");
  const std::span<const double> beta(v.beta.data(), model_.kernel.parameter_count());
  bool same = weights_ready_;
  for (std::size_t k = 0; k < beta.size() && same; ++k)
    same = std::bit_cast<std::uint64_t>(beta[k]) == std::bit_cast<std::uint64_t>(v_.beta[k]);
  if (!same) {
    cache_.set_beta(beta);
    weights_ready_ = true;
  }
  v_ = v;
  log_stay_ = std::log1p(-1.0 / v.m);
  log_remove_ = -std::log(v.m);
}

void IffbsEngine::set_states(const StateMatrix& states) {
  if (states.individuals() != states_.individuals() || states.horizon() != states_.horizon())
    throw InputError("state matrix dimensions changed");
  states_ = states;
  cache_.rebuild();
}

void IffbsEngine::set_row(int i, std::span<const DiseaseState> row) {
  auto dst = states_.row(i);
  if (row.size() != dst.size()) throw InputError("row length does not match the horizon");
  std::copy(dst.begin(), dst.end(), scratch_.begin());
  std::copy(row.begin(), row.end(), dst.begin());
  cache_.apply_row_change(i, scratch_);
}

std::pair<double, double> IffbsEngine::forward_products(int i, int t) const noexcept {
  double f0 = 0.0;
  double f1 = 0.0;
  const double mult = model_.contact_multiplier(t + 1);
  const bool i_inf = infectious(states_(i, t));
  for (const Neighbor& nb : pop_.reverse_neighbors(i)) {
    const int j = nb.id;
    if (states_(j, t) != DiseaseState::Susceptible) continue;
    const auto [p0, p1] = cache_.pressure_pair(j, t, i, nb.cls, i_inf);
    const double h0 = v_.alpha + mult * p0;
    const double h1 = v_.alpha + mult * p1;
    switch (states_(j, t + 1)) {
      case DiseaseState::Susceptible:
        f0 -= h0;
        f1 -= h1;
        break;
      case DiseaseState::Infectious:
        f0 += log1mexp(h0);
        f1 += log1mexp(h1);
        break;
      case DiseaseState::Removed:
        return {kNegInf, kNegInf};
    }
  }
  return {f0, f1};
}

void IffbsEngine::normalize_row(int i, int t, std::array<double, 3>& row) const {
  const double z = log_sum_exp(row);
  if (z == kNegInf || std::isnan(z)) throw FilterDegeneracyError("filtered probabilities vanish", i, t);
  for (double& x : row) x -= z;
}

std::array<double, 3> IffbsEngine::predict(const FilterWorkspace& ws, int t) const noexcept {
  std::array<double, 3> pred{};
  const auto& prev = ws.log_filtered[t - 1];
  for (int s = 0; s < 3; ++s) {
    std::array<double, 3> terms{};
    for (int k = 0; k < 3; ++k)
      terms[k] = prev[k] + log_transition(state_at(k), state_at(s), ws.hazard[t], log_stay_, log_remove_);
    pred[s] = log_sum_exp(terms);
  }
  return pred;
}

void IffbsEngine::filter_initial(int i, FilterWorkspace& ws) const {
  if (ws.horizon != horizon()) ws.resize(horizon());
  auto& row = ws.log_filtered[0];
  if (horizon() > 0) {
    const auto [f0, f1] = forward_products(i, 0);
    ws.log_forward[0] = {f0, f1};
  }
  for (int s = 0; s < 3; ++s) {
    const double init = model_.initial.log_prob(i, state_at(s));
    ws.log_predictive[0][s] = init;
    ws.log_obs[0][s] = 0.0;
    const double fp = horizon() > 0 ? ws.log_forward[0][s == 1 ? 1 : 0] : 0.0;
    row[s] = init + fp;
  }
  normalize_row(i, 0, row);
}

void IffbsEngine::filter_step(int i, int t, FilterWorkspace& ws) const {
  const int T = horizon();
  ws.hazard[t] = v_.alpha + model_.contact_multiplier(t) * cache_.pressure(i, t - 1);
  ws.log_predictive[t] = predict(ws, t);
  if (t < T) {
    const auto [f0, f1] = forward_products(i, t);
    ws.log_forward[t] = {f0, f1};
  }
  const bool y = y_(i, t);
  const bool prev = y_.previously_detected(i, t);
  auto& row = ws.log_filtered[t];
  for (int s = 0; s < 3; ++s) {
    ws.log_obs[t][s] = obs_log_density(model_.observation, y, state_at(s), prev, v_.theta);
    const double fp = t < T ? ws.log_forward[t][s == 1 ? 1 : 0] : 0.0;
    row[s] = ws.log_obs[t][s] + ws.log_predictive[t][s] + fp;
  }
  normalize_row(i, t, row);
}

void IffbsEngine::filter_final(int i, FilterWorkspace& ws) const { filter_step(i, horizon(), ws); }

void IffbsEngine::filter(int i, FilterWorkspace& ws) const {
  filter_initial(i, ws);
  for (int t = 1; t < horizon(); ++t) filter_step(i, t, ws);
  if (horizon() > 0) filter_final(i, ws);
}

void IffbsEngine::backward_sample(int i, const FilterWorkspace& ws, Rng& rng, std::span<DiseaseState> path) const {
  const int T = horizon();
  path[T] = state_at(draw_log_categorical(ws.log_filtered[T], rng));
  for (int t = T - 1; t >= 0; --t) {
    std::array<double, 3> lw{};
    for (int s = 0; s < 3; ++s)
      lw[s] = ws.log_filtered[t][s] + log_transition(state_at(s), path[t + 1], ws.hazard[t + 1], log_stay_, log_remove_);
    if (log_sum_exp(lw) == kNegInf) throw FilterDegeneracyError("backward sampling weights vanish", i, t);
    path[t] = state_at(draw_log_categorical(lw, rng));
  }
}

double IffbsEngine::log_path_probability(int i, const FilterWorkspace& ws, std::span<const DiseaseState> path) const {
  (void)i;
  const int T = horizon();
  double lp = ws.log_filtered[T][index_of(path[T])];
  for (int t = T - 1; t >= 0 && lp > kNegInf; --t) {
    std::array<double, 3> lw{};
    for (int s = 0; s < 3; ++s)
      lw[s] = ws.log_filtered[t][s] + log_transition(state_at(s), path[t + 1], ws.hazard[t + 1], log_stay_, log_remove_);
    const double z = log_sum_exp(lw);
    if (z == kNegInf) return kNegInf;
    lp += lw[index_of(path[t])] - z;
  }
  return lp;
}

void IffbsEngine::update_individual(int i, FilterWorkspace& ws, Rng& rng) {
  filter(i, ws);
  auto row = states_.row(i);
  std::copy(row.begin(), row.end(), scratch_.begin());
  backward_sample(i, ws, rng, row);
  cache_.apply_row_change(i, scratch_);
}

void IffbsEngine::sweep(std::span<const std::uint8_t> pinned, FilterWorkspace& ws, Rng& rng) {
  const int n = pop_.size();
  for (int i = 0; i < n; ++i) {
    if (!pinned.empty() && pinned[i]) continue;
    update_individual(i, ws, rng);
  }
}

void IffbsEngine::marginal_pointwise(int i, FilterWorkspace& ws, std::span<double> out) const {
  filter(i, ws);
  for (int t = 1; t <= horizon(); ++t) {
    std::array<double, 3> terms{};
    for (int s = 0; s < 3; ++s) terms[s] = ws.log_obs[t][s] + ws.log_predictive[t][s];
    out[t - 1] = log_sum_exp(terms);
  }
}

}  // namespace hmmilm

#include "hmmilm/samplers.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cstring>

namespace hmmilm {

namespace {

class Fnv {
 public:
  void add(const void* data, std::size_t n) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < n; ++k) {
      h_ ^= p[k];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void add(const std::vector<T>& v) noexcept {
    add(v.data(), v.size() * sizeof(T));
  }
  template <class T>
  void add_value(const T& v) noexcept {
    add(&v, sizeof(T));
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

// ---------------------------------------------------------------------------
// Factor slice sampler

FactorSliceSampler::FactorSliceSampler(std::vector<double> initial_widths, std::vector<Bounds> bounds,
                                       int adapt_interval)
    : base_(std::move(initial_widths)), bounds_(std::move(bounds)), interval_(adapt_interval) {
  const std::size_t d = base_.size();
  if (d == 0) throw InputError("factor slice sampler needs at least one dimension");
  if (bounds_.size() != d) throw InputError("one bound pair per dimension is required");
  if (interval_ < 1) throw InputError("adaptation interval must be positive");
  directions_.assign(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) directions_[k * d + k] = 1.0;
  scale_.assign(d, 1.0);
  expansions_.assign(d, 0);
  mean_.assign(d, 0.0);
  comoment_.assign(d * d, 0.0);
}

std::vector<double> FactorSliceSampler::widths() const {
  std::vector<double> w(base_.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = base_[k] * scale_[k];
  return w;
}

void FactorSliceSampler::update(const Target& log_target, std::vector<double>& x, Rng& rng, bool adapt) {
  const std::size_t d = base_.size();
  if (x.size() != d) throw InputError("factor slice state has the wrong dimension");
  std::vector<double> dir(d);
  std::vector<double> trial(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t r = 0; r < d; ++r) dir[r] = directions_[r * d + k];
    Bounds range;
    for (std::size_t r = 0; r < d; ++r) {
      if (dir[r] == 0.0) continue;
      double a = (bounds_[r].lower - x[r]) / dir[r];
      double b = (bounds_[r].upper - x[r]) / dir[r];
      if (a > b) std::swap(a, b);
      range.lower = std::max(range.lower, a);
      range.upper = std::min(range.upper, b);
    }
    auto along = [&](double s) {
      for (std::size_t r = 0; r < d; ++r) trial[r] = x[r] + s * dir[r];
      return log_target(trial);
    };
    SliceStats stats;
    const double s = slice_univariate(along, 0.0, base_[k] * scale_[k], range, rng, &stats);
    for (std::size_t r = 0; r < d; ++r) x[r] += s * dir[r];
    if (adapt) expansions_[k] += stats.expansions;
  }
  if (!adapt) return;
  record(x);
  if (++since_adapt_ == interval_) adapt_now();
}

void FactorSliceSampler::record(const std::vector<double>& x) {
  const std::size_t d = x.size();
  ++count_;
  std::vector<double> delta(d);
  for (std::size_t r = 0; r < d; ++r) {
    delta[r] = x[r] - mean_[r];
    mean_[r] += delta[r] / static_cast<double>(count_);
  }
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) comoment_[r * d + c] += delta[r] * (x[c] - mean_[c]);
}

void FactorSliceSampler::adapt_now() {
  const std::size_t d = base_.size();
  for (std::size_t k = 0; k < d; ++k) {
    const double mean_expansions = static_cast<double>(expansions_[k]) / interval_;
    scale_[k] *= std::exp2(std::clamp(mean_expansions - 1.0, -2.0, 3.0));
    expansions_[k] = 0;
  }
  since_adapt_ = 0;
  if (count_ < static_cast<long long>(d) + 1) return;
  ++refreshes_;

  Eigen::MatrixXd cov(d, d);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < d; ++c) cov(r, c) = comoment_[r * d + c] / static_cast<double>(count_ - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  bool singular = solver.info() != Eigen::Success;
  if (!singular) {
    const auto& ev = solver.eigenvalues();
    const double top = ev.maxCoeff();
    singular = !(top > 0.0) || !ev.allFinite() || ev.minCoeff() <= 1e-12 * top;
  }
  if (singular) {
    ++singular_fallbacks_;
    if (eigen_basis_) {
      // Back to the axes, with widths equal to the marginal standard deviations where known.
      std::fill(directions_.begin(), directions_.end(), 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        directions_[k * d + k] = 1.0;
        const double sd = std::sqrt(cov(k, k));
        if (sd > 0.0 && std::isfinite(sd)) base_[k] = sd;
        scale_[k] = 2.0;
      }
      eigen_basis_ = false;
    }
    return;
  }
  const auto& vecs = solver.eigenvectors();
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t k = 0; k < d; ++k) directions_[r * d + k] = vecs(r, k);
  for (std::size_t k = 0; k < d; ++k) base_[k] = std::sqrt(solver.eigenvalues()(k));
  if (!eigen_basis_) std::fill(scale_.begin(), scale_.end(), 2.0);
  eigen_basis_ = true;
}

std::uint64_t FactorSliceSampler::adaptation_fingerprint() const noexcept {
  Fnv h;
  h.add(directions_);
  h.add(base_);
  h.add(scale_);
  h.add(expansions_);
  h.add(mean_);
  h.add(comoment_);
  h.add_value(count_);
  h.add_value(since_adapt_);
  h.add_value(refreshes_);
  return h.value();
}

// ---------------------------------------------------------------------------
// Adaptive random-walk Metropolis

AdaptiveRandomWalk::AdaptiveRandomWalk(double initial_scale, double target_rate, int batch)
    : scale_(initial_scale), target_(target_rate), batch_(batch) {
  if (!(initial_scale > 0.0)) throw InputError("random-walk scale must be positive");
  if (!(target_rate > 0.0 && target_rate < 1.0)) throw InputError("acceptance target must lie in (0, 1)");
  if (batch < 1) throw InputError("adaptation batch must be positive");
}

void AdaptiveRandomWalk::adapt_now() {
  const double rate = static_cast<double>(batch_accepted_) / batch_proposals_;
  const double gamma = std::pow(batches_ + 3.0, -0.8);
  scale_ *= std::exp(10.0 * gamma * (rate - target_));
  ++batches_;
  batch_proposals_ = 0;
  batch_accepted_ = 0;
}

std::uint64_t AdaptiveRandomWalk::adaptation_fingerprint() const noexcept {
  Fnv h;
  h.add_value(scale_);
  h.add_value(batches_);
  h.add_value(batch_proposals_);
  h.add_value(batch_accepted_);
  return h.value();
}

// ---------------------------------------------------------------------------
// Initial values

namespace {

bool row_feasible(const ObservationMatrix& y, const ModelSpec& model, int i, std::span<const DiseaseState> row) {
  if (model.initial.log_prob(i, row[0]) == kNegInf) return false;
  const int T = y.horizon();
  for (int t = 1; t <= T; ++t) {
    if (log_transition(row[t - 1], row[t], 1.0, std::log(0.5), std::log(0.5)) == kNegInf) return false;
    if (obs_log_density(model.observation, y(i, t), row[t], y.previously_detected(i, t), 0.5) == kNegInf) return false;
  }
  return true;
}

void fill(std::span<DiseaseState> row, int from, int to, DiseaseState s) {
  for (int t = std::max(from, 0); t <= to && t < static_cast<int>(row.size()); ++t) row[t] = s;
}

}  // namespace

StateMatrix initialize_states(const ObservationMatrix& y, const ModelSpec& model) {
  const int n = y.individuals();
  const int T = y.horizon();
  if (model.initial.individuals() != n) throw InputError("initial distribution does not match the data");
  StateMatrix s(n, T);
  for (int i = 0; i < n; ++i) {
    auto row = s.row(i);
    const auto first = y.first_detection(i);
    const auto& p0 = model.initial.probs(i);
    if (!first) {
      if (p0[0] > 0.0) continue;
      if (p0[2] > 0.0) {
        fill(row, 0, T, DiseaseState::Removed);
      } else if (model.observation == ObservationModel::KnownRemoval) {
        fill(row, 0, T, DiseaseState::Infectious);
      } else {
        fill(row, 0, 0, DiseaseState::Infectious);
        fill(row, 1, T, DiseaseState::Removed);
      }
    } else {
      const int k = *first;
      int last = k;
      for (int t = k; t <= T; ++t)
        if (y(i, t)) last = t;
      switch (model.observation) {
        case ObservationModel::SingleDetection:
        case ObservationModel::KnownInfection:
          fill(row, k, k, DiseaseState::Infectious);
          fill(row, k + 1, T, DiseaseState::Removed);
          if (p0[0] == 0.0) fill(row, 0, k, DiseaseState::Infectious);
          break;
        case ObservationModel::ContinuousTesting:
          fill(row, k, last, DiseaseState::Infectious);
          fill(row, last + 1, T, DiseaseState::Removed);
          if (p0[0] == 0.0) fill(row, 0, k, DiseaseState::Infectious);
          break;
        case ObservationModel::KnownRemoval:
          fill(row, k - 1, k - 1, DiseaseState::Infectious);
          fill(row, k, T, DiseaseState::Removed);
          if (p0[0] == 0.0) fill(row, 0, k - 1, DiseaseState::Infectious);
          break;
      }
    }
    if (!row_feasible(y, model, i, row))
      throw DataError("no state path of individual " + std::to_string(i) +
                      " is consistent with its detections and the initial distribution");
  }
  return s;
}

StateMatrix initialize_states(const ObservationMatrix& y, const ModelSpec& model, const Population& pop,
                              bool zero_background) {
  StateMatrix s = initialize_states(y, model);
  if (!zero_background) return s;
  // Without background infection every 1 -> 2 step needs an infectious neighbour with open
  // contacts at the previous time. Individuals lacking one are made infectious from t = 0.
  const int n = s.individuals();
  const int T = s.horizon();
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      auto row = s.row(i);
      for (int t = 1; t <= T; ++t) {
        if (!(row[t - 1] == DiseaseState::Susceptible && row[t] == DiseaseState::Infectious)) continue;
        bool source = false;
        if (model.contact_multiplier(t) > 0.0)
          for (const Neighbor& nb : pop.neighbors(i))
            if (s(nb.id, t - 1) == DiseaseState::Infectious) source = true;
        if (source) break;
        if (model.initial.probs(i)[1] <= 0.0)
          throw DataError("individual " + std::to_string(i) +
                          " cannot be infected without background infection and cannot start infectious");
        fill(row, 0, t, DiseaseState::Infectious);
        if (!row_feasible(y, model, i, row))
          throw DataError("no valid starting path for individual " + std::to_string(i) +
                          " without background infection");
        changed = true;
        break;
      }
    }
  }
  return s;
}

std::array<bool, kParamCount> active_parameters(const ModelSpec& model) {
  std::array<bool, kParamCount> a{};
  a[static_cast<int>(ParamId::Theta)] = uses_theta(model.observation);
  a[static_cast<int>(ParamId::M)] = true;
  a[static_cast<int>(ParamId::Alpha)] = true;
  const int nb = model.kernel.parameter_count();
  for (int k = 0; k < nb; ++k) a[static_cast<int>(ParamId::Beta0) + k] = true;
  return a;
}

ModelParams initialize_params(const ModelSpec& model, const PriorSet& priors,
                              const std::array<std::optional<double>, kParamCount>& fixed, Rng& rng) {
  const auto active = active_parameters(model);
  const int nb = model.kernel.parameter_count();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    ModelParams v;
    for (ParamId id : kAllParams) {
      const int k = static_cast<int>(id);
      if (!active[k]) continue;
      v.set(id, fixed[k] ? *fixed[k] : priors[k].sample(rng));
    }
    if (!(v.m > 1.0)) continue;
    if (!(v.alpha >= 0.0)) continue;
    if (uses_theta(model.observation) && !(v.theta > 0.0 && v.theta <= 1.0)) continue;
    if (!kernel_parameters_valid(model.kernel, std::span<const double>(v.beta.data(), nb))) continue;
    auto free = active;
    for (int k = 0; k < kParamCount; ++k) free[k] = free[k] && !fixed[k];
    if (log_prior(v, priors, free) == kNegInf) continue;
    return v;
  }
  throw ConfigError("could not draw admissible starting parameters from the priors");
}

}  // namespace hmmilm

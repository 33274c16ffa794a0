#include "stats.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hmmilm::testing {

double sample_mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double batch_means_se(std::span<const double> x, int batches) {
  const std::size_t size = x.size() / static_cast<std::size_t>(batches);
  if (size < 2) throw std::invalid_argument("too few draws for batch means");
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) means.push_back(sample_mean(x.subspan(b * size, size)));
  return std::sqrt(sample_variance(means) / batches);
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double chi_square_upper(double statistic, double dof) {
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

double ks_uniform_p(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0.0;
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const double f = std::clamp(draws[k], 0.0, 1.0);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  for (int k = 1; k < 200; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> ar1_series(double phi, int n, unsigned long long seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> e(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  double prev = e(gen) / std::sqrt(1.0 - phi * phi);
  for (auto& v : x) {
    prev = phi * prev + e(gen);
    v = prev;
  }
  return x;
}

}  // namespace hmmilm::testing

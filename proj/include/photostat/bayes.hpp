#pragma once

#include <cmath>
#include <stdexcept>

#include "photostat/distribution.hpp"
#include "photostat/forward.hpp"

namespace photostat {

/// Posterior source distribution Q(n|k) = P(k|n) S(n) / P(k) for a detected
/// count k. Accepts either a loss or a composed channel, so the dark-count
/// posterior is supported uniformly.
inline PhotonNumberDistribution posterior(const PhotonNumberDistribution& prior,
                                          const TransferMatrix& channel, int k) {
  if (prior.truncation() != channel.truncation)
    throw std::invalid_argument("truncation mismatch between prior and channel");
  if (k < 0 || k > channel.truncation)
    throw std::invalid_argument("detected count outside channel truncation");
  const int s = channel.size();
  long double p_k = 0.0L;
  for (int n = 0; n < s; ++n)
    p_k += channel(k, n) * prior.probs[static_cast<std::size_t>(n)];
  if (!(p_k > 1e-300L))
    throw std::domain_error(
        "impossible observation: P(k) vanishes under this prior and channel");
  PhotonNumberDistribution post;
  post.probs.resize(static_cast<std::size_t>(s));
  for (int n = 0; n < s; ++n)
    post.probs[static_cast<std::size_t>(n)] = static_cast<double>(
        channel(k, n) * prior.probs[static_cast<std::size_t>(n)] / p_k);
  return post;
}

/// Closed-form posterior for a coherent prior through a pure loss channel:
/// a Poisson distribution in l = n - k with mean n_bar (1 - eta), the
/// average number of photons that fail to register. Returns 0 for n < k.
inline double coherent_posterior_pmf(double mean, double efficiency, int k, int n) {
  if (!std::isfinite(mean) || mean <= 0.0)
    throw std::invalid_argument("coherent mean must be finite and positive");
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("efficiency must lie in [0,1]");
  if (k < 0 || n < 0) throw std::invalid_argument("photon numbers must be >= 0");
  if (n < k) return 0.0;
  const double missed_mean = mean * (1.0 - efficiency);
  const int l = n - k;
  if (missed_mean == 0.0) return l == 0 ? 1.0 : 0.0;
  return std::exp(-missed_mean + l * std::log(missed_mean) - log_factorial(l));
}

}  // namespace photostat

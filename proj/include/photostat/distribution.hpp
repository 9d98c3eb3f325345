#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "photostat/special.hpp"

namespace photostat {

inline constexpr double kDefaultSumTolerance = 1e-9;

/// Probability vector over photon number 0..N. Truncations of infinite
/// distributions carry their tail deficit in the sum; nothing renormalizes
/// implicitly (see renormalized()).
struct PhotonNumberDistribution {
  std::vector<double> probs;

  int truncation() const { return static_cast<int>(probs.size()) - 1; }
  double operator[](int n) const { return probs[static_cast<std::size_t>(n)]; }
};

/// Detector parameters: quantum efficiency eta and the expected number of
/// dark counts per counting window, lambda*tau.
struct DetectorModel {
  double efficiency = 1.0;
  double dark_mean = 0.0;
};

inline void validate(const DetectorModel& det) {
  if (!(det.efficiency >= 0.0 && det.efficiency <= 1.0))
    throw std::invalid_argument("detector efficiency must lie in [0,1]");
  if (!(det.dark_mean >= 0.0) || !std::isfinite(det.dark_mean))
    throw std::invalid_argument("detector dark_mean must be finite and >= 0");
}

/// Raw integer counts of detected photon numbers over repeated trials.
struct CountHistogram {
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  }
};

/// Throws unless every entry is a finite non-negative probability and the
/// vector sums to 1 within `sum_tolerance`.
inline void validate_distribution(const PhotonNumberDistribution& dist,
                                  double sum_tolerance = kDefaultSumTolerance) {
  if (dist.probs.empty())
    throw std::invalid_argument("distribution must have at least one entry");
  long double sum = 0.0L;
  for (double p : dist.probs) {
    if (!std::isfinite(p) || p < 0.0)
      throw std::invalid_argument("distribution entries must be finite and >= 0");
    sum += p;
  }
  if (std::fabs(static_cast<double>(sum) - 1.0) > sum_tolerance)
    throw std::invalid_argument("distribution must sum to 1 within tolerance");
}

/// Poisson photon-number distribution of a coherent state with the given
/// mean, truncated at N. Terms are evaluated in log space, so the mean may
/// be large without overflow; the missing upper-tail mass is left in place.
inline PhotonNumberDistribution coherent_source(double mean, int truncation) {
  if (!std::isfinite(mean) || mean <= 0.0)
    throw std::invalid_argument("coherent mean must be finite and positive");
  if (truncation < 1) throw std::invalid_argument("coherent truncation must be >= 1");
  PhotonNumberDistribution dist;
  dist.probs.resize(static_cast<std::size_t>(truncation) + 1);
  const double log_mean = std::log(mean);
  for (int n = 0; n <= truncation; ++n)
    dist.probs[static_cast<std::size_t>(n)] =
        std::exp(-mean + n * log_mean - log_factorial(n));
  return dist;
}

/// Analytic upper-tail mass of coherent_source(mean, truncation).
inline double coherent_tail_mass(double mean, int truncation) {
  return poisson_upper_tail(truncation, mean);
}

/// Delta distribution at photon number m.
inline PhotonNumberDistribution fock_source(int m, int truncation) {
  if (m < 0) throw std::invalid_argument("fock photon number must be >= 0");
  if (truncation < 0) throw std::invalid_argument("fock truncation must be >= 0");
  if (m > truncation)
    throw std::invalid_argument("fock photon number exceeds truncation");
  PhotonNumberDistribution dist;
  dist.probs.assign(static_cast<std::size_t>(truncation) + 1, 0.0);
  dist.probs[static_cast<std::size_t>(m)] = 1.0;
  return dist;
}

inline double mean(const PhotonNumberDistribution& dist) {
  long double acc = 0.0L;
  for (std::size_t n = 0; n < dist.probs.size(); ++n)
    acc += static_cast<long double>(n) * dist.probs[n];
  return static_cast<double>(acc);
}

/// Shannon entropy in nats, with 0*ln(0) == 0.
inline double entropy(const PhotonNumberDistribution& dist) {
  long double acc = 0.0L;
  for (double p : dist.probs)
    if (p > 0.0) acc -= static_cast<long double>(p) * std::log(p);
  return static_cast<double>(acc);
}

/// Explicitly rescales the vector to unit sum.
inline PhotonNumberDistribution renormalized(const PhotonNumberDistribution& dist) {
  long double sum = 0.0L;
  for (double p : dist.probs) sum += p;
  if (!(sum > 0.0L))
    throw std::invalid_argument("cannot renormalize a distribution with zero mass");
  PhotonNumberDistribution out;
  out.probs.resize(dist.probs.size());
  for (std::size_t n = 0; n < dist.probs.size(); ++n)
    out.probs[n] = static_cast<double>(dist.probs[n] / sum);
  return out;
}

/// Truncation at which a coherent source keeps its mean accurate to ~1e-9.
/// The additive margin covers small means, where mean + 10*sqrt(mean) alone
/// leaves a tail deficit above that target.
inline int suggested_truncation(double mean) {
  if (!std::isfinite(mean) || mean <= 0.0)
    throw std::invalid_argument("suggested_truncation requires a positive mean");
  return static_cast<int>(std::ceil(mean + 10.0 * std::sqrt(mean))) + 10;
}

}  // namespace photostat

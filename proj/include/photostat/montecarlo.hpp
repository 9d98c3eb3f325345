#pragma once

// Stochastic oracle for the analytic channel formulas: every trial draws a
// source photon number, thins it photon by photon with Bernoulli(eta), and
// adds Poisson dark counts. Trial t always uses substream(seed, t), so any
// partitioning of trials across workers produces the identical histogram.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "photostat/distribution.hpp"
#include "photostat/rng.hpp"

namespace photostat {

struct SimulationSpec {
  PhotonNumberDistribution source;
  DetectorModel detector;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline int draw_index(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) return static_cast<int>(cumulative.size()) - 1;
  return static_cast<int>(it - cumulative.begin());
}

// Poisson draw by inversion of the cumulative sum.
inline int draw_poisson(SplitMix64& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double u = rng.next_double();
  double pmf = std::exp(-mean);
  double cdf = pmf;
  int d = 0;
  while (u >= cdf && pmf > 0.0) {
    ++d;
    pmf *= mean / d;
    cdf += pmf;
  }
  return d;
}

}  // namespace detail

inline CountHistogram simulate(const SimulationSpec& spec, unsigned workers = 1) {
  validate(spec.detector);
  if (spec.trials < 1) throw std::invalid_argument("simulation needs at least one trial");
  if (spec.source.probs.empty())
    throw std::invalid_argument("simulation source must be non-empty");
  long double total_mass = 0.0L;
  for (double p : spec.source.probs) {
    if (!(p >= 0.0))
      throw std::invalid_argument("simulation source entries must be >= 0");
    total_mass += p;
  }
  if (!(total_mass > 0.0L))
    throw std::invalid_argument("simulation source must have positive mass");

  // Sampling uses the tail-renormalized source.
  std::vector<double> cumulative(spec.source.probs.size());
  long double running = 0.0L;
  for (std::size_t n = 0; n < cumulative.size(); ++n) {
    running += spec.source.probs[n];
    cumulative[n] = static_cast<double>(running / total_mass);
  }
  cumulative.back() = 1.0;

  const double eta = spec.detector.efficiency;
  const double dark_mean = spec.detector.dark_mean;

  auto run_range = [&](std::uint64_t lo, std::uint64_t hi, std::vector<std::uint64_t>& hist) {
    for (std::uint64_t t = lo; t < hi; ++t) {
      SplitMix64 rng = substream(spec.seed, t);
      const int n = detail::draw_index(cumulative, rng.next_double());
      int detected = 0;
      for (int i = 0; i < n; ++i)
        if (rng.next_double() < eta) ++detected;
      detected += detail::draw_poisson(rng, dark_mean);
      const auto bin = static_cast<std::size_t>(detected);
      if (bin >= hist.size()) hist.resize(bin + 1, 0);
      ++hist[bin];
    }
  };

  const unsigned n_workers =
      std::max(1u, std::min(workers, static_cast<unsigned>(spec.trials)));
  std::vector<std::vector<std::uint64_t>> partial(n_workers);
  if (n_workers == 1) {
    run_range(0, spec.trials, partial[0]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    const std::uint64_t chunk = spec.trials / n_workers;
    const std::uint64_t rest = spec.trials % n_workers;
    std::uint64_t begin = 0;
    for (unsigned w = 0; w < n_workers; ++w) {
      const std::uint64_t end = begin + chunk + (w < rest ? 1 : 0);
      pool.emplace_back(run_range, begin, end, std::ref(partial[w]));
      begin = end;
    }
    for (auto& th : pool) th.join();
  }

  CountHistogram out;
  for (const auto& hist : partial) {
    if (hist.size() > out.counts.size()) out.counts.resize(hist.size(), 0);
    for (std::size_t k = 0; k < hist.size(); ++k) out.counts[k] += hist[k];
  }
  if (out.counts.empty()) out.counts.assign(1, 0);
  return out;
}

/// Normalizes raw counts by the total number of trials.
inline PhotonNumberDistribution empirical_pmf(const CountHistogram& hist) {
  const std::uint64_t total = hist.total();
  if (total < 1) throw std::invalid_argument("histogram must contain at least one count");
  PhotonNumberDistribution out;
  out.probs.resize(hist.counts.size());
  for (std::size_t k = 0; k < hist.counts.size(); ++k)
    out.probs[k] = static_cast<double>(hist.counts[k]) / static_cast<double>(total);
  return out;
}

}  // namespace photostat

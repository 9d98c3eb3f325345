#pragma once

// Maximum-entropy reconstruction of the source distribution from a count
// histogram: find candidates whose forward image passes a chi-squared
// goodness-of-fit gate, then return the highest-entropy candidate seen.
// The search is a genetic algorithm over softmax logits, so every candidate
// is a valid probability vector by construction. Child i of generation g
// draws from substream(seed, g, i); evaluation is pure per candidate and
// reductions scan by index, so the result is identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "photostat/distribution.hpp"
#include "photostat/forward.hpp"
#include "photostat/inversion.hpp"
#include "photostat/montecarlo.hpp"
#include "photostat/rng.hpp"
#include "photostat/special.hpp"

namespace photostat {

struct MaxEntConfig {
  int truncation = 40;
  int population_size = 160;
  int generations = 1500;
  double mutation_scale = 0.4;   // initial log-space step size
  double crossover_rate = 0.7;
  double chi2_percentile = 0.95;
  std::uint64_t seed = 1;
};

struct ReconstructionResult {
  PhotonNumberDistribution distribution;
  double chi2 = 0.0;
  double chi2_threshold = 0.0;
  double entropy = 0.0;
  std::uint64_t iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
};

namespace detail {

struct PooledChi2 {
  double chi2 = 0.0;
  int bins = 0;
};

/// Pearson statistic over pooled bins. Scanning upward from k = 0, bins
/// accumulate into one pooled bin until its expected count reaches 5; the
/// leftover sparse tail merges into the preceding pooled bin. A tail with
/// zero expected mass but positive counts is infeasible (infinite statistic).
inline PooledChi2 pooled_chi_squared(const std::vector<std::uint64_t>& counts,
                                     const std::vector<double>& model, double total) {
  const std::size_t len = std::max(counts.size(), model.size());
  std::vector<double> observed_group;
  std::vector<double> expected_group;
  double obs = 0.0;
  double exp = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    obs += (i < counts.size()) ? static_cast<double>(counts[i]) : 0.0;
    exp += (i < model.size()) ? total * model[i] : 0.0;
    if (exp >= 5.0) {
      observed_group.push_back(obs);
      expected_group.push_back(exp);
      obs = 0.0;
      exp = 0.0;
    }
  }
  PooledChi2 out;
  if (obs > 0.0 || exp > 0.0) {
    if (exp <= 0.0 && obs > 0.0) {
      out.bins = static_cast<int>(observed_group.size()) + 1;
      out.chi2 = std::numeric_limits<double>::infinity();
      return out;
    }
    if (expected_group.empty()) {
      observed_group.push_back(obs);
      expected_group.push_back(exp);
    } else {
      observed_group.back() += obs;
      expected_group.back() += exp;
    }
  }
  out.bins = static_cast<int>(observed_group.size());
  for (std::size_t g = 0; g < observed_group.size(); ++g) {
    const double diff = observed_group[g] - expected_group[g];
    out.chi2 += diff * diff / expected_group[g];
  }
  return out;
}

}  // namespace detail

/// Pearson chi-squared between a histogram and a detected-side model pmf,
/// with tail-up pooling to expected counts of at least 5. A pooled bin with
/// zero model mass but positive counts yields the infeasible sentinel
/// (infinity).
inline double chi_squared(const CountHistogram& observed,
                          const PhotonNumberDistribution& model) {
  if (observed.total() < 1)
    throw std::invalid_argument("histogram must contain at least one count");
  if (model.truncation() + 1 < static_cast<int>(observed.counts.size()))
    throw std::invalid_argument("model truncation must cover the histogram");
  return detail::pooled_chi_squared(observed.counts, model.probs,
                                    static_cast<double>(observed.total()))
      .chi2;
}

namespace detail {

struct Candidate {
  std::vector<double> logits;
  double step = 0.3;  // self-adaptive mutation scale
  std::vector<double> probs;
  double chi2 = std::numeric_limits<double>::infinity();
  double threshold = 0.0;
  double entropy = 0.0;
  double infeasibility = std::numeric_limits<double>::infinity();
};

// Lexicographic fitness: first close the chi-squared gap, then maximize
// entropy.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.infeasibility != b.infeasibility) return a.infeasibility < b.infeasibility;
  return a.entropy > b.entropy;
}

inline void softmax(const std::vector<double>& logits, std::vector<double>& probs) {
  probs.resize(logits.size());
  double top = logits[0];
  for (double l : logits) top = std::max(top, l);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    sum += probs[i];
  }
  for (double& p : probs) p = static_cast<double>(p / sum);
}

inline std::vector<double> logits_from_probs(const std::vector<double>& probs) {
  std::vector<double> logits(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    logits[i] = std::log(std::max(probs[i], 1e-12));
  return logits;
}

struct GaContext {
  const CountHistogram* observed = nullptr;
  double total = 0.0;
  TransferMatrix channel;
  std::vector<double> thresholds;  // chi2 quantile indexed by pooled bin count
};

inline void evaluate(const GaContext& ctx, Candidate& cand) {
  softmax(cand.logits, cand.probs);
  PhotonNumberDistribution source{cand.probs};
  const PhotonNumberDistribution model = apply_forward(ctx.channel, source);
  const PooledChi2 pooled =
      pooled_chi_squared(ctx.observed->counts, model.probs, ctx.total);
  cand.chi2 = pooled.chi2;
  cand.threshold = ctx.thresholds[static_cast<std::size_t>(pooled.bins)];
  cand.entropy = entropy(source);
  cand.infeasibility = cand.chi2 > cand.threshold ? cand.chi2 - cand.threshold : 0.0;
}

template <typename Fn>
inline void parallel_for(unsigned workers, int begin, int end, Fn&& fn) {
  const int span = end - begin;
  if (span <= 0) return;
  const unsigned n_workers = std::max(
      1u, std::min(workers, static_cast<unsigned>(span)));
  if (n_workers == 1) {
    for (int i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  const int chunk = span / static_cast<int>(n_workers);
  const int rest = span % static_cast<int>(n_workers);
  int lo = begin;
  for (unsigned w = 0; w < n_workers; ++w) {
    const int hi = lo + chunk + (static_cast<int>(w) < rest ? 1 : 0);
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
    lo = hi;
  }
  for (auto& th : pool) th.join();
}

// Linear interpolation of a pmf at fractional index t, zero outside.
inline double pmf_interp(const std::vector<double>& pmf, double t) {
  if (t < 0.0 || pmf.empty()) return 0.0;
  const auto i = static_cast<std::size_t>(t);
  if (i + 1 >= pmf.size()) return i < pmf.size() ? pmf[i] : 0.0;
  const double frac = t - static_cast<double>(i);
  return pmf[i] * (1.0 - frac) + pmf[i + 1] * frac;
}

/// Deterministic starting points: uniform, the clipped analytic inversion
/// (raw and smoothed), and the empirical pmf stretched by 1/eta (raw and
/// sharpened), which matches the first two moments of a smooth source.
inline std::vector<std::vector<double>> initial_seeds(const CountHistogram& observed,
                                                      const DetectorModel& det,
                                                      int truncation) {
  const std::size_t dim = static_cast<std::size_t>(truncation) + 1;
  std::vector<std::vector<double>> seeds;

  seeds.emplace_back(dim, 0.0);  // uniform logits

  const PhotonNumberDistribution emp = empirical_pmf(observed);
  PhotonNumberDistribution padded = emp;
  padded.probs.resize(std::max(padded.probs.size(), dim), 0.0);
  auto clipped = invert_counts(padded, det, truncation).first;
  double clipped_sum = 0.0;
  for (double& p : clipped.probs) {
    if (!(p > 0.0) || !std::isfinite(p)) p = 0.0;
    clipped_sum += p;
  }
  std::vector<double> inverted(dim, 1.0 / static_cast<double>(dim));
  if (clipped_sum > 0.0)
    for (std::size_t i = 0; i < dim; ++i) inverted[i] = clipped.probs[i] / clipped_sum;
  seeds.push_back(logits_from_probs(inverted));

  std::vector<double> smooth = inverted;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> next(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const double left = i > 0 ? smooth[i - 1] : smooth[i];
      const double right = i + 1 < dim ? smooth[i + 1] : smooth[i];
      next[i] = 0.25 * left + 0.5 * smooth[i] + 0.25 * right;
    }
    smooth = std::move(next);
  }
  seeds.push_back(logits_from_probs(smooth));

  std::vector<double> stretched(dim);
  double stretched_sum = 0.0;
  for (std::size_t n = 0; n < dim; ++n) {
    stretched[n] =
        pmf_interp(emp.probs, det.efficiency * static_cast<double>(n) + det.dark_mean) +
        1e-10;
    stretched_sum += stretched[n];
  }
  for (double& p : stretched) p /= stretched_sum;
  const std::vector<double> stretch_logits = logits_from_probs(stretched);
  seeds.push_back(stretch_logits);

  const double sharpen = 1.0 / std::max(det.efficiency, 1e-3);
  std::vector<double> tempered(dim);
  for (std::size_t i = 0; i < dim; ++i) tempered[i] = stretch_logits[i] * sharpen;
  seeds.push_back(tempered);

  return seeds;
}

inline Candidate breed(const std::vector<Candidate>& prev, const MaxEntConfig& config,
                       std::uint64_t generation, int child) {
  SplitMix64 rng = substream(config.seed, generation, static_cast<std::uint64_t>(child));
  const auto pop = static_cast<std::uint64_t>(prev.size());
  auto tournament = [&]() -> const Candidate& {
    std::size_t best = static_cast<std::size_t>(rng.next() % pop);
    for (int round = 0; round < 2; ++round) {
      const std::size_t idx = static_cast<std::size_t>(rng.next() % pop);
      if (better(prev[idx], prev[best])) best = idx;
    }
    return prev[best];
  };

  const Candidate& parent_a = tournament();
  Candidate child_cand;
  if (rng.next_double() < config.crossover_rate) {
    const Candidate& parent_b = tournament();
    const double alpha = rng.next_double();
    child_cand.logits.resize(parent_a.logits.size());
    for (std::size_t i = 0; i < child_cand.logits.size(); ++i)
      child_cand.logits[i] =
          alpha * parent_a.logits[i] + (1.0 - alpha) * parent_b.logits[i];
    child_cand.step = alpha * parent_a.step + (1.0 - alpha) * parent_b.step;
  } else {
    child_cand.logits = parent_a.logits;
    child_cand.step = parent_a.step;
  }

  child_cand.step = std::clamp(child_cand.step * std::exp(0.3 * rng.next_gaussian()),
                               1e-3, 3.0);
  const double step = child_cand.step;
  auto& logits = child_cand.logits;
  const std::size_t dim = logits.size();
  const double roll = rng.next_double();
  if (roll < 0.55) {
    for (double& l : logits) l += step * rng.next_gaussian();
  } else if (roll < 0.75) {
    const int hits = 1 + static_cast<int>(rng.next() % 4);
    for (int h = 0; h < hits; ++h)
      logits[static_cast<std::size_t>(rng.next() % dim)] += 3.0 * step * rng.next_gaussian();
  } else if (roll < 0.85) {
    // temper: powers the distribution, sharpening or flattening it
    const double gamma = std::exp(0.4 * rng.next_gaussian());
    for (double& l : logits) l *= gamma;
  } else if (roll < 0.95) {
    // blend toward uniform (entropy-increasing move)
    std::vector<double> probs;
    softmax(logits, probs);
    const double t = std::min(0.9, std::fabs(rng.next_gaussian()) * 0.2 * step);
    const double u = 1.0 / static_cast<double>(dim);
    for (double& p : probs) p = (1.0 - t) * p + t * u;
    logits = logits_from_probs(probs);
  } else {
    // local diffusion smoothing
    std::vector<double> probs;
    softmax(logits, probs);
    const double t = std::min(0.9, std::fabs(rng.next_gaussian()) * 0.5 * step);
    std::vector<double> smoothed(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const double left = i > 0 ? probs[i - 1] : probs[i];
      const double right = i + 1 < dim ? probs[i + 1] : probs[i];
      smoothed[i] = (1.0 - t) * probs[i] + t * 0.25 * (left + 2.0 * probs[i] + right);
    }
    logits = logits_from_probs(smoothed);
  }
  return child_cand;
}

}  // namespace detail

/// Two-step reconstruction recipe: candidates must pass the chi-squared
/// goodness-of-fit gate against the observed histogram, and among all
/// gate-passing candidates ever evaluated the highest-entropy one wins.
/// Fully deterministic for a fixed config, independent of `workers`.
inline ReconstructionResult reconstruct_maxent(const CountHistogram& observed,
                                               const DetectorModel& det,
                                               const MaxEntConfig& config,
                                               unsigned workers = 1) {
  validate(det);
  if (det.efficiency <= 0.0)
    throw std::domain_error("reconstruction requires positive efficiency");
  if (observed.total() < 100)
    throw std::invalid_argument(
        "reconstruction needs at least 100 counts for the chi-squared gate");
  if (config.population_size < 2)
    throw std::invalid_argument("population_size must be >= 2");
  if (config.generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (!(config.chi2_percentile > 0.0 && config.chi2_percentile < 1.0))
    throw std::invalid_argument("chi2_percentile must lie in (0,1)");
  if (!(config.mutation_scale > 0.0))
    throw std::invalid_argument("mutation_scale must be positive");
  if (!(config.crossover_rate >= 0.0 && config.crossover_rate <= 1.0))
    throw std::invalid_argument("crossover_rate must lie in [0,1]");
  if (config.truncation + 1 < static_cast<int>(observed.counts.size()))
    throw std::invalid_argument("truncation must cover the observed histogram");

  detail::GaContext ctx;
  ctx.observed = &observed;
  ctx.total = static_cast<double>(observed.total());
  ctx.channel = composed_matrix(det, config.truncation);
  const int max_bins =
      static_cast<int>(std::max(observed.counts.size(),
                                static_cast<std::size_t>(config.truncation) + 1)) +
      1;
  ctx.thresholds.resize(static_cast<std::size_t>(max_bins) + 1, 0.0);
  for (int bins = 1; bins <= max_bins; ++bins)
    ctx.thresholds[static_cast<std::size_t>(bins)] =
        chi_squared_quantile(config.chi2_percentile, bins - 1);

  const std::size_t dim = static_cast<std::size_t>(config.truncation) + 1;
  const auto seeds = detail::initial_seeds(observed, det, config.truncation);
  std::vector<detail::Candidate> population(
      static_cast<std::size_t>(config.population_size));
  for (std::size_t i = 0; i < population.size(); ++i) {
    auto& cand = population[i];
    cand.logits = seeds[i % seeds.size()];
    cand.step = config.mutation_scale;
    if (i >= seeds.size()) {
      SplitMix64 rng = substream(config.seed, 0, static_cast<std::uint64_t>(i));
      for (std::size_t d = 0; d < dim; ++d)
        cand.logits[d] += config.mutation_scale * rng.next_gaussian();
    }
  }
  detail::parallel_for(workers, 0, static_cast<int>(population.size()),
                       [&](int i) { detail::evaluate(ctx, population[static_cast<std::size_t>(i)]); });

  std::optional<detail::Candidate> best_feasible;
  detail::Candidate best_any = population[0];
  auto absorb = [&](const detail::Candidate& cand) {
    if (detail::better(cand, best_any)) best_any = cand;
    if (cand.infeasibility == 0.0 &&
        (!best_feasible || cand.entropy > best_feasible->entropy))
      best_feasible = cand;
  };
  for (const auto& cand : population) absorb(cand);

  for (int generation = 1; generation <= config.generations; ++generation) {
    std::vector<detail::Candidate> next(population.size());
    // elitism: carry the two best candidates unchanged
    std::size_t best_idx = 0;
    for (std::size_t i = 1; i < population.size(); ++i)
      if (detail::better(population[i], population[best_idx])) best_idx = i;
    std::size_t runner_idx = best_idx == 0 ? 1 : 0;
    for (std::size_t i = 0; i < population.size(); ++i)
      if (i != best_idx && detail::better(population[i], population[runner_idx]))
        runner_idx = i;
    next[0] = population[best_idx];
    next[1] = population[runner_idx];
    detail::parallel_for(workers, 2, static_cast<int>(population.size()), [&](int i) {
      auto& child = next[static_cast<std::size_t>(i)];
      child = detail::breed(population, config, static_cast<std::uint64_t>(generation), i);
      detail::evaluate(ctx, child);
    });
    for (std::size_t i = 2; i < next.size(); ++i) absorb(next[i]);
    population = std::move(next);
  }

  const detail::Candidate& chosen = best_feasible ? *best_feasible : best_any;
  ReconstructionResult result;
  result.distribution.probs = chosen.probs;
  result.chi2 = chosen.chi2;
  result.chi2_threshold = chosen.threshold;
  result.entropy = chosen.entropy;
  result.iterations = static_cast<std::uint64_t>(config.generations);
  result.converged = best_feasible.has_value();
  result.seed = config.seed;
  return result;
}

}  // namespace photostat

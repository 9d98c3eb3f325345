#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "photostat/distribution.hpp"
#include "photostat/forward.hpp"
#include "photostat/special.hpp"

namespace photostat {

inline constexpr double kPhysicalityTolerance = 1e-8;

/// Kummer's confluent hypergeometric function 1F1(a,b,z) for integer
/// parameters a,b >= 1 and z >= 0. Successive term ratios are strictly
/// decreasing, so summation stops once the geometric tail bound falls below
/// 1e-15 of the partial sum.
inline long double hyp1f1(long long a, long long b, long double z) {
  if (a < 1 || b < 1) throw std::invalid_argument("hyp1f1 requires a >= 1 and b >= 1");
  if (!(z >= 0.0L) || !std::isfinite(static_cast<double>(z)))
    throw std::invalid_argument("hyp1f1 requires finite z >= 0");
  if (z == 0.0L) return 1.0L;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (long long i = 0;; ++i) {
    term *= static_cast<long double>(a + i) * z /
            (static_cast<long double>(b + i) * static_cast<long double>(i + 1));
    sum += term;
    if (std::isinf(sum) || std::isnan(sum)) break;  // over-range arguments
    const long double next_ratio = static_cast<long double>(a + i + 1) * z /
                                   (static_cast<long double>(b + i + 1) *
                                    static_cast<long double>(i + 2));
    if (next_ratio < 1.0L && term * next_ratio / (1.0L - next_ratio) < 1e-15L * sum)
      break;
  }
  return sum;
}

/// Explicit inverse of the loss channel:
/// entries[n][m] = C(m,n) eta^-m (eta-1)^(m-n) for m >= n, zero otherwise.
inline TransferMatrix loss_inverse(const DetectorModel& det, int truncation) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  if (det.efficiency <= 0.0)
    throw std::domain_error("non-invertible channel: efficiency must be positive");
  TransferMatrix m;
  m.role = ChannelRole::loss_inverse;
  m.detector = det;
  m.truncation = truncation;
  const int s = m.size();
  m.entries.assign(static_cast<std::size_t>(s) * s, 0.0L);
  const long double eta = det.efficiency;
  const BinomialTable binom(truncation);
  for (int n = 0; n < s; ++n)
    for (int col = n; col < s; ++col) {
      const long double magnitude = binom(col, n) *
                                    std::pow(eta, static_cast<long double>(-col)) *
                                    std::pow(1.0L - eta, static_cast<long double>(col - n));
      m.at(n, col) = ((col - n) & 1) ? -magnitude : magnitude;
    }
  return m;
}

/// Explicit inverse of the Poisson dark-count channel:
/// entries[i][j] = exp(lt) (-lt)^(i-j) / (i-j)! for j <= i.
inline TransferMatrix dark_inverse(const DetectorModel& det, int truncation) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  TransferMatrix m;
  m.role = ChannelRole::dark_inverse;
  m.detector = det;
  m.truncation = truncation;
  const int s = m.size();
  m.entries.assign(static_cast<std::size_t>(s) * s, 0.0L);
  const long double lt = det.dark_mean;
  std::vector<long double> diag(static_cast<std::size_t>(s));
  diag[0] = std::exp(lt);
  for (int offset = 1; offset < s; ++offset)
    diag[static_cast<std::size_t>(offset)] =
        diag[static_cast<std::size_t>(offset - 1)] * (-lt) / offset;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= i; ++j) m.at(i, j) = diag[static_cast<std::size_t>(i - j)];
  return m;
}

/// Closed-form inverse of the composed channel P_D = D P, evaluated through
/// 1F1 with argument z = (1-eta) lt / eta. Rows are source indices k,
/// columns detected indices n:
///   k <= n:  (-1)^(k+n) exp(lt) C(n,k) (1-eta)^(n-k) eta^-n 1F1(n+1, n-k+1, z)
///   k >  n:  (-1)^(k+n) exp(lt) eta^-k lt^(k-n)/(k-n)!    1F1(k+1, k-n+1, z)
/// The lt = 0 case is delegated to loss_inverse, where the lt^-n prefactor
/// of the raw formula degenerates.
inline TransferMatrix composed_inverse_analytic(const DetectorModel& det, int truncation) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  if (det.efficiency <= 0.0)
    throw std::domain_error("non-invertible channel: efficiency must be positive");
  if (det.dark_mean == 0.0) {
    TransferMatrix m = loss_inverse(det, truncation);
    m.role = ChannelRole::composed_inverse;
    return m;
  }
  TransferMatrix m;
  m.role = ChannelRole::composed_inverse;
  m.detector = det;
  m.truncation = truncation;
  const int s = m.size();
  m.entries.assign(static_cast<std::size_t>(s) * s, 0.0L);
  const long double eta = det.efficiency;
  const long double lt = det.dark_mean;
  const long double z = (1.0L - eta) * lt / eta;
  const long double exp_lt = std::exp(lt);
  const BinomialTable binom(truncation);
  for (int k = 0; k < s; ++k)
    for (int n = 0; n < s; ++n) {
      long double magnitude;
      if (k <= n) {
        magnitude = exp_lt * binom(n, k) *
                    std::pow(1.0L - eta, static_cast<long double>(n - k)) *
                    std::pow(eta, static_cast<long double>(-n)) *
                    hyp1f1(n + 1, n - k + 1, z);
      } else {
        long double dark_power = 1.0L;  // lt^(k-n)/(k-n)!
        for (int i = 1; i <= k - n; ++i) dark_power *= lt / i;
        magnitude = exp_lt * dark_power *
                    std::pow(eta, static_cast<long double>(-k)) *
                    hyp1f1(k + 1, k - n + 1, z);
      }
      m.at(k, n) = ((k + n) & 1) ? -magnitude : magnitude;
    }
  return m;
}

/// Infinity-norm condition number of the truncated channel, computed from
/// the forward matrix and its explicit analytic inverse.
inline double condition_estimate(const DetectorModel& det, int truncation) {
  const bool with_dark = det.dark_mean > 0.0;
  const TransferMatrix fwd =
      with_dark ? composed_matrix(det, truncation) : loss_matrix(det, truncation);
  const TransferMatrix inv = with_dark ? composed_inverse_analytic(det, truncation)
                                       : loss_inverse(det, truncation);
  return static_cast<double>(infinity_norm(fwd) * infinity_norm(inv));
}

struct InversionDiagnostics {
  double min_entry = 0.0;           ///< most negative reconstructed probability
  double condition_estimate = 0.0;  ///< inf-norm condition number of the channel
  bool physical = false;            ///< all entries >= -tolerance
  double tail_sensitivity = 0.0;    ///< inf-norm of the last inverse column
};

/// Raw linear inversion S = P_D^-1 * observed. Negative entries are
/// preserved, never clipped; the diagnostics report how unphysical and how
/// ill-conditioned the inversion is.
inline std::pair<PhotonNumberDistribution, InversionDiagnostics> invert_counts(
    const PhotonNumberDistribution& observed, const DetectorModel& det, int truncation,
    double physicality_tolerance = kPhysicalityTolerance) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  if (observed.truncation() < truncation)
    throw std::invalid_argument("observed truncation must be >= inversion truncation");
  if (det.efficiency <= 0.0)
    throw std::domain_error("non-invertible channel: efficiency must be positive");
  const bool with_dark = det.dark_mean > 0.0;
  const TransferMatrix inv = with_dark ? composed_inverse_analytic(det, truncation)
                                       : loss_inverse(det, truncation);
  const TransferMatrix fwd =
      with_dark ? composed_matrix(det, truncation) : loss_matrix(det, truncation);
  const int s = inv.size();
  PhotonNumberDistribution candidate;
  candidate.probs.resize(static_cast<std::size_t>(s));
  double min_entry = 0.0;
  for (int k = 0; k < s; ++k) {
    long double acc = 0.0L;
    for (int n = 0; n < s; ++n)
      acc += inv(k, n) * observed.probs[static_cast<std::size_t>(n)];
    const double value = static_cast<double>(acc);
    candidate.probs[static_cast<std::size_t>(k)] = value;
    if (value < min_entry) min_entry = value;
  }
  InversionDiagnostics diag;
  diag.min_entry = min_entry;
  diag.physical = min_entry >= -physicality_tolerance;
  diag.condition_estimate = static_cast<double>(infinity_norm(fwd) * infinity_norm(inv));
  long double tail = 0.0L;
  for (int k = 0; k < s; ++k) {
    const long double v = std::fabs(inv(k, truncation));
    if (v > tail) tail = v;
  }
  diag.tail_sensitivity = static_cast<double>(tail);
  return {std::move(candidate), diag};
}

}  // namespace photostat

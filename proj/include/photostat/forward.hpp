#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "photostat/distribution.hpp"
#include "photostat/special.hpp"

namespace photostat {

enum class ChannelRole {
  loss,
  dark,
  composed,
  loss_inverse,
  dark_inverse,
  composed_inverse,
};

inline const char* to_string(ChannelRole role) {
  switch (role) {
    case ChannelRole::loss: return "loss";
    case ChannelRole::dark: return "dark";
    case ChannelRole::composed: return "composed";
    case ChannelRole::loss_inverse: return "loss_inverse";
    case ChannelRole::dark_inverse: return "dark_inverse";
    case ChannelRole::composed_inverse: return "composed_inverse";
  }
  throw std::invalid_argument("unknown channel role");
}

inline ChannelRole role_from_string(const std::string& name) {
  if (name == "loss") return ChannelRole::loss;
  if (name == "dark") return ChannelRole::dark;
  if (name == "composed") return ChannelRole::composed;
  if (name == "loss_inverse") return ChannelRole::loss_inverse;
  if (name == "dark_inverse") return ChannelRole::dark_inverse;
  if (name == "composed_inverse") return ChannelRole::composed_inverse;
  throw std::invalid_argument("unknown channel role '" + name + "'");
}

/// Truncated (N+1)x(N+1) channel matrix; rows are detected counts k, columns
/// are source photon numbers n. Entries are kept in 80-bit extended
/// precision: the analytic inverses grow like eta^-N, and the triangular
/// round-trip identities stay below 1e-8 at small eta only with the wider
/// mantissa.
struct TransferMatrix {
  std::vector<long double> entries;  // row-major
  ChannelRole role = ChannelRole::loss;
  DetectorModel detector;
  int truncation = 0;

  int size() const { return truncation + 1; }

  long double operator()(int row, int col) const {
    return entries[static_cast<std::size_t>(row) * static_cast<std::size_t>(size()) +
                   static_cast<std::size_t>(col)];
  }

  long double& at(int row, int col) {
    return entries[static_cast<std::size_t>(row) * static_cast<std::size_t>(size()) +
                   static_cast<std::size_t>(col)];
  }
};

/// Binomial loss channel: entries[k][n] = C(n,k) eta^k (1-eta)^(n-k) for
/// k <= n, zero otherwise. Columns sum to one exactly (no truncation loss).
inline TransferMatrix loss_matrix(const DetectorModel& det, int truncation) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  TransferMatrix m;
  m.role = ChannelRole::loss;
  m.detector = det;
  m.truncation = truncation;
  const int s = m.size();
  m.entries.assign(static_cast<std::size_t>(s) * s, 0.0L);
  const long double eta = det.efficiency;
  const BinomialTable binom(truncation);
  for (int k = 0; k < s; ++k)
    for (int n = k; n < s; ++n)
      m.at(k, n) = binom(n, k) * std::pow(eta, static_cast<long double>(k)) *
                   std::pow(1.0L - eta, static_cast<long double>(n - k));
  return m;
}

/// Poisson dark-count channel: entries[k][d] = D(k-d) with
/// D(s) = exp(-lt) lt^s / s!. Lower triangular; the column deficit equals
/// the Poisson tail beyond the truncation.
inline TransferMatrix dark_matrix(const DetectorModel& det, int truncation) {
  validate(det);
  if (truncation < 0) throw std::invalid_argument("truncation must be >= 0");
  TransferMatrix m;
  m.role = ChannelRole::dark;
  m.detector = det;
  m.truncation = truncation;
  const int s = m.size();
  m.entries.assign(static_cast<std::size_t>(s) * s, 0.0L);
  const long double lt = det.dark_mean;
  std::vector<long double> pmf(static_cast<std::size_t>(s));
  pmf[0] = std::exp(-lt);
  for (int d = 1; d < s; ++d)
    pmf[static_cast<std::size_t>(d)] = pmf[static_cast<std::size_t>(d - 1)] * lt / d;
  for (int k = 0; k < s; ++k)
    for (int d = 0; d <= k; ++d)
      m.at(k, d) = pmf[static_cast<std::size_t>(k - d)];
  return m;
}

/// Row-major product a*b of two equally truncated matrices.
inline std::vector<long double> multiply(const TransferMatrix& a, const TransferMatrix& b) {
  if (a.truncation != b.truncation)
    throw std::invalid_argument("truncation mismatch in matrix product");
  const int s = a.size();
  std::vector<long double> out(static_cast<std::size_t>(s) * s, 0.0L);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      long double acc = 0.0L;
      for (int m = 0; m < s; ++m) acc += a(i, m) * b(m, j);
      out[static_cast<std::size_t>(i) * s + static_cast<std::size_t>(j)] = acc;
    }
  return out;
}

inline long double infinity_norm(const TransferMatrix& m) {
  long double worst = 0.0L;
  const int s = m.size();
  for (int i = 0; i < s; ++i) {
    long double row = 0.0L;
    for (int j = 0; j < s; ++j) row += std::fabs(m(i, j));
    if (row > worst) worst = row;
  }
  return worst;
}

/// Dark-then-loss composition P_D = D * P. The truncated product is exact
/// entry by entry because the inner index runs over d <= min(k,n).
inline TransferMatrix composed_matrix(const DetectorModel& det, int truncation) {
  TransferMatrix loss = loss_matrix(det, truncation);
  TransferMatrix dark = dark_matrix(det, truncation);
  TransferMatrix m;
  m.role = ChannelRole::composed;
  m.detector = det;
  m.truncation = truncation;
  m.entries = multiply(dark, loss);
  return m;
}

/// Counting distribution P(k) = sum_n entries[k][n] S(n).
inline PhotonNumberDistribution apply_forward(const TransferMatrix& channel,
                                              const PhotonNumberDistribution& source) {
  if (source.truncation() != channel.truncation)
    throw std::invalid_argument("truncation mismatch between channel and source");
  const int s = channel.size();
  PhotonNumberDistribution out;
  out.probs.resize(static_cast<std::size_t>(s));
  for (int k = 0; k < s; ++k) {
    long double acc = 0.0L;
    for (int n = 0; n < s; ++n) acc += channel(k, n) * source.probs[static_cast<std::size_t>(n)];
    out.probs[static_cast<std::size_t>(k)] = static_cast<double>(acc);
  }
  return out;
}

/// Closed-form counting pmf for a coherent source through a pure loss
/// channel: Poisson with mean n_bar * eta.
inline double coherent_counting_pmf(double mean, double efficiency, int k) {
  if (!std::isfinite(mean) || mean <= 0.0)
    throw std::invalid_argument("coherent mean must be finite and positive");
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("efficiency must lie in [0,1]");
  if (k < 0) throw std::invalid_argument("detected count must be >= 0");
  const double detected_mean = mean * efficiency;
  if (detected_mean == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-detected_mean + k * std::log(detected_mean) - log_factorial(k));
}

/// C_k = P(k|k), the probability that a k-photon input reads back as k.
/// Without dark counts this is eta^k; with dark counts it is the diagonal
/// of the composed channel, sum_d D(d) C(k,k-d) eta^(k-d) (1-eta)^d.
inline double confidence(const DetectorModel& det, int k) {
  validate(det);
  if (k < 0) throw std::invalid_argument("detected count must be >= 0");
  const long double eta = det.efficiency;
  if (det.dark_mean == 0.0)
    return static_cast<double>(std::pow(eta, static_cast<long double>(k)));
  const long double lt = det.dark_mean;
  const BinomialTable binom(k);
  long double dark_pmf = std::exp(-lt);
  long double acc = 0.0L;
  for (int d = 0; d <= k; ++d) {
    if (d > 0) dark_pmf *= lt / d;
    acc += dark_pmf * binom(k, k - d) * std::pow(eta, static_cast<long double>(k - d)) *
           std::pow(1.0L - eta, static_cast<long double>(d));
  }
  return static_cast<double>(acc);
}

}  // namespace photostat

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "photostat/inversion.hpp"
#include "photostat/rng.hpp"
#include "test_support.hpp"

using namespace photostat;
using test_support::composed_inverse_series;

namespace {

void check_identity_product(const TransferMatrix& inv, const TransferMatrix& fwd,
                            double tolerance) {
  CHECK(test_support::max_identity_deviation(inv, fwd) < tolerance);
}

}  // namespace

TEST_CASE("hyp1f1 basics") {
  CHECK(static_cast<double>(hyp1f1(3, 7, 0.0L)) == 1.0);
  CHECK(static_cast<double>(hyp1f1(1, 1, 1.0L)) ==
        doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  CHECK(static_cast<double>(hyp1f1(2, 1, 0.5L)) ==
        doctest::Approx(1.5 * std::exp(0.5)).epsilon(1e-14));
  CHECK(static_cast<double>(hyp1f1(3, 2, 0.5L)) ==
        doctest::Approx(1.25 * std::exp(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(hyp1f1(0, 1, 1.0L), std::invalid_argument);
  CHECK_THROWS_AS(hyp1f1(1, 1, -1.0L), std::invalid_argument);
  CHECK_THROWS_AS(hyp1f1(1, 1, std::numeric_limits<long double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("loss inverse entries") {
  const auto inv = loss_inverse({0.5, 0.0}, 6);
  CHECK(static_cast<double>(inv(0, 1)) == doctest::Approx(-1.0).epsilon(1e-14));
  const auto identity = loss_inverse({1.0, 0.0}, 6);
  for (int i = 0; i <= 6; ++i)
    for (int j = 0; j <= 6; ++j)
      CHECK(static_cast<double>(identity(i, j)) == (i == j ? 1.0 : 0.0));
  CHECK_THROWS_AS(loss_inverse({0.0, 0.0}, 6), std::domain_error);
}

TEST_CASE("loss inverse sign structure alternates") {
  for (double eta : {0.2, 0.5, 0.8}) {
    const auto inv = loss_inverse({eta, 0.0}, 15);
    for (int n = 0; n <= 15; ++n)
      for (int m = n; m <= 15; ++m) {
        const double entry = static_cast<double>(inv(n, m));
        if ((m - n) % 2 == 0)
          CHECK(entry > 0.0);
        else
          CHECK(entry < 0.0);
      }
  }
}

TEST_CASE("loss round trip at eta=0.2, N=20") {
  check_identity_product(loss_inverse({0.2, 0.0}, 20), loss_matrix({0.2, 0.0}, 20), 1e-8);
}

TEST_CASE("dark inverse entries and round trip") {
  const auto inv = dark_inverse({1.0, 0.5}, 6);
  CHECK(static_cast<double>(inv(1, 0)) ==
        doctest::Approx(std::exp(0.5) * -0.5).epsilon(1e-14));
  const auto identity = dark_inverse({1.0, 0.0}, 4);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      CHECK(static_cast<double>(identity(i, j)) == (i == j ? 1.0 : 0.0));
  check_identity_product(dark_inverse({1.0, 2.0}, 30), dark_matrix({1.0, 2.0}, 30), 1e-8);
}

TEST_CASE("composed inverse delegates at zero dark rate") {
  const auto composed = composed_inverse_analytic({0.4, 0.0}, 10);
  const auto loss = loss_inverse({0.4, 0.0}, 10);
  CHECK(composed.role == ChannelRole::composed_inverse);
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 10; ++j)
      CHECK(static_cast<double>(composed(i, j)) == static_cast<double>(loss(i, j)));
}

TEST_CASE("composed inverse at eta=1 reduces to the dark inverse") {
  const auto composed = composed_inverse_analytic({1.0, 0.7}, 12);
  const auto dark = dark_inverse({1.0, 0.7}, 12);
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j) {
      const double want = static_cast<double>(dark(i, j));
      if (want == 0.0)
        CHECK(static_cast<double>(composed(i, j)) == 0.0);
      else
        CHECK(static_cast<double>(composed(i, j)) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("composed inverse agrees with the direct power series") {
  const auto inv = composed_inverse_analytic({0.3, 0.7}, 11);
  for (int k = 0; k <= 11; ++k)
    for (int n = 0; n <= 11; ++n) {
      const long double series = composed_inverse_series(k, n, 0.3, 0.7);
      const long double closed = inv(k, n);
      const long double scale = std::max(std::fabs(series), 1.0L);
      CHECK(static_cast<double>(std::fabs(closed - series) / scale) < 1e-9);
    }
}

TEST_CASE("composed inverse agrees with the padded product oracle") {
  const DetectorModel det{0.5, 0.5};
  const int n_block = 15;
  const int padded = 60;
  const auto analytic = composed_inverse_analytic(det, n_block);
  const auto product = multiply(loss_inverse(det, padded), dark_inverse(det, padded));
  for (int k = 0; k <= n_block; ++k)
    for (int n = 0; n <= n_block; ++n) {
      const double via_product =
          static_cast<double>(product[static_cast<std::size_t>(k) * (padded + 1) + n]);
      CHECK(std::fabs(static_cast<double>(analytic(k, n)) - via_product) < 1e-6);
    }
}

TEST_CASE("composed inverse round trip against the composed channel") {
  const DetectorModel det{0.5, 0.5};
  // P_D^-1 is a full matrix, so the truncated product only approximates the
  // identity; inspect the interior block where the tail has converged.
  const int n_big = 40;
  const auto product = multiply(composed_inverse_analytic(det, n_big),
                                composed_matrix(det, n_big));
  for (int i = 0; i <= 15; ++i)
    for (int j = 0; j <= 15; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      CHECK(std::fabs(static_cast<double>(
                product[static_cast<std::size_t>(i) * (n_big + 1) + j]) -
                      want) < 1e-6);
    }
}

TEST_CASE("invert_counts recovers exact forward data") {
  const DetectorModel det{0.2, 0.0};
  const auto source = coherent_source(1.0, 25);
  const auto observed = apply_forward(loss_matrix(det, 25), source);
  const auto [candidate, diag] = invert_counts(observed, det, 25);
  CHECK(diag.physical);
  for (int n = 0; n <= 25; ++n)
    CHECK(std::fabs(candidate.probs[static_cast<std::size_t>(n)] -
                    source.probs[static_cast<std::size_t>(n)]) < 1e-6);
}

TEST_CASE("noiseless round trips hold for random sources with padding") {
  SplitMix64 rng = substream(99, 0);
  for (double dark : {0.0, 0.5}) {
    for (int trial = 0; trial < 10; ++trial) {
      // The composed inverse is a full matrix, so the truncated product only
      // converges once the dark tail has died off; thirty bins of padding
      // cover eta down to 0.3 at this dark rate.
      const int n = 45;
      const int support = 15;
      PhotonNumberDistribution source;
      source.probs.assign(n + 1, 0.0);
      double sum = 0.0;
      for (int i = 0; i <= support; ++i) {
        source.probs[static_cast<std::size_t>(i)] = rng.next_double();
        sum += source.probs[static_cast<std::size_t>(i)];
      }
      for (double& p : source.probs) p /= sum;
      const double eta = 0.3 + 0.6 * rng.next_double();
      const DetectorModel det{eta, dark};
      const auto channel =
          dark > 0.0 ? composed_matrix(det, n) : loss_matrix(det, n);
      const auto observed = apply_forward(channel, source);
      const auto [candidate, diag] = invert_counts(observed, det, n);
      for (int i = 0; i <= support; ++i)
        CHECK(std::fabs(candidate.probs[static_cast<std::size_t>(i)] -
                        source.probs[static_cast<std::size_t>(i)]) < 1e-6);
    }
  }
}

TEST_CASE("perfect detector inversion is the identity") {
  const auto observed = coherent_source(1.5, 12);
  const auto [candidate, diag] = invert_counts(observed, {1.0, 0.0}, 12);
  CHECK(diag.physical);
  for (std::size_t i = 0; i < observed.probs.size(); ++i)
    CHECK(candidate.probs[i] == doctest::Approx(observed.probs[i]).epsilon(1e-12));
}

TEST_CASE("tail perturbations drive the low-efficiency inversion unphysical") {
  const DetectorModel det{0.1, 0.0};
  auto observed = apply_forward(loss_matrix(det, 20), coherent_source(1.0, 20));
  for (int k = 10; k <= 20; ++k)
    observed.probs[static_cast<std::size_t>(k)] += (k % 2 == 0) ? 1e-3 : -1e-3;
  const auto [candidate, diag] = invert_counts(observed, det, 20);
  CHECK_FALSE(diag.physical);
  CHECK(diag.min_entry < 0.0);
}

TEST_CASE("invert_counts validates inputs") {
  const auto observed = coherent_source(1.0, 10);
  CHECK_THROWS_AS(invert_counts(observed, {0.0, 0.0}, 10), std::domain_error);
  CHECK_THROWS_AS(invert_counts(observed, {0.5, 0.0}, 11), std::invalid_argument);
}

TEST_CASE("condition estimate grows as efficiency falls") {
  double previous = 0.0;
  for (double eta : {0.9, 0.5, 0.2, 0.1}) {
    const double estimate = condition_estimate({eta, 0.0}, 20);
    CHECK(estimate >= previous);
    previous = estimate;
  }
}

TEST_CASE("diagnostics expose the inverse tail column norm") {
  const DetectorModel det{0.2, 0.0};
  const auto observed = apply_forward(loss_matrix(det, 12), coherent_source(1.0, 12));
  const auto [candidate, diag] = invert_counts(observed, det, 12);
  const auto inv = loss_inverse(det, 12);
  long double want = 0.0L;
  for (int k = 0; k <= 12; ++k) want = std::max(want, std::fabs(inv(k, 12)));
  CHECK(diag.tail_sensitivity == doctest::Approx(static_cast<double>(want)));
  CHECK(diag.condition_estimate ==
        doctest::Approx(condition_estimate(det, 12)).epsilon(1e-12));
}

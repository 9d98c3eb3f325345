#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "photostat/forward.hpp"
#include "photostat/rng.hpp"
#include "photostat/special.hpp"

using namespace photostat;

namespace {

// Eq.-by-eq evaluation of the dark+loss channel entry, summing over the
// number of dark counts directly. Oracle for composed_matrix.
double composed_entry_direct(int k, int n, double eta, double lt) {
  const BinomialTable binom(std::max(k, n));
  long double acc = 0.0L;
  long double dark = std::exp(static_cast<long double>(-lt));
  for (int d = 0; d <= k; ++d) {
    if (d > 0) dark *= lt / d;
    acc += dark * binom(n, k - d) * std::pow(static_cast<long double>(eta), k - d) *
           std::pow(1.0L - static_cast<long double>(eta), n - k + d);
  }
  return static_cast<double>(acc);
}

// Same quantity with the summation index swapped (d <-> k-d).
double composed_entry_swapped(int k, int n, double eta, double lt) {
  const BinomialTable binom(std::max(k, n));
  long double acc = 0.0L;
  std::vector<long double> dark(static_cast<std::size_t>(k) + 1);
  dark[0] = std::exp(static_cast<long double>(-lt));
  for (int d = 1; d <= k; ++d) dark[static_cast<std::size_t>(d)] = dark[d - 1] * lt / d;
  for (int d = 0; d <= k; ++d)
    acc += dark[static_cast<std::size_t>(k - d)] * binom(n, d) *
           std::pow(static_cast<long double>(eta), d) *
           std::pow(1.0L - static_cast<long double>(eta), n - d);
  return static_cast<double>(acc);
}

}  // namespace

TEST_CASE("loss matrix entries and structure") {
  const DetectorModel det{0.2, 0.0};
  const auto m = loss_matrix(det, 6);
  CHECK(static_cast<double>(m(1, 2)) == doctest::Approx(0.32).epsilon(1e-14));
  // triangularity: zero whenever the source has fewer photons than detected
  for (int k = 0; k <= 6; ++k)
    for (int n = 0; n < k; ++n) CHECK(static_cast<double>(m(k, n)) == 0.0);
}

TEST_CASE("lossless and blind detectors") {
  const auto identity = loss_matrix({1.0, 0.0}, 5);
  for (int k = 0; k <= 5; ++k)
    for (int n = 0; n <= 5; ++n)
      CHECK(static_cast<double>(identity(k, n)) == (k == n ? 1.0 : 0.0));

  const auto blind = loss_matrix({0.0, 0.0}, 5);
  for (int n = 0; n <= 5; ++n) CHECK(static_cast<double>(blind(0, n)) == 1.0);
  for (int k = 1; k <= 5; ++k)
    for (int n = 0; n <= 5; ++n) CHECK(static_cast<double>(blind(k, n)) == 0.0);
}

TEST_CASE("loss columns are stochastic") {
  for (double eta : {0.1, 0.2, 0.5, 0.77, 0.9}) {
    const auto m = loss_matrix({eta, 0.0}, 30);
    for (int n = 0; n <= 30; ++n) {
      long double col = 0.0L;
      for (int k = 0; k <= 30; ++k) col += m(k, n);
      CHECK(std::fabs(static_cast<double>(col) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("dark matrix entries, structure, and column deficit") {
  const DetectorModel det{1.0, 0.5};
  const auto m = dark_matrix(det, 10);
  CHECK(static_cast<double>(m(0, 0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
  CHECK(static_cast<double>(m(2, 0)) ==
        doctest::Approx(std::exp(-0.5) * 0.125).epsilon(1e-14));
  for (int k = 0; k <= 10; ++k)
    for (int d = k + 1; d <= 10; ++d) CHECK(static_cast<double>(m(k, d)) == 0.0);
  // column sums fall short of one by exactly the Poisson tail beyond N
  for (int d = 0; d <= 10; ++d) {
    long double col = 0.0L;
    for (int k = 0; k <= 10; ++k) col += m(k, d);
    const double tail = poisson_upper_tail(10 - d, 0.5);
    CHECK(std::fabs(static_cast<double>(col) + tail - 1.0) < 1e-12);
  }
  const auto id = dark_matrix({1.0, 0.0}, 4);
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      CHECK(static_cast<double>(id(i, j)) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("composed channel equals dark times loss and the direct sum") {
  const DetectorModel det{0.35, 0.8};
  const auto composed = composed_matrix(det, 12);
  const auto product = multiply(dark_matrix(det, 12), loss_matrix(det, 12));
  for (int k = 0; k <= 12; ++k)
    for (int n = 0; n <= 12; ++n) {
      const double entry = static_cast<double>(composed(k, n));
      CHECK(std::fabs(entry - static_cast<double>(product[k * 13 + n])) < 1e-12);
      CHECK(entry == doctest::Approx(composed_entry_direct(k, n, 0.35, 0.8))
                         .epsilon(1e-12));
    }
}

TEST_CASE("index-swapped dark sum is identical") {
  for (int k = 0; k <= 9; ++k)
    for (int n = 0; n <= 9; ++n)
      CHECK(composed_entry_direct(k, n, 0.6, 1.3) ==
            doctest::Approx(composed_entry_swapped(k, n, 0.6, 1.3)).epsilon(1e-13));
}

TEST_CASE("composed channel with no dark counts is the loss channel") {
  const DetectorModel det{0.4, 0.0};
  const auto composed = composed_matrix(det, 8);
  const auto loss = loss_matrix(det, 8);
  for (int k = 0; k <= 8; ++k)
    for (int n = 0; n <= 8; ++n)
      CHECK(static_cast<double>(composed(k, n)) ==
            doctest::Approx(static_cast<double>(loss(k, n))).epsilon(1e-15));
}

TEST_CASE("perfect loss with darks gives the shifted Poisson") {
  const DetectorModel det{1.0, 0.5};
  const auto composed = composed_matrix(det, 8);
  for (int k = 0; k <= 8; ++k)
    for (int n = 0; n <= 8; ++n) {
      double want = 0.0;
      if (k >= n) {
        want = std::exp(-0.5);
        for (int i = 1; i <= k - n; ++i) want *= 0.5 / i;
      }
      CHECK(static_cast<double>(composed(k, n)) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("apply_forward reproduces the coherent closed form") {
  const auto source = coherent_source(1.0, 40);
  const auto counting = apply_forward(loss_matrix({0.2, 0.0}, 40), source);
  for (int k = 0; k <= 20; ++k)
    CHECK(std::fabs(counting.probs[static_cast<std::size_t>(k)] -
                    coherent_counting_pmf(1.0, 0.2, k)) < 1e-10);
}

TEST_CASE("apply_forward on a Fock state is the binomial row") {
  const auto counting = apply_forward(loss_matrix({0.2, 0.0}, 6), fock_source(2, 6));
  CHECK(counting.probs[0] == doctest::Approx(0.64).epsilon(1e-14));
  CHECK(counting.probs[1] == doctest::Approx(0.32).epsilon(1e-14));
  CHECK(counting.probs[2] == doctest::Approx(0.04).epsilon(1e-14));
  for (std::size_t k = 3; k < counting.probs.size(); ++k) CHECK(counting.probs[k] == 0.0);
}

TEST_CASE("identity channel passes the source through") {
  const auto source = coherent_source(2.0, 25);
  const auto counting = apply_forward(loss_matrix({1.0, 0.0}, 25), source);
  for (std::size_t k = 0; k < source.probs.size(); ++k)
    CHECK(counting.probs[k] == doctest::Approx(source.probs[k]).epsilon(1e-15));
}

TEST_CASE("apply_forward rejects truncation mismatch") {
  CHECK_THROWS_AS(apply_forward(loss_matrix({0.5, 0.0}, 10), coherent_source(1.0, 9)),
                  std::invalid_argument);
}

TEST_CASE("coherent counting pmf properties") {
  CHECK(coherent_counting_pmf(1.0, 0.2, 0) ==
        doctest::Approx(std::exp(-0.2)).epsilon(1e-14));
  // perfect detector passes the source through
  const auto source = coherent_source(1.7, 30);
  for (int k = 0; k <= 30; ++k)
    CHECK(coherent_counting_pmf(1.7, 1.0, k) ==
          doctest::Approx(source.probs[static_cast<std::size_t>(k)]).epsilon(1e-13));
  long double sum = 0.0L;
  for (int k = 0; k <= 60; ++k) sum += coherent_counting_pmf(1.0, 0.2, k);
  CHECK(std::fabs(static_cast<double>(sum) - 1.0) < 1e-14);
}

TEST_CASE("confidence without darks is eta^k") {
  const double root_half = std::sqrt(0.5);
  CHECK(confidence({root_half, 0.0}, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(confidence({0.9, 0.0}, 1) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(confidence({0.3, 0.0}, 0) == 1.0);
}

TEST_CASE("confidence with darks matches the composed diagonal") {
  const DetectorModel det{0.78, 0.5};
  const auto composed = composed_matrix(det, 8);
  for (int k = 0; k <= 8; ++k)
    CHECK(confidence(det, k) ==
          doctest::Approx(static_cast<double>(composed(k, k))).epsilon(1e-13));
}

TEST_CASE("confidence is nondecreasing in eta") {
  for (int k : {1, 2, 5}) {
    double prev = -1.0;
    for (double eta = 0.05; eta <= 1.0; eta += 0.05) {
      const double c = confidence({eta, 0.0}, k);
      CHECK(c >= prev);
      prev = c;
    }
  }
}

TEST_CASE("channel role names round-trip") {
  for (ChannelRole role : {ChannelRole::loss, ChannelRole::dark, ChannelRole::composed,
                           ChannelRole::loss_inverse, ChannelRole::dark_inverse,
                           ChannelRole::composed_inverse})
    CHECK(role_from_string(to_string(role)) == role);
  CHECK_THROWS_AS(role_from_string("bogus"), std::invalid_argument);
}

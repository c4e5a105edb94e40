#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "resicomp/density.hpp"

using namespace resicomp;

namespace {

double phi_oracle(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

GmmParams single(double mu, double sigma) {
  GmmParams g;
  g.weights = {1.0, 0.0, 0.0, 0.0};
  g.means = {mu, 0.0, 0.0, 0.0};
  g.sigmas = {sigma, 1.0, 1.0, 1.0};
  return g;
}

GmmParams random_gmm(std::mt19937_64& rng, int clamp) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GmmParams g;
  double logits[3];
  for (double& l : logits) l = 4.0 * u(rng) - 2.0;
  const auto w = softmax(std::span<const double>(logits, 3));
  for (int k = 0; k < 3; ++k) {
    g.weights[k] = w[k];
    g.means[k] = (2.0 * u(rng) - 1.0) * clamp * 1.2;
    g.sigmas[k] = kSigmaFloor + std::pow(10.0, 3.0 * u(rng) - 1.0);
  }
  return g;
}

}  // namespace

TEST_CASE("pinned exp tracks libm") {
  for (double x = -700; x <= 700; x += 0.37) CHECK(pinned_exp(x) == doctest::Approx(std::exp(x)).epsilon(1e-14));
  CHECK(pinned_exp(0.0) == 1.0);
  CHECK(pinned_exp(-800.0) == 0.0);
}

TEST_CASE("normal cdf against an erfc oracle") {
  double worst = 0;
  for (double z = -9; z <= 9; z += 0.001) worst = std::max(worst, std::abs(normal_cdf(z) - phi_oracle(z)));
  MESSAGE("max |Phi - oracle| = " << worst);
  CHECK(worst < 1e-7);
  CHECK(normal_cdf(-8.5) == 0.0);
  CHECK(normal_cdf(8.5) == 1.0);
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-9));
  for (double z = -8; z < 8; z += 0.01) CHECK(normal_cdf(z) <= normal_cdf(z + 0.01));
}

TEST_CASE("discretized unit-bin mass") {
  const Pmf p = discretize(single(0.0, 0.5), 127);
  const double want = phi_oracle(1.0) - phi_oracle(-1.0);
  CHECK(p.p(0) == doctest::Approx(want).epsilon(1e-6));
  CHECK(p.p(0) == doctest::Approx(0.6827).epsilon(1e-4));
  CHECK(p.p(1) == p.p(-1));
  CHECK(p.p(5) == p.p(-5));
  CHECK(p.lo == -127);
  CHECK(p.hi() == 127);
}

TEST_CASE("tail mass folds into the end symbols") {
  const Pmf up = discretize(single(1270.0, 1.0), 127);
  CHECK(up.p(127) == doctest::Approx(1.0).epsilon(1e-12));
  const Pmf down = discretize(single(-1270.0, 1.0), 127);
  CHECK(down.p(-127) == doctest::Approx(1.0).epsilon(1e-12));
  const Pmf edge = discretize(single(127.0, 3.0), 127);
  CHECK(edge.p(127) == doctest::Approx(1.0 - phi_oracle(-0.5 / 3.0)).epsilon(1e-6));
}

TEST_CASE("pmfs are normalized") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10000; ++t) {
    const int clamp = 1 + static_cast<int>(rng() % 200);
    const Pmf p = discretize(random_gmm(rng, clamp), clamp);
    const double s = std::accumulate(p.probs.begin(), p.probs.end(), 0.0);
    REQUIRE(std::abs(s - 1.0) < 1e-9);
    for (double v : p.probs) REQUIRE(v >= 0.0);
  }
}

TEST_CASE("shifting the mean shifts the argmax") {
  for (double sigma : {0.11, 0.2, 0.29})
    for (int mu = -20; mu < 20; ++mu) {
      const Pmf a = discretize(single(mu, sigma), 127);
      const Pmf b = discretize(single(mu + 1, sigma), 127);
      const auto ia = std::max_element(a.probs.begin(), a.probs.end()) - a.probs.begin();
      const auto ib = std::max_element(b.probs.begin(), b.probs.end()) - b.probs.begin();
      CHECK(ib == ia + 1);
    }
}

TEST_CASE("frequency tables") {
  Pmf uniform;
  uniform.lo = -128;
  uniform.probs.assign(256, 1.0 / 256);
  const FreqTable u = to_freq_table(uniform);
  for (uint32_t c : u.counts) CHECK(c == 256);
  CHECK(u.cumulative.back() == kFreqTotal);

  Pmf with_zero;
  with_zero.lo = 0;
  with_zero.probs = {0.5, 0.0, 0.5};
  const FreqTable z = to_freq_table(with_zero);
  CHECK(z.counts[1] == 1);
  CHECK(z.counts[0] + z.counts[2] == kFreqTotal - 1);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 2000; ++t) {
    const int clamp = 1 + static_cast<int>(rng() % 127);
    const Pmf p = discretize(random_gmm(rng, clamp), clamp);
    const FreqTable f = to_freq_table(p);
    uint64_t sum = 0;
    double worst = 0;
    size_t floored = 0;
    for (size_t i = 0; i < f.size(); ++i) {
      REQUIRE(f.counts[i] >= 1);
      sum += f.counts[i];
      REQUIRE(f.cumulative[i + 1] == f.cumulative[i] + f.counts[i]);
      if (p.probs[i] * kFreqTotal < 1.0) ++floored;
      worst = std::max(worst, std::abs(static_cast<double>(f.counts[i]) / kFreqTotal - p.probs[i]));
    }
    REQUIRE(sum == kFreqTotal);
    // Each floored symbol can take at most one count from another symbol.
    CHECK(worst <= (2.0 + static_cast<double>(floored)) / kFreqTotal);
  }
}

TEST_CASE("bit costs") {
  const Pmf p = discretize(single(0.0, 0.5), 127);
  CHECK(bits_of(p, 0) == doctest::Approx(0.551).epsilon(1e-3));
  Pmf certain;
  certain.lo = 3;
  certain.probs = {1.0};
  CHECK(bits_of(certain, 3) == 0.0);
  Pmf uniform;
  uniform.lo = 0;
  uniform.probs.assign(256, 1.0 / 256);
  CHECK(bits_of(uniform, 17) == doctest::Approx(8.0));
  CHECK(bits_of(to_freq_table(uniform), 17) == doctest::Approx(8.0));
}

TEST_CASE("expected bit cost equals entropy") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Pmf p = discretize(random_gmm(rng, 60), 60);
    double ce = 0;
    for (int v = p.lo; v <= p.hi(); ++v)
      if (p.p(v) > 0) ce += p.p(v) * bits_of(p, v);
    CHECK(ce == doctest::Approx(entropy_bits(p)).epsilon(1e-9));
  }
}

TEST_CASE("softmax and validity") {
  const double logits[3] = {3.0, 0.0, 0.0};
  const auto w = softmax(std::span<const double>(logits, 3));
  const double e3 = std::exp(3.0);
  CHECK(w[0] == doctest::Approx(e3 / (e3 + 2)));
  CHECK(w[1] == doctest::Approx(1 / (e3 + 2)));
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-12));
  GmmParams g = single(0, 0.1);
  CHECK_FALSE(g.valid());
  g.sigmas[0] = 0.11;
  CHECK(g.valid());
  g.weights[1] = 0.1;
  CHECK_FALSE(g.valid());
}

TEST_CASE("parallel table construction matches the serial reference") {
  std::mt19937_64 rng(4);
  std::vector<GmmParams> params;
  for (int i = 0; i < 3000; ++i) params.push_back(random_gmm(rng, 127));
  CHECK(build_tables(params, 127) == build_tables_serial(params, 127));
}

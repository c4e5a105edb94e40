#include "resicomp/density.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kCdfCutoff = 8.0;

// A&S 7.1.26, |error| <= 1.5e-7.
constexpr double kErfP = 0.3275911;
constexpr double kErfA1 = 0.254829592;
constexpr double kErfA2 = -0.284496736;
constexpr double kErfA3 = 1.421413741;
constexpr double kErfA4 = -1.453152027;
constexpr double kErfA5 = 1.061405429;

// Evaluation order: t = 1 / (1 + p u); poly by Horner from a5 down to a1,
// times t; erf = 1 - poly * exp(-u * u). Odd extension for u < 0.
double pinned_erf(double u) {
  const double a = u < 0.0 ? -u : u;
  const double t = 1.0 / (1.0 + kErfP * a);
  double poly = kErfA5;
  poly = poly * t + kErfA4;
  poly = poly * t + kErfA3;
  poly = poly * t + kErfA2;
  poly = poly * t + kErfA1;
  poly = poly * t;
  const double y = 1.0 - poly * pinned_exp(-(a * a));
  return u < 0.0 ? -y : y;
}

}  // namespace

double pinned_exp(double x) {
  if (x != x) return x;
  if (x > 709.0) return HUGE_VAL;
  if (x < -745.0) return 0.0;
  const double n = std::floor(x * kInvLn2 + 0.5);
  const double r = (x - n * kLn2Hi) - n * kLn2Lo;
  // Taylor series to r^13; |r| <= 0.35 keeps the truncation below 1e-17.
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  return std::ldexp(p, static_cast<int>(n));
}

double normal_cdf(double z) {
  if (z <= -kCdfCutoff) return 0.0;
  if (z >= kCdfCutoff) return 1.0;
  return 0.5 * (1.0 + pinned_erf(z * kInvSqrt2));
}

std::array<double, kMaxComponents> softmax(std::span<const double> logits) {
  std::array<double, kMaxComponents> out{};
  if (logits.empty() || logits.size() > kMaxComponents)
    throw InvalidArgument("softmax: component count out of range");
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = pinned_exp(logits[i] - top);
    sum += out[i];
  }
  for (size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
  return out;
}

bool GmmParams::valid() const {
  if (k < 1 || k > kMaxComponents) return false;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    if (!(weights[i] >= 0.0 && weights[i] <= 1.0)) return false;
    if (!(sigmas[i] >= kSigmaFloor) || !std::isfinite(means[i])) return false;
    sum += weights[i];
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

Pmf discretize(const GmmParams& gmm, int clamp) {
  if (!gmm.valid()) throw InvalidArgument("discretize: invalid mixture parameters");
  if (clamp < 0) throw InvalidArgument("discretize: negative clamp bound");
  const int n = 2 * clamp + 1;
  Pmf pmf;
  pmf.lo = -clamp;
  pmf.probs.assign(static_cast<size_t>(n), 0.0);
  if (n == 1) {
    pmf.probs[0] = 1.0;
    return pmf;
  }
  // cdf[i] is the component CDF at the upper edge of symbol lo + i.
  std::vector<double> cdf(static_cast<size_t>(n - 1));
  for (int c = 0; c < gmm.k; ++c) {
    double w = gmm.weights[c];
    if (w == 0.0) continue;
    // Components repeating an earlier one were folded into it.
    bool repeat = false;
    for (int e = 0; e < c; ++e)
      repeat = repeat || (gmm.weights[e] != 0.0 && gmm.means[e] == gmm.means[c] && gmm.sigmas[e] == gmm.sigmas[c]);
    if (repeat) continue;
    for (int e = c + 1; e < gmm.k; ++e)
      if (gmm.means[e] == gmm.means[c] && gmm.sigmas[e] == gmm.sigmas[c]) w += gmm.weights[e];
    const double mu = gmm.means[c];
    const double sigma = gmm.sigmas[c];
    const double lo_edge = mu - kCdfCutoff * sigma;
    const double hi_edge = mu + kCdfCutoff * sigma;
    for (int i = 0; i < n - 1; ++i) {
      const double edge = pmf.lo + i + 0.5;
      if (edge <= lo_edge) {
        cdf[i] = 0.0;
      } else if (edge >= hi_edge) {
        cdf[i] = 1.0;
      } else {
        cdf[i] = normal_cdf((edge - mu) / sigma);
      }
    }
    double prev = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      pmf.probs[i] += w * std::max(0.0, cdf[i] - prev);
      prev = std::max(prev, cdf[i]);
    }
    pmf.probs[n - 1] += w * (1.0 - prev);
  }
  const double sum = std::accumulate(pmf.probs.begin(), pmf.probs.end(), 0.0);
  for (double& p : pmf.probs) p /= sum;
  return pmf;
}

FreqTable to_freq_table(const Pmf& pmf) {
  const size_t n = pmf.probs.size();
  if (n == 0 || n > kFreqTotal) throw InvalidArgument("to_freq_table: alphabet size out of range");
  FreqTable t;
  t.lo = pmf.lo;
  t.counts.assign(n, 0);
  std::vector<double> rem(n);
  int64_t assigned = 0;
  double mass = 0;
  for (size_t i = 0; i < n; ++i) {
    const double scaled = std::max(0.0, pmf.probs[i]) * kFreqTotal;
    const double whole = std::floor(scaled);
    mass += std::max(0.0, pmf.probs[i]);
    rem[i] = scaled - whole;
    t.counts[i] = static_cast<uint32_t>(std::max(1.0, whole));
    assigned += t.counts[i];
  }
  if (mass > 1.0 + 1e-6) throw InvalidArgument("to_freq_table: probabilities exceed one");
  std::vector<uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  if (assigned < static_cast<int64_t>(kFreqTotal)) {
    auto before = [&](uint32_t a, uint32_t b) { return rem[a] > rem[b] || (rem[a] == rem[b] && a < b); };
    // Unnormalized input can leave more than n units; hand them out in rounds.
    while (assigned < static_cast<int64_t>(kFreqTotal)) {
      const size_t take = static_cast<size_t>(std::min<int64_t>(static_cast<int64_t>(kFreqTotal) - assigned, n));
      std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take - 1), order.end(), before);
      for (size_t i = 0; i < take; ++i) ++t.counts[order[i]];
      assigned += static_cast<int64_t>(take);
    }
  } else if (assigned > static_cast<int64_t>(kFreqTotal)) {
    // The floor pushed the total over; take the excess one unit at a time
    // from the current largest count, lower index first on ties.
    auto smaller = [&](uint32_t a, uint32_t b) {
      return t.counts[a] < t.counts[b] || (t.counts[a] == t.counts[b] && a > b);
    };
    std::vector<uint32_t> big;
    for (uint32_t i : order)
      if (t.counts[i] > 1) big.push_back(i);
    std::priority_queue<uint32_t, std::vector<uint32_t>, decltype(smaller)> heap(smaller, std::move(big));
    while (assigned > static_cast<int64_t>(kFreqTotal)) {
      const uint32_t top = heap.top();
      heap.pop();
      --t.counts[top];
      --assigned;
      if (t.counts[top] > 1) heap.push(top);
    }
  }
  t.cumulative.resize(n + 1);
  t.cumulative[0] = 0;
  for (size_t i = 0; i < n; ++i) t.cumulative[i + 1] = t.cumulative[i] + t.counts[i];
  return t;
}

std::vector<FreqTable> build_tables_serial(std::span<const GmmParams> params, int clamp) {
  std::vector<FreqTable> out(params.size());
  for (size_t i = 0; i < params.size(); ++i) out[i] = gmm_table(params[i], clamp);
  return out;
}

std::vector<FreqTable> build_tables(std::span<const GmmParams> params, int clamp) {
  std::vector<FreqTable> out(params.size());
  const long n = static_cast<long>(params.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < n; ++i) out[i] = gmm_table(params[i], clamp);
  return out;
}

double bits_of(const Pmf& pmf, int symbol) {
  if (symbol < pmf.lo || symbol > pmf.hi()) throw InvalidArgument("bits_of: symbol outside alphabet");
  return -std::log2(pmf.p(symbol));
}

double bits_of(const FreqTable& table, int symbol) {
  if (symbol < table.lo || symbol > table.hi())
    throw InvalidArgument("bits_of: symbol outside alphabet");
  return -std::log2(static_cast<double>(table.counts[static_cast<size_t>(symbol - table.lo)]) /
                    kFreqTotal);
}

double entropy_bits(const Pmf& pmf) {
  double h = 0.0;
  for (double p : pmf.probs)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

}  // namespace resicomp

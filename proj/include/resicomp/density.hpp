#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace resicomp {

inline constexpr double kSigmaFloor = 0.11;
inline constexpr int kMaxComponents = 4;
inline constexpr int kDefaultComponents = 3;
inline constexpr int kFreqBits = 16;
inline constexpr uint32_t kFreqTotal = 1u << kFreqBits;

// Gaussian mixture over one token element.
struct GmmParams {
  int k = kDefaultComponents;
  std::array<double, kMaxComponents> weights{};
  std::array<double, kMaxComponents> means{};
  std::array<double, kMaxComponents> sigmas{};

  // Weights sum to one within 1e-9, sigmas at least kSigmaFloor.
  bool valid() const;
};

// Probabilities over the integers lo .. lo + probs.size() - 1.
struct Pmf {
  int lo = 0;
  std::vector<double> probs;

  int hi() const { return lo + static_cast<int>(probs.size()) - 1; }
  double p(int symbol) const { return probs[static_cast<size_t>(symbol - lo)]; }
};

// Integer frequencies summing to kFreqTotal, each at least one.
struct FreqTable {
  int lo = 0;
  std::vector<uint32_t> counts;
  std::vector<uint32_t> cumulative;  // counts.size() + 1 entries

  size_t size() const { return counts.size(); }
  int hi() const { return lo + static_cast<int>(counts.size()) - 1; }
  bool operator==(const FreqTable&) const = default;
};

// exp() from basic IEEE operations only, so encoder and decoder agree bit for
// bit regardless of the platform libm.
double pinned_exp(double x);

// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf approximation on
// top of pinned_exp. Exactly 0 below -8 and exactly 1 above 8.
double normal_cdf(double z);

// Softmax over the first `n` logits.
std::array<double, kMaxComponents> softmax(std::span<const double> logits);

// Interval-integrated mixture over [-clamp, clamp] with the tails folded into
// the end symbols.
Pmf discretize(const GmmParams& gmm, int clamp);

// Largest-remainder quantization to kFreqTotal with a floor of one.
FreqTable to_freq_table(const Pmf& pmf);

inline FreqTable gmm_table(const GmmParams& gmm, int clamp) {
  return to_freq_table(discretize(gmm, clamp));
}

// One table per entry; OpenMP-parallel.
std::vector<FreqTable> build_tables(std::span<const GmmParams> params, int clamp);
// Single-threaded reference for build_tables.
std::vector<FreqTable> build_tables_serial(std::span<const GmmParams> params, int clamp);

// -log2 p(symbol).
double bits_of(const Pmf& pmf, int symbol);
// -log2(count / total), the cost the range coder actually pays.
double bits_of(const FreqTable& table, int symbol);

double entropy_bits(const Pmf& pmf);

}  // namespace resicomp

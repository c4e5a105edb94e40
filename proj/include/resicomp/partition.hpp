#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "resicomp/context_modes.hpp"
#include "resicomp/token_codec.hpp"

namespace resicomp {

// Slice-size exponent travels in packet headers in thousandths.
int beta_to_milli(double beta);
inline double milli_to_beta(int milli) { return milli / 1000.0; }

// Ordered partition of the token grid into L slices.
struct SlicePlan {
  int h = 0;
  int w = 0;
  int slices = 0;
  uint64_t seed = 0;
  int beta_milli = 0;
  std::vector<Position> positions;   // permutation of the grid
  std::vector<uint32_t> boundaries;  // slices + 1 cumulative offsets

  std::span<const Position> slice(int l) const {
    return std::span<const Position>(positions).subspan(boundaries[l],
                                                        boundaries[l + 1] - boundaries[l]);
  }
  size_t slice_size(int l) const { return boundaries[l + 1] - boundaries[l]; }
  // Slice index per grid position (row * w + col).
  std::vector<int> owner() const;

  // Little-endian: h u16, w u16, L u16, seed u64, beta_milli u16,
  // boundaries u32 x (L + 1).
  std::string serialize() const;
  bool operator==(const SlicePlan&) const = default;
};

// Quantized low-discrepancy traversal of an h x w grid: an additive
// recurrence on the plastic-constant multipliers, floored onto the lattice,
// skipping cells already visited. `seed` offsets the start index.
std::vector<Position> qlds_positions(int h, int w, uint64_t seed);

// N_l proportional to (1 + C_l / L)^beta, largest-remainder rounding with
// ties to the lower slice, every slice at least one token.
std::vector<uint32_t> slice_sizes(size_t n, int slices, std::span<const int> context_counts,
                                  double beta);

// beta_milli < 0 selects the mode's default exponent.
SlicePlan build_plan(int h, int w, const ContextMode& mode, uint64_t seed, int beta_milli = -1);

}  // namespace resicomp

#include "resicomp/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

// frac(1/rho) and frac(1/rho^2) in 0.64 fixed point, rho the plastic number.
constexpr uint64_t kAlpha1 = 0xc13fa9a902a6328fULL;
constexpr uint64_t kAlpha2 = 0x91e10da5c79e7b1cULL;
constexpr uint64_t kHalf = 0x8000000000000000ULL;

int scale_to(uint64_t frac, int n) {
  return static_cast<int>((static_cast<unsigned __int128>(frac) * static_cast<unsigned>(n)) >> 64);
}

void put_le(std::string& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

int beta_to_milli(double beta) {
  if (!(beta >= 0.0) || beta > 65.535) throw InvalidArgument("beta must be in [0, 65.535]");
  return static_cast<int>(std::lround(beta * 1000.0));
}

std::vector<int> SlicePlan::owner() const {
  std::vector<int> own(positions.size(), -1);
  for (int l = 0; l < slices; ++l)
    for (const Position& p : slice(l)) own[static_cast<size_t>(p.row) * w + p.col] = l;
  return own;
}

std::string SlicePlan::serialize() const {
  std::string out;
  put_le(out, static_cast<uint64_t>(h), 2);
  put_le(out, static_cast<uint64_t>(w), 2);
  put_le(out, static_cast<uint64_t>(slices), 2);
  put_le(out, seed, 8);
  put_le(out, static_cast<uint64_t>(beta_milli), 2);
  for (uint32_t b : boundaries) put_le(out, b, 4);
  return out;
}

std::vector<Position> qlds_positions(int h, int w, uint64_t seed) {
  if (h < 1 || w < 1) throw InvalidArgument("qlds_positions: empty grid");
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<uint8_t> seen(n, 0);
  std::vector<Position> out;
  out.reserve(n);
  // x -> column, y -> row; kHalf + i * alpha taken mod 1.
  uint64_t x = kHalf + seed * kAlpha1;
  uint64_t y = kHalf + seed * kAlpha2;
  // The recurrence is dense, so every cell is reached; the cap only bounds
  // pathological grids, after which leftovers are appended in raster order.
  const uint64_t cap = static_cast<uint64_t>(n) * 4096 + 65536;
  for (uint64_t i = 0; out.size() < n && i < cap; ++i, x += kAlpha1, y += kAlpha2) {
    const int row = scale_to(y, h);
    const int col = scale_to(x, w);
    const size_t cell = static_cast<size_t>(row) * w + col;
    if (seen[cell]) continue;
    seen[cell] = 1;
    out.push_back({row, col});
  }
  for (size_t cell = 0; out.size() < n && cell < n; ++cell)
    if (!seen[cell]) out.push_back({static_cast<int>(cell / w), static_cast<int>(cell % w)});
  return out;
}

std::vector<uint32_t> slice_sizes(size_t n, int slices, std::span<const int> context_counts,
                                  double beta) {
  if (slices < 1) throw InvalidArgument("slice_sizes: need at least one slice");
  if (context_counts.size() != static_cast<size_t>(slices))
    throw InvalidArgument("slice_sizes: one context count per slice");
  if (n < static_cast<size_t>(slices))
    throw InvalidArgument("slice_sizes: fewer tokens (" + std::to_string(n) + ") than slices (" +
                          std::to_string(slices) + ")");
  std::vector<double> weight(static_cast<size_t>(slices));
  for (int l = 0; l < slices; ++l)
    weight[l] = std::pow(1.0 + static_cast<double>(context_counts[l]) / slices, beta);
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);

  std::vector<uint32_t> size(static_cast<size_t>(slices));
  std::vector<double> rem(static_cast<size_t>(slices));
  size_t assigned = 0;
  for (int l = 0; l < slices; ++l) {
    const double exact = static_cast<double>(n) * weight[l] / total;
    size[l] = static_cast<uint32_t>(std::floor(exact));
    rem[l] = exact - size[l];
    assigned += size[l];
  }
  std::vector<int> order(static_cast<size_t>(slices));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (size_t i = 0; assigned < n; ++i, ++assigned) ++size[order[i % order.size()]];

  // Floor of one token per slice, paid for by the largest slice.
  for (int l = 0; l < slices; ++l) {
    if (size[l] > 0) continue;
    auto largest = std::max_element(size.begin(), size.end());
    --*largest;
    size[l] = 1;
  }
  return size;
}

SlicePlan build_plan(int h, int w, const ContextMode& mode, uint64_t seed, int beta_milli) {
  if (h < 1 || w < 1) throw InvalidArgument("build_plan: empty grid");
  if (h > 0xFFFF || w > 0xFFFF) throw InvalidArgument("build_plan: grid too large");
  SlicePlan plan;
  plan.h = h;
  plan.w = w;
  plan.slices = mode.slices();
  plan.seed = seed;
  plan.beta_milli = beta_milli < 0 ? beta_to_milli(default_beta(mode.kind())) : beta_milli;
  if (plan.beta_milli > 0xFFFF) throw InvalidArgument("build_plan: beta too large");
  plan.positions = qlds_positions(h, w, seed);
  const auto counts = context_counts(mode);
  const auto sizes =
      slice_sizes(plan.positions.size(), plan.slices, counts, milli_to_beta(plan.beta_milli));
  plan.boundaries.assign(1, 0);
  for (uint32_t s : sizes) plan.boundaries.push_back(plan.boundaries.back() + s);
  return plan;
}

}  // namespace resicomp

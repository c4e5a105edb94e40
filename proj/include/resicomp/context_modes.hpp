#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace resicomp {

// Wire registry for mode_id. CUSTOM matrices never travel in packets.
enum class ModeKind : uint8_t { kIsc = 0, kLc = 1, kMdc = 2, kSlc = 3, kCustom = 255 };

std::string mode_name(ModeKind kind);
// Parses "ISC", "LC", "MDC", "SLC", "CUSTOM" (case-insensitive).
std::optional<ModeKind> parse_mode_kind(const std::string& name);

// Default slice-size exponent per mode.
double default_beta(ModeKind kind);

// L x L dependency matrix; depends(l, k) means slice l is coded conditioned
// on slice k. Indices are zero-based throughout the API.
class ContextMode {
 public:
  ContextMode() = default;
  // CUSTOM matrix; does not validate (see validate()).
  ContextMode(int slices, std::vector<uint8_t> matrix);

  int slices() const { return slices_; }
  ModeKind kind() const { return kind_; }
  // N_d for MDC, enhancement-layer count for SLC, 0 otherwise.
  int param() const { return param_; }
  bool depends(int l, int k) const { return matrix_[static_cast<size_t>(l) * slices_ + k] != 0; }
  const std::vector<uint8_t>& matrix() const { return matrix_; }
  // Slices k with depends(l, k), ascending.
  std::vector<int> contexts(int l) const;
  std::string describe() const;

  bool operator==(const ContextMode&) const = default;

 private:
  friend ContextMode make_mode(ModeKind, int, int);
  int slices_ = 0;
  ModeKind kind_ = ModeKind::kCustom;
  int param_ = 0;
  std::vector<uint8_t> matrix_;
};

// ISC: no contexts. LC: full chain. MDC(param = N_d): round-robin
// descriptions, each a chain. SLC(param = E): slice 0 is the base layer, the
// rest split into E contiguous enhancement layers; a slice conditions on the
// base and on every slice of the earlier enhancement layers.
// Throws InvalidArgument on bad parameters.
ContextMode make_mode(ModeKind kind, int slices, int param = 0);

struct ModeViolation {
  enum class Rule { kRecoverability, kInheritance };
  Rule rule;
  // One-based (l, k, j): l conditions on k; for inheritance, k conditions on
  // j but l does not.
  int l = 0;
  int k = 0;
  int j = 0;
  std::string message() const;
};

// Accepts iff strictly lower triangular and transitively closed.
std::optional<ModeViolation> validate(const ContextMode& mode);

// Row sums of G.
std::vector<int> context_counts(const ContextMode& mode);

// Slices that share one context set; they are predicted from one masked grid.
struct SliceGroup {
  std::vector<int> contexts;
  std::vector<int> slices;
};

// Predictor passes in dependency order. passes[0] holds the context-free
// slices served by the cached all-mask prediction; every later pass needs
// one predictor evaluation (its groups are batched together).
struct Schedule {
  std::vector<std::vector<SliceGroup>> passes;
  int iterations() const { return passes.empty() ? 0 : static_cast<int>(passes.size()) - 1; }
  // Pass index per slice.
  std::vector<int> depth;
};

Schedule iteration_schedule(const ContextMode& mode);

}  // namespace resicomp

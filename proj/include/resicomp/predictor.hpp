#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "resicomp/context_modes.hpp"
#include "resicomp/density.hpp"
#include "resicomp/partition.hpp"
#include "resicomp/token_codec.hpp"

namespace resicomp {

// Decoder-side fallback statistics; both endpoints load the same model.
struct PriorModel {
  std::vector<double> mean;  // per channel
  std::vector<double> std;   // per channel, >= kSigmaFloor
  int window = 11;
  std::array<double, kDefaultComponents> logits{3.0, 0.0, 0.0};

  int channels() const { return static_cast<int>(mean.size()); }
  bool operator==(const PriorModel&) const = default;
};

// Per-channel mean and standard deviation over every known token.
PriorModel fit_prior(std::span<const TokenGrid> grids);

// "RCPM" magic, u16 version, u16 C, f64 mean[C], f64 std[C], u16 window,
// f64 logits[3]; little-endian.
std::string serialize_model(const PriorModel& model);
PriorModel deserialize_model(const std::string& bytes);
void save_model(const std::filesystem::path& path, const PriorModel& model);
PriorModel load_model(const std::filesystem::path& path);

// Both heads for a set of masked positions; entries are position-major,
// channel-minor.
struct PredictorOutput {
  std::vector<Position> positions;
  int channels = 0;
  std::vector<GmmParams> gmm;     // density head
  std::vector<int32_t> values;    // concealment head
  std::vector<uint8_t> from_prior;  // per position: no known neighbour in the window

  const GmmParams& params(size_t pos_index, int c) const {
    return gmm[pos_index * channels + c];
  }
  int32_t value(size_t pos_index, int c) const { return values[pos_index * channels + c]; }
};

// Grid holding exactly the context slices of `slice` taken from `decoded`;
// everything else masked. Throws SynchronizationError when a context slice
// was not received (received[j] == 0).
TokenGrid collect_context(int slice, const ContextMode& mode, std::span<const uint8_t> received,
                          const SlicePlan& plan, const TokenGrid& decoded);

// Predictions at `positions`, all of which must be masked in `masked`.
// OpenMP-parallel over positions.
PredictorOutput predict_at(const TokenGrid& masked, const PriorModel& prior,
                           std::span<const Position> positions);
// Single-threaded reference for predict_at.
PredictorOutput predict_at_serial(const TokenGrid& masked, const PriorModel& prior,
                                  std::span<const Position> positions);

// Predictions at every masked position in raster order.
PredictorOutput predict(const TokenGrid& masked, const PriorModel& prior);

// Output of predict() on an all-mask grid at the given positions, without
// evaluating the window. Matches predict() exactly.
PredictorOutput prior_output(const PriorModel& prior, std::span<const Position> positions);

// Fills masked positions with the concealment head; known positions pass
// through. `output` must cover exactly the masked positions.
TokenGrid conceal(const TokenGrid& grid, const PredictorOutput& output);

}  // namespace resicomp

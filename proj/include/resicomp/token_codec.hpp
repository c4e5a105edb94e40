#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "resicomp/image.hpp"

namespace resicomp {

inline constexpr int kBlock = 16;

struct CodecConfig {
  int channels = 64;      // C
  double quality = 33.0;  // quantizer step scale
  int clamp = 127;        // V; token alphabet is [-V, V]

  // Throws InvalidArgument when out of range.
  void validate() const;
  double step(int zigzag_index) const {
    return quality * (1.0 + static_cast<double>(zigzag_index) / channels);
  }
};

struct Position {
  int row = 0;
  int col = 0;
  bool operator==(const Position&) const = default;
};

// Quantized latent grid. A position's C channel values are known or masked
// together; masked positions keep whatever value they held (usually 0).
struct TokenGrid {
  int h = 0;
  int w = 0;
  int channels = 0;
  std::vector<int32_t> values;  // (row * w + col) * channels + c
  std::vector<uint8_t> known;   // row * w + col

  TokenGrid() = default;
  TokenGrid(int rows, int cols, int c, bool all_known = false)
      : h(rows), w(cols), channels(c),
        values(static_cast<size_t>(rows) * cols * c, 0),
        known(static_cast<size_t>(rows) * cols, all_known ? 1 : 0) {}

  size_t positions() const { return known.size(); }
  size_t index(int row, int col) const { return static_cast<size_t>(row) * w + col; }
  int32_t* token(size_t pos) { return values.data() + pos * channels; }
  const int32_t* token(size_t pos) const { return values.data() + pos * channels; }
  bool all_known() const;
  size_t known_count() const;

  // Copy of this grid with every position masked and values zeroed.
  TokenGrid masked_like() const { return TokenGrid(h, w, channels, false); }
  bool operator==(const TokenGrid&) const = default;
};

struct AnalyzeStats {
  size_t coefficients = 0;
  size_t clamped = 0;
};

// Zigzag scan of a 16x16 block: entry i is row * 16 + col of the i-th
// coefficient.
const std::array<int, kBlock * kBlock>& zigzag_order();

// Channel c maps to plane c % planes and zigzag index c / planes.
int channel_plane(int channel, int planes);
int channel_zigzag(int channel, int planes);

// Forward transform and quantization. OpenMP-parallel over blocks.
TokenGrid analyze(const Image& image, const CodecConfig& cfg, AnalyzeStats* stats = nullptr);
// Single-threaded reference, bit-identical to analyze().
TokenGrid analyze_serial(const Image& image, const CodecConfig& cfg,
                         AnalyzeStats* stats = nullptr);

// Unquantized kept coefficients, laid out like TokenGrid::values.
std::vector<double> block_coefficients(const Image& image, const CodecConfig& cfg);

// Inverse of analyze up to quantization error. Throws InvalidArgument when
// any position is masked.
Image synthesize(const TokenGrid& tokens, const CodecConfig& cfg, int out_height, int out_width,
                 int planes = 1);

}  // namespace resicomp

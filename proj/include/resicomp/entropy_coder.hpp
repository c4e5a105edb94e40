#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "resicomp/density.hpp"

namespace resicomp {

struct Bitstring {
  std::vector<uint8_t> bytes;
  size_t bit_length() const { return bytes.size() * 8; }
  bool operator==(const Bitstring&) const = default;
};

// 32-bit range encoder with carry propagation (cache + pending 0xFF run).
// Symbol intervals are [floor(R * cum_lo / T), floor(R * cum_hi / T)) so the
// whole range is used without a division.
class RangeEncoder {
 public:
  void encode(const FreqTable& table, int symbol);
  // Flushes and returns the payload; the encoder is reset afterwards.
  Bitstring finish();

 private:
  void shift_low();

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint8_t cache_ = 0;
  uint64_t pending_ = 1;
  bool first_ = true;
  std::vector<uint8_t> out_;
};

// Consumes one table per symbol, so tables may depend on earlier output.
class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> bytes);
  // Throws CorruptStream when the stream cannot be decoded under `table`.
  int decode(const FreqTable& table);
  // Bytes not yet consumed; zero after a well-formed stream is fully read.
  size_t remaining() const { return bytes_.size() - pos_; }

 private:
  uint8_t next_byte();

  std::span<const uint8_t> bytes_;
  size_t pos_ = 0;
  uint32_t code_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
};

Bitstring encode(std::span<const int> symbols, std::span<const FreqTable> tables);
// Decodes tables.size() symbols; throws CorruptStream on malformed input,
// including trailing bytes.
std::vector<int> decode(const Bitstring& bits, std::span<const FreqTable> tables);

}  // namespace resicomp

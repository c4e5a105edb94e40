#include "resicomp/entropy_coder.hpp"

#include <algorithm>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

constexpr uint32_t kTop = 1u << 24;

void check_table(const FreqTable& table) {
  if (table.counts.empty() || table.cumulative.size() != table.counts.size() + 1 ||
      table.cumulative.back() != kFreqTotal)
    throw InvalidArgument("range coder: malformed frequency table");
}

}  // namespace

void RangeEncoder::shift_low() {
  if (static_cast<uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const uint8_t carry = static_cast<uint8_t>(low_ >> 32);
    uint8_t byte = cache_;
    do {
      // The leading byte sits above the initial 32-bit window and is always
      // zero, so it is not stored.
      if (first_) {
        first_ = false;
      } else {
        out_.push_back(static_cast<uint8_t>(byte + carry));
      }
      byte = 0xFF;
    } while (--pending_ != 0);
    cache_ = static_cast<uint8_t>(low_ >> 24);
  }
  ++pending_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

void RangeEncoder::encode(const FreqTable& table, int symbol) {
  check_table(table);
  if (symbol < table.lo || symbol > table.hi())
    throw InvalidArgument("range coder: symbol " + std::to_string(symbol) + " outside table");
  const size_t s = static_cast<size_t>(symbol - table.lo);
  const uint64_t r = range_;
  const uint64_t lo_off = (r * table.cumulative[s]) >> kFreqBits;
  const uint64_t hi_off = (r * table.cumulative[s + 1]) >> kFreqBits;
  low_ += lo_off;
  range_ = static_cast<uint32_t>(hi_off - lo_off);
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

Bitstring RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  Bitstring bits{std::move(out_)};
  *this = RangeEncoder{};
  return bits;
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> bytes) : bytes_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw CorruptStream("range coder: truncated payload");
  return bytes_[pos_++];
}

int RangeDecoder::decode(const FreqTable& table) {
  check_table(table);
  if (code_ >= range_) throw CorruptStream("range coder: code outside interval");
  const uint64_t r = range_;
  const uint64_t target = (((static_cast<uint64_t>(code_) + 1) << kFreqBits) - 1) / r;
  const auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(),
                                   static_cast<uint32_t>(target));
  const size_t s = static_cast<size_t>(it - table.cumulative.begin()) - 1;
  if (s >= table.counts.size()) throw CorruptStream("range coder: symbol search out of range");
  const uint64_t lo_off = (r * table.cumulative[s]) >> kFreqBits;
  const uint64_t hi_off = (r * table.cumulative[s + 1]) >> kFreqBits;
  if (code_ < lo_off || code_ >= hi_off) throw CorruptStream("range coder: interval mismatch");
  code_ -= static_cast<uint32_t>(lo_off);
  range_ = static_cast<uint32_t>(hi_off - lo_off);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return table.lo + static_cast<int>(s);
}

Bitstring encode(std::span<const int> symbols, std::span<const FreqTable> tables) {
  if (symbols.size() != tables.size())
    throw InvalidArgument("encode: one table per symbol required");
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) enc.encode(tables[i], symbols[i]);
  return enc.finish();
}

std::vector<int> decode(const Bitstring& bits, std::span<const FreqTable> tables) {
  RangeDecoder dec(bits.bytes);
  std::vector<int> out;
  out.reserve(tables.size());
  for (const FreqTable& t : tables) out.push_back(dec.decode(t));
  if (dec.remaining() != 0) throw CorruptStream("range coder: trailing bytes after payload");
  return out;
}

}  // namespace resicomp

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resicomp/entropy_coder.hpp"

namespace resicomp {

// ---------------------------------------------------------------------------
// Packets
// ---------------------------------------------------------------------------

inline constexpr uint8_t kPacketVersion = 1;
inline constexpr size_t kHeaderBytes = 40;
inline constexpr uint8_t kFlagBackup = 0x01;  // UEP duplicate of another packet

struct PacketHeader {
  uint8_t version = kPacketVersion;
  uint8_t flags = 0;
  uint64_t image_id = 0;
  uint8_t slice_index = 0;
  uint8_t total_slices = 0;
  uint8_t mode_id = 0;
  uint64_t plan_seed = 0;
  uint16_t grid_h = 0;
  uint16_t grid_w = 0;
  uint16_t channels = 0;  // 1..256; 256 travels as 0
  uint16_t beta_milli = 0;
  uint32_t payload_len = 0;
  uint32_t crc32 = 0;  // over the 36 header bytes before it plus the payload

  bool operator==(const PacketHeader&) const = default;
};

struct Packet {
  PacketHeader header;
  Bitstring payload;
  bool operator==(const Packet&) const = default;
};

using WirePacket = std::vector<uint8_t>;

// Header layout, little-endian: "RCPK", version u8, flags u8, image_id u64,
// slice_index u8, total_slices u8, mode_id u8, plan_seed u64, h u16, w u16,
// C u8, beta_milli u16, payload_len u32, crc32 u32, then the payload.
// payload_len and crc32 are computed, not taken from the header struct.
WirePacket to_wire(const Packet& packet);
// Sets payload_len and crc32 to the values to_wire() writes.
void seal(Packet& packet);
// nullopt when the magic, version, length, or CRC does not check out.
std::optional<Packet> from_wire(std::span<const uint8_t> bytes);

// ---------------------------------------------------------------------------
// Loss models
// ---------------------------------------------------------------------------

// Four printed chain parameters plus the (epsilon, gamma) they summarise.
struct PresetRecord {
  std::string name;
  double p_g = 0, p_b = 0, p_i = 0, p_b_to_g = 0;
  double epsilon = 0;  // stationary loss probability
  double gamma = 0;    // mean loss-burst length
};

const std::vector<PresetRecord>& preset_table();

struct LossModel {
  enum class Kind { kMarkov3, kMarkov2, kIid };
  Kind kind = Kind::kMarkov2;
  std::string name;
  int states = 0;
  std::vector<double> transition;  // row-major states x states
  std::vector<uint8_t> loss;       // per state
  std::optional<PresetRecord> preset;

  double p(int from, int to) const { return transition[static_cast<size_t>(from) * states + to]; }
};

// Good/bad chain: bad self-loop p_bb, good->bad p_gb. State 1 drops packets.
LossModel markov2(double p_gb, double p_bb);
// Independent losses as a two-state chain whose rows are both (1-eps, eps).
LossModel iid_loss(double epsilon);
// General three-state chain with exactly one loss state.
LossModel markov3(std::span<const double> transition, int loss_state);
// EP1..EP6: two-state chain calibrated to the preset's (epsilon, gamma):
// p_bb = 1 - 1/gamma, p_gb = epsilon / (gamma (1 - epsilon)).
LossModel preset(const std::string& name);
std::vector<std::string> preset_names();

struct LossStats {
  double epsilon = 0;
  double gamma = 0;
};

// Stationary loss mass and mean burst length (loss mass over the
// loss-to-receive flow). Throws InvalidArgument if the chain has more than one
// recurrent class.
LossStats stationary(const LossModel& model);
std::vector<double> stationary_distribution(const LossModel& model);

using LossTrace = std::vector<uint8_t>;  // 1 = received

// Chain started from its stationary distribution; deterministic in the seed.
LossTrace sample_trace(const LossModel& model, size_t n_packets, uint64_t seed);
// Empirical loss rate and mean run length of consecutive losses.
LossStats trace_stats(std::span<const uint8_t> trace);

// One 0/1 character per packet, one episode per line.
void write_traces(const std::filesystem::path& path, std::span<const LossTrace> traces);
std::vector<LossTrace> read_traces(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

struct Delivery {
  std::vector<Packet> packets;  // in send order
  LossTrace flags;              // per sent packet, after the CRC check
};

// Drops packets whose trace flag is 0 or whose CRC fails.
Delivery apply_loss(std::span<const WirePacket> sent, std::span<const uint8_t> trace);

// Per-slice received flags; a slice counts if any copy arrived.
std::vector<uint8_t> slice_flags(std::span<const Packet> received, int total_slices);
// First surviving copy per slice, or nullptr.
std::vector<const Packet*> slice_packets(std::span<const Packet> received, int total_slices);

// Ideal erasure code: decodable iff at least n_data of n_data + n_parity
// packets arrive.
bool fec_channel(int n_data, int n_parity, std::span<const uint8_t> trace);
inline double fec_parity_ratio(int n_data, int n_parity) {
  return static_cast<double>(n_parity) / (n_data + n_parity);
}
inline double fec_bandwidth_multiplier(int n_data, int n_parity) {
  return static_cast<double>(n_data + n_parity) / n_data;
}

// Appends a flagged duplicate of each protected slice's packet.
std::vector<Packet> uep_backup(std::span<const Packet> packets, std::span<const int> protected_slices);

}  // namespace resicomp

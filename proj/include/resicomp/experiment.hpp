#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "resicomp/pipeline.hpp"
#include "resicomp/transport.hpp"

namespace resicomp {

// A transmission scheme: a context mode (optionally with UEP backups) or the
// FEC baseline, which sends the LC stream over an ideal (N_k, N_r) erasure
// code and either recovers everything or nothing.
struct Scheme {
  StreamConfig stream;
  int fec_data = 0;  // N_k; 0 for a plain context-mode scheme
  int fec_parity = 0;

  bool is_fec() const { return fec_data > 0; }
  std::string label() const;  // LC, MDC2, SLC1+UEP, FEC(7:3), ...
};

Scheme mode_scheme(ModeKind kind, int slices, int param = 0);
Scheme fec_scheme(int n_data, int n_parity, int slices);

struct Channel {
  std::string name = "none";  // preset name, or "none" for a lossless link
  std::optional<LossModel> model;
  double eps_target = 0.0;
};

Channel lossless_channel();
Channel preset_channel(const std::string& name);

struct EpisodeResult {
  uint64_t image_id = 0;
  std::string scheme;
  int slices = 0;
  double beta = 0;
  std::string loss_preset;
  uint64_t seed = 0;
  double eps_target = 0;
  size_t bits_payload = 0;
  size_t bits_total = 0;
  double bpp = 0;
  Outcome outcome = Outcome::kFailed;
  double psnr_db = 0;
  int slices_decoded = 0;
};

// Packets for one (image, scheme); independent of the loss seed so sweeps
// can encode once and replay many channels.
struct Transmission {
  std::vector<Packet> packets;
  std::vector<WirePacket> wire;
};

Transmission transmit(const Image& image, const Scheme& scheme, const PriorModel& prior);

EpisodeResult run_episode(const Image& image, const Scheme& scheme, const Transmission& tx,
                          const Channel& channel, uint64_t seed, const PriorModel& prior);
EpisodeResult run_episode(const Image& image, const Scheme& scheme, const Channel& channel,
                          uint64_t seed, const PriorModel& prior);

// image_id,mode,L,beta,loss_preset,seed,eps_target,bits_payload,bits_total,
// bpp,outcome,psnr_db,slices_decoded
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const EpisodeResult& r);

}  // namespace resicomp

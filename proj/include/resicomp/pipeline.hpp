#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resicomp/context_modes.hpp"
#include "resicomp/image.hpp"
#include "resicomp/partition.hpp"
#include "resicomp/predictor.hpp"
#include "resicomp/token_codec.hpp"
#include "resicomp/transport.hpp"

namespace resicomp {

// Everything both endpoints must agree on. The packet header carries the
// mode id, slice count, plan seed, grid size, channels and beta; the rest
// (mode parameter, custom matrix, quantizer, image size) travels out of band.
struct StreamConfig {
  CodecConfig codec;
  ModeKind mode = ModeKind::kLc;
  int mode_param = 0;                  // N_d for MDC, E for SLC
  std::vector<uint8_t> custom_matrix;  // L x L, CUSTOM only
  int slices = 10;
  int beta_milli = -1;  // < 0: mode default
  uint64_t plan_seed = 0;
  uint64_t image_id = 0;
  std::vector<int> protect;  // slices duplicated as UEP backups (zero-based)

  // Throws InvalidArgument on an invalid or unsupported combination.
  ContextMode context_mode() const;
  int effective_beta_milli() const;
};

struct ImageShape {
  int height = 0;
  int width = 0;
  int planes = 1;
};

enum class Outcome { kLossless, kConcealed, kFailed };
std::string outcome_name(Outcome o);

struct EncodeStats {
  std::vector<size_t> slice_bits;
  int predictor_passes = 0;
};

// Entropy-codes every slice of `tokens` in schedule order, contexts taken
// from the full grid. Deterministic.
std::vector<Bitstring> encode_slices(const TokenGrid& tokens, const SlicePlan& plan,
                                     const ContextMode& mode, const PriorModel& prior,
                                     const CodecConfig& codec, EncodeStats* stats = nullptr);

// Tokenize, partition, code, packetize; appends UEP backups for
// config.protect.
std::vector<Packet> send(const Image& image, const StreamConfig& config, const PriorModel& prior);
std::vector<Packet> send_tokens(const TokenGrid& tokens, const StreamConfig& config,
                                const PriorModel& prior, EncodeStats* stats = nullptr);

struct ReceiveResult {
  Image image;
  TokenGrid decoded;    // entropy-decoded tokens, undecodable positions masked
  TokenGrid concealed;  // all positions known
  std::vector<uint8_t> slice_decoded;
  Outcome outcome = Outcome::kFailed;
  int predictor_passes = 0;

  int slices_decoded() const;
};

// Iterates the schedule over the received packets (duplicates and foreign
// slice counts ignored); slices whose context closure is incomplete stay
// masked; one final predictor pass conceals what is left.
ReceiveResult receive(std::span<const Packet> received, const StreamConfig& config,
                      const PriorModel& prior, const ImageShape& shape);

// Receive with explicit per-slice flags over a full packet set.
ReceiveResult receive_flags(std::span<const Packet> packets, std::span<const uint8_t> flags,
                            const StreamConfig& config, const PriorModel& prior,
                            const ImageShape& shape);

// Entry k decodes the first k slice packets; entry 0 is the failed case.
std::vector<ReceiveResult> progressive_receive(std::span<const Packet> packets,
                                               const StreamConfig& config, const PriorModel& prior,
                                               const ImageShape& shape);

inline constexpr double kFailedPsnr = 13.0;

struct Metrics {
  double psnr_db = 0;
  size_t bits_payload = 0;
  size_t bits_total = 0;  // payload plus headers
  double bpp = 0;         // payload only
  double bpp_total = 0;
};

Metrics evaluate(const Image& original, const Image& result, Outcome outcome,
                 std::span<const Packet> sent);

struct ObjectiveReport {
  double rate_bits = 0;  // -log2 p over masked token elements
  double distortion_quantized = 0;  // MSE(x, g_s(y_hat))
  double distortion_concealed = 0;  // MSE(x, g_s(y_check))
  double loss_efficiency = 0;       // rate (bpp) + lambda * D_quantized
  double loss_resilience = 0;       // D_concealed
  double loss_total = 0;            // L_E + alpha * L_R
  size_t masked_tokens = 0;
};

// Masks ceil(N r) random positions, runs the predictor once, and scores both
// heads. Rate enters L_E in bits per pixel; distortions are 8-bit MSE.
ObjectiveReport objective(const Image& image, double mask_ratio, double alpha, double lambda,
                          const CodecConfig& codec, const PriorModel& prior, uint64_t seed);

// Prior fitted on the built-in synthetic corpus for this quantizer.
PriorModel default_prior(const CodecConfig& codec, int planes = 1);

}  // namespace resicomp

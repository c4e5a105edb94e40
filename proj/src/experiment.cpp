#include "resicomp/experiment.hpp"

#include <cstdio>

#include "resicomp/errors.hpp"

namespace resicomp {

std::string Scheme::label() const {
  if (is_fec()) return "FEC(" + std::to_string(fec_data) + ":" + std::to_string(fec_parity) + ")";
  std::string s = mode_name(stream.mode);
  if (stream.mode == ModeKind::kMdc || stream.mode == ModeKind::kSlc) s += std::to_string(stream.mode_param);
  if (!stream.protect.empty()) s += "+UEP";
  return s;
}

Scheme mode_scheme(ModeKind kind, int slices, int param) {
  Scheme s;
  s.stream.mode = kind;
  s.stream.slices = slices;
  s.stream.mode_param = param;
  return s;
}

Scheme fec_scheme(int n_data, int n_parity, int slices) {
  if (n_data < 1 || n_parity < 0 || n_data + n_parity > 255)
    throw InvalidArgument("fec: need N_k >= 1, N_r >= 0, N_k + N_r <= 255");
  Scheme s = mode_scheme(ModeKind::kLc, slices);
  s.fec_data = n_data;
  s.fec_parity = n_parity;
  return s;
}

Channel lossless_channel() { return Channel{}; }

Channel preset_channel(const std::string& name) {
  Channel ch;
  ch.name = name;
  ch.model = preset(name);
  ch.eps_target = ch.model->preset->epsilon;
  return ch;
}

Transmission transmit(const Image& image, const Scheme& scheme, const PriorModel& prior) {
  Transmission tx;
  tx.packets = send(image, scheme.stream, prior);
  for (const Packet& p : tx.packets) tx.wire.push_back(to_wire(p));
  return tx;
}

EpisodeResult run_episode(const Image& image, const Scheme& scheme, const Transmission& tx,
                          const Channel& channel, uint64_t seed, const PriorModel& prior) {
  const StreamConfig& cfg = scheme.stream;
  const ImageShape shape{image.height, image.width, image.planes};
  EpisodeResult r;
  r.image_id = cfg.image_id;
  r.scheme = scheme.label();
  r.slices = cfg.slices;
  r.beta = milli_to_beta(cfg.effective_beta_milli());
  r.loss_preset = channel.name;
  r.seed = seed;
  r.eps_target = channel.eps_target;

  if (scheme.is_fec()) {
    size_t stream_bytes = 0;
    for (const Packet& p : tx.packets) stream_bytes += p.payload.bytes.size();
    const int n = scheme.fec_data + scheme.fec_parity;
    const size_t per_packet = (stream_bytes + scheme.fec_data - 1) / scheme.fec_data;
    r.bits_payload = per_packet * 8 * n;
    r.bits_total = r.bits_payload + kHeaderBytes * 8 * n;
    const LossTrace trace = channel.model ? sample_trace(*channel.model, n, seed) : LossTrace(n, 1);
    const bool ok = fec_channel(scheme.fec_data, scheme.fec_parity, trace);
    r.outcome = ok ? Outcome::kLossless : Outcome::kFailed;
    r.slices_decoded = ok ? cfg.slices : 0;
    if (ok) {
      const TokenGrid tokens = analyze(image, cfg.codec);
      r.psnr_db = psnr(image, synthesize(tokens, cfg.codec, image.height, image.width, image.planes));
    } else {
      r.psnr_db = kFailedPsnr;
    }
  } else {
    const LossTrace trace =
        channel.model ? sample_trace(*channel.model, tx.wire.size(), seed) : LossTrace(tx.wire.size(), 1);
    const Delivery d = apply_loss(tx.wire, trace);
    const ReceiveResult rr = receive(d.packets, cfg, prior, shape);
    const Metrics m = evaluate(image, rr.image, rr.outcome, tx.packets);
    r.bits_payload = m.bits_payload;
    r.bits_total = m.bits_total;
    r.outcome = rr.outcome;
    r.psnr_db = m.psnr_db;
    r.slices_decoded = rr.slices_decoded();
  }
  r.bpp = static_cast<double>(r.bits_payload) / (static_cast<double>(image.height) * image.width);
  return r;
}

EpisodeResult run_episode(const Image& image, const Scheme& scheme, const Channel& channel,
                          uint64_t seed, const PriorModel& prior) {
  return run_episode(image, scheme, transmit(image, scheme, prior), channel, seed, prior);
}

void write_csv_header(std::ostream& out) {
  out << "image_id,mode,L,beta,loss_preset,seed,eps_target,bits_payload,bits_total,bpp,outcome,"
         "psnr_db,slices_decoded\n";
}

void write_csv_row(std::ostream& out, const EpisodeResult& r) {
  char num[96];
  out << r.image_id << ',' << r.scheme << ',' << r.slices << ',';
  std::snprintf(num, sizeof num, "%.3f", r.beta);
  out << num << ',' << r.loss_preset << ',' << r.seed << ',';
  std::snprintf(num, sizeof num, "%.4f", r.eps_target);
  out << num << ',' << r.bits_payload << ',' << r.bits_total << ',';
  std::snprintf(num, sizeof num, "%.6f", r.bpp);
  out << num << ',' << outcome_name(r.outcome) << ',';
  std::snprintf(num, sizeof num, "%.4f", r.psnr_db);
  out << num << ',' << r.slices_decoded << '\n';
}

}  // namespace resicomp

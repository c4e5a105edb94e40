#include "resicomp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <tuple>

#include "resicomp/corpus.hpp"
#include "resicomp/density.hpp"
#include "resicomp/entropy_coder.hpp"
#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Frequency tables for predictor output, with the context-free tables shared
// per channel (the cacheable all-mask prediction).
class TableSource {
 public:
  TableSource(const PriorModel& prior, int clamp) : clamp_(clamp) {
    const auto all_mask = prior_output(prior, std::vector<Position>{{0, 0}});
    prior_tables_.reserve(static_cast<size_t>(prior.channels()));
    for (int c = 0; c < prior.channels(); ++c)
      prior_tables_.push_back(gmm_table(all_mask.params(0, c), clamp));
  }

  // Tables for output positions [first, first + count), position-major.
  // `owned` keeps non-shared tables alive for as long as `ptrs` is used.
  void tables_for(const PredictorOutput& out, size_t first, size_t count,
                  std::vector<const FreqTable*>& ptrs, std::vector<FreqTable>& owned) const {
    const int C = out.channels;
    std::vector<GmmParams> params;
    for (size_t i = first; i < first + count; ++i)
      if (!out.from_prior[i])
        params.insert(params.end(), out.gmm.begin() + static_cast<std::ptrdiff_t>(i * C),
                      out.gmm.begin() + static_cast<std::ptrdiff_t>((i + 1) * C));
    owned = build_tables_serial(params, clamp_);
    ptrs.clear();
    ptrs.reserve(count * C);
    size_t k = 0;
    for (size_t i = first; i < first + count; ++i)
      for (int c = 0; c < C; ++c)
        ptrs.push_back(out.from_prior[i] ? &prior_tables_[c] : &owned[k++]);
  }

 private:
  int clamp_;
  std::vector<FreqTable> prior_tables_;
};

// Predictor output for one slice group, positions ordered slice by slice.
struct GroupPrediction {
  PredictorOutput output;
  std::vector<size_t> offset;  // per group slice, index into output.positions
};

GroupPrediction predict_group(const SliceGroup& group, std::span<const int> slices,
                              const SlicePlan& plan, const TokenGrid* context,
                              const PriorModel& prior) {
  GroupPrediction gp;
  std::vector<Position> positions;
  for (int s : slices) {
    gp.offset.push_back(positions.size());
    const auto sl = plan.slice(s);
    positions.insert(positions.end(), sl.begin(), sl.end());
  }
  if (group.contexts.empty() || context == nullptr) {
    gp.output = prior_output(prior, positions);
  } else {
    gp.output = predict_at(*context, prior, positions);
  }
  return gp;
}

void check_header(const PacketHeader& h, const StreamConfig& config, const SlicePlan& plan) {
  const bool ok = h.total_slices == plan.slices && h.mode_id == static_cast<uint8_t>(config.mode) &&
                  h.plan_seed == plan.seed && h.grid_h == plan.h && h.grid_w == plan.w &&
                  h.channels == config.codec.channels && h.beta_milli == plan.beta_milli &&
                  h.image_id == config.image_id;
  if (!ok)
    throw InvalidArgument("packet header for slice " + std::to_string(h.slice_index + 1) +
                          " does not match the stream configuration");
}

ReceiveResult receive_core(std::vector<const Packet*> pk, const StreamConfig& config,
                           const PriorModel& prior, const ImageShape& shape) {
  const ContextMode mode = config.context_mode();
  const CodecConfig& codec = config.codec;
  const SlicePlan plan = build_plan(ceil_div(shape.height, kBlock), ceil_div(shape.width, kBlock),
                                    mode, config.plan_seed, config.effective_beta_milli());
  for (const Packet* p : pk)
    if (p) check_header(p->header, config, plan);
  const Schedule sched = iteration_schedule(mode);
  const TableSource tables(prior, codec.clamp);

  const int L = plan.slices;
  std::vector<uint8_t> flags(static_cast<size_t>(L));
  for (int s = 0; s < L; ++s) flags[s] = pk[s] != nullptr;

  ReceiveResult r;
  r.decoded = TokenGrid(plan.h, plan.w, codec.channels, false);
  r.slice_decoded.assign(static_cast<size_t>(L), 0);

  for (size_t d = 0; d < sched.passes.size(); ++d) {
    bool predicted = false;
    for (const SliceGroup& group : sched.passes[d]) {
      std::vector<int> todo;
      for (int s : group.slices)
        if (flags[s]) todo.push_back(s);
      if (todo.empty()) continue;
      TokenGrid context;
      if (!group.contexts.empty()) {
        try {
          context = collect_context(todo.front(), mode, flags, plan, r.decoded);
        } catch (const SynchronizationError&) {
          // Every slice of the group shares the missing context.
          for (int s : todo) flags[s] = 0;
          continue;
        }
        predicted = true;
      }
      const GroupPrediction gp = predict_group(group, todo, plan, &context, prior);
      for (size_t i = 0; i < todo.size(); ++i) {
        const int s = todo[i];
        const auto positions = plan.slice(s);
        std::vector<const FreqTable*> ptrs;
        std::vector<FreqTable> owned;
        tables.tables_for(gp.output, gp.offset[i], positions.size(), ptrs, owned);
        std::vector<int32_t> symbols(ptrs.size());
        try {
          RangeDecoder dec(pk[s]->payload.bytes);
          for (size_t k = 0; k < ptrs.size(); ++k) symbols[k] = dec.decode(*ptrs[k]);
          if (dec.remaining() != 0) throw CorruptStream("trailing bytes");
        } catch (const CorruptStream&) {
          flags[s] = 0;
          continue;
        }
        size_t k = 0;
        for (const Position& p : positions) {
          const size_t q = r.decoded.index(p.row, p.col);
          std::copy_n(symbols.begin() + static_cast<std::ptrdiff_t>(k), codec.channels,
                      r.decoded.token(q));
          r.decoded.known[q] = 1;
          k += static_cast<size_t>(codec.channels);
        }
        r.slice_decoded[s] = 1;
      }
    }
    if (predicted) ++r.predictor_passes;
  }

  const int decoded = r.slices_decoded();
  if (decoded == L) {
    r.outcome = Outcome::kLossless;
    r.concealed = r.decoded;
  } else {
    r.outcome = decoded == 0 ? Outcome::kFailed : Outcome::kConcealed;
    r.concealed = conceal(r.decoded, predict(r.decoded, prior));
    ++r.predictor_passes;
  }
  r.image = synthesize(r.concealed, codec, shape.height, shape.width, shape.planes);
  return r;
}

}  // namespace

ContextMode StreamConfig::context_mode() const {
  if (mode == ModeKind::kCustom) {
    ContextMode m(slices, custom_matrix);
    if (auto v = validate(m)) throw InvalidArgument("custom context mode rejected: " + v->message());
    return m;
  }
  return make_mode(mode, slices, mode_param);
}

int StreamConfig::effective_beta_milli() const {
  return beta_milli < 0 ? beta_to_milli(default_beta(mode)) : beta_milli;
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kLossless: return "lossless";
    case Outcome::kConcealed: return "concealed";
    case Outcome::kFailed: return "failed";
  }
  return "?";
}

int ReceiveResult::slices_decoded() const {
  return static_cast<int>(std::count(slice_decoded.begin(), slice_decoded.end(), 1));
}

std::vector<Bitstring> encode_slices(const TokenGrid& tokens, const SlicePlan& plan,
                                     const ContextMode& mode, const PriorModel& prior,
                                     const CodecConfig& codec, EncodeStats* stats) {
  if (!tokens.all_known()) throw InvalidArgument("encode_slices: token grid has masked positions");
  if (tokens.h != plan.h || tokens.w != plan.w || tokens.channels != codec.channels)
    throw InvalidArgument("encode_slices: grid does not match the plan");
  if (plan.slices != mode.slices()) throw InvalidArgument("encode_slices: slice counts differ");
  const Schedule sched = iteration_schedule(mode);
  const TableSource tables(prior, codec.clamp);
  const std::vector<uint8_t> all(static_cast<size_t>(plan.slices), 1);
  std::vector<Bitstring> bits(static_cast<size_t>(plan.slices));
  int passes = 0;

  for (const auto& pass : sched.passes) {
    bool predicted = false;
    for (const SliceGroup& group : pass) {
      TokenGrid context;
      if (!group.contexts.empty()) {
        context = collect_context(group.slices.front(), mode, all, plan, tokens);
        predicted = true;
      }
      const GroupPrediction gp = predict_group(group, group.slices, plan, &context, prior);
      const long n = static_cast<long>(group.slices.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (long i = 0; i < n; ++i) {
        const int s = group.slices[i];
        const auto positions = plan.slice(s);
        std::vector<const FreqTable*> ptrs;
        std::vector<FreqTable> owned;
        tables.tables_for(gp.output, gp.offset[i], positions.size(), ptrs, owned);
        RangeEncoder enc;
        size_t k = 0;
        for (const Position& p : positions) {
          const int32_t* t = tokens.token(tokens.index(p.row, p.col));
          for (int c = 0; c < codec.channels; ++c) enc.encode(*ptrs[k++], t[c]);
        }
        bits[s] = enc.finish();
      }
    }
    if (predicted) ++passes;
  }
  if (stats) {
    stats->predictor_passes = passes;
    stats->slice_bits.clear();
    for (const Bitstring& b : bits) stats->slice_bits.push_back(b.bit_length());
  }
  return bits;
}

std::vector<Packet> send_tokens(const TokenGrid& tokens, const StreamConfig& config,
                                const PriorModel& prior, EncodeStats* stats) {
  config.codec.validate();
  const ContextMode mode = config.context_mode();
  const SlicePlan plan =
      build_plan(tokens.h, tokens.w, mode, config.plan_seed, config.effective_beta_milli());
  auto bits = encode_slices(tokens, plan, mode, prior, config.codec, stats);
  std::vector<Packet> packets;
  packets.reserve(bits.size());
  for (int s = 0; s < plan.slices; ++s) {
    Packet p;
    PacketHeader& h = p.header;
    h.image_id = config.image_id;
    h.slice_index = static_cast<uint8_t>(s);
    h.total_slices = static_cast<uint8_t>(plan.slices);
    h.mode_id = static_cast<uint8_t>(config.mode);
    h.plan_seed = plan.seed;
    h.grid_h = static_cast<uint16_t>(plan.h);
    h.grid_w = static_cast<uint16_t>(plan.w);
    h.channels = static_cast<uint16_t>(config.codec.channels);
    h.beta_milli = static_cast<uint16_t>(plan.beta_milli);
    p.payload = std::move(bits[s]);
    seal(p);
    packets.push_back(std::move(p));
  }
  if (!config.protect.empty()) return uep_backup(packets, config.protect);
  return packets;
}

std::vector<Packet> send(const Image& image, const StreamConfig& config, const PriorModel& prior) {
  return send_tokens(analyze(image, config.codec), config, prior);
}

ReceiveResult receive(std::span<const Packet> received, const StreamConfig& config,
                      const PriorModel& prior, const ImageShape& shape) {
  return receive_core(slice_packets(received, config.slices), config, prior, shape);
}

ReceiveResult receive_flags(std::span<const Packet> packets, std::span<const uint8_t> flags,
                            const StreamConfig& config, const PriorModel& prior,
                            const ImageShape& shape) {
  if (flags.size() != static_cast<size_t>(config.slices))
    throw InvalidArgument("receive_flags: one flag per slice required");
  auto pk = slice_packets(packets, config.slices);
  for (size_t s = 0; s < pk.size(); ++s)
    if (!flags[s]) pk[s] = nullptr;
  return receive_core(std::move(pk), config, prior, shape);
}

std::vector<ReceiveResult> progressive_receive(std::span<const Packet> packets,
                                               const StreamConfig& config, const PriorModel& prior,
                                               const ImageShape& shape) {
  std::vector<ReceiveResult> out;
  std::vector<uint8_t> flags(static_cast<size_t>(config.slices), 0);
  out.push_back(receive_flags(packets, flags, config, prior, shape));
  for (int k = 1; k <= config.slices; ++k) {
    flags[k - 1] = 1;
    out.push_back(receive_flags(packets, flags, config, prior, shape));
  }
  return out;
}

Metrics evaluate(const Image& original, const Image& result, Outcome outcome,
                 std::span<const Packet> sent) {
  Metrics m;
  m.psnr_db = outcome == Outcome::kFailed ? kFailedPsnr : psnr(original, result);
  for (const Packet& p : sent) {
    m.bits_payload += p.payload.bit_length();
    m.bits_total += p.payload.bit_length() + kHeaderBytes * 8;
  }
  const double pixels = static_cast<double>(original.height) * original.width;
  m.bpp = static_cast<double>(m.bits_payload) / pixels;
  m.bpp_total = static_cast<double>(m.bits_total) / pixels;
  return m;
}

ObjectiveReport objective(const Image& image, double mask_ratio, double alpha, double lambda,
                          const CodecConfig& codec, const PriorModel& prior, uint64_t seed) {
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) throw InvalidArgument("objective: ratio must be in [0,1]");
  const TokenGrid tokens = analyze(image, codec);
  const size_t n = tokens.positions();
  const size_t n_mask = std::min(n, static_cast<size_t>(std::ceil(static_cast<double>(n) * mask_ratio)));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

  TokenGrid masked = tokens;
  for (size_t i = 0; i < n_mask; ++i) {
    const size_t q = order[i];
    masked.known[q] = 0;
    std::fill_n(masked.token(q), masked.channels, 0);
  }
  const PredictorOutput out = predict(masked, prior);

  ObjectiveReport rep;
  rep.masked_tokens = n_mask;
  for (size_t i = 0; i < out.positions.size(); ++i) {
    const Position& p = out.positions[i];
    const int32_t* truth = tokens.token(tokens.index(p.row, p.col));
    for (int c = 0; c < out.channels; ++c)
      rep.rate_bits += bits_of(discretize(out.params(i, c), codec.clamp), truth[c]);
  }
  const Image recon_q = synthesize(tokens, codec, image.height, image.width, image.planes);
  const Image recon_c =
      synthesize(conceal(masked, out), codec, image.height, image.width, image.planes);
  rep.distortion_quantized = mse(image, recon_q);
  rep.distortion_concealed = mse(image, recon_c);
  const double pixels = static_cast<double>(image.height) * image.width;
  rep.loss_efficiency = rep.rate_bits / pixels + lambda * rep.distortion_quantized;
  rep.loss_resilience = rep.distortion_concealed;
  rep.loss_total = rep.loss_efficiency + alpha * rep.loss_resilience;
  return rep;
}

PriorModel default_prior(const CodecConfig& codec, int planes) {
  codec.validate();
  if (planes != 1 && planes != 3) throw InvalidArgument("default_prior: planes must be 1 or 3");
  static std::mutex mu;
  static std::map<std::tuple<int, double, int, int>, PriorModel> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_tuple(codec.channels, codec.quality, codec.clamp, planes);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<TokenGrid> grids;
  for (const Image& img : synthetic_corpus(16, 128, 192, planes, 0x7072696f72ULL))
    grids.push_back(analyze(img, codec));
  PriorModel m = fit_prior(grids);
  cache.emplace(key, m);
  return m;
}

}  // namespace resicomp

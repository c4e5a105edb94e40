#include "resicomp/transport.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

constexpr uint8_t kMagic[4] = {'R', 'C', 'P', 'K'};

void put(WirePacket& out, uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

uint64_t get(std::span<const uint8_t> in, size_t& pos, int bytes) {
  uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(in[pos + i]) << (8 * i);
  pos += bytes;
  return v;
}

uint32_t crc_of(std::span<const uint8_t> head, std::span<const uint8_t> payload) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, head.data(), static_cast<uInt>(head.size()));
  if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
  return static_cast<uint32_t>(crc);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void check_stochastic(const LossModel& m) {
  if (m.states < 1 || m.transition.size() != static_cast<size_t>(m.states) * m.states ||
      m.loss.size() != static_cast<size_t>(m.states))
    throw InvalidArgument("loss model: inconsistent dimensions");
  for (int i = 0; i < m.states; ++i) {
    double row = 0.0;
    for (int j = 0; j < m.states; ++j) {
      const double p = m.p(i, j);
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("loss model: probability outside [0,1]");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-12) throw InvalidArgument("loss model: row does not sum to 1");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

WirePacket to_wire(const Packet& packet) {
  const PacketHeader& h = packet.header;
  if (h.channels < 1 || h.channels > 256) throw InvalidArgument("packet: channels out of range");
  WirePacket out(kMagic, kMagic + 4);
  out.reserve(kHeaderBytes + packet.payload.bytes.size());
  put(out, h.version, 1);
  put(out, h.flags, 1);
  put(out, h.image_id, 8);
  put(out, h.slice_index, 1);
  put(out, h.total_slices, 1);
  put(out, h.mode_id, 1);
  put(out, h.plan_seed, 8);
  put(out, h.grid_h, 2);
  put(out, h.grid_w, 2);
  put(out, h.channels & 0xFF, 1);
  put(out, h.beta_milli, 2);
  put(out, packet.payload.bytes.size(), 4);
  const uint32_t crc = crc_of(out, packet.payload.bytes);
  put(out, crc, 4);
  const auto& body = packet.payload.bytes;
  if (!body.empty()) out.insert(out.end(), body.begin(), body.end());
  return out;
}

void seal(Packet& packet) {
  const WirePacket wire = to_wire(packet);
  size_t pos = kHeaderBytes - 8;
  packet.header.payload_len = static_cast<uint32_t>(get(wire, pos, 4));
  packet.header.crc32 = static_cast<uint32_t>(get(wire, pos, 4));
}

std::optional<Packet> from_wire(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    return std::nullopt;
  Packet p;
  PacketHeader& h = p.header;
  size_t pos = 4;
  h.version = static_cast<uint8_t>(get(bytes, pos, 1));
  h.flags = static_cast<uint8_t>(get(bytes, pos, 1));
  h.image_id = get(bytes, pos, 8);
  h.slice_index = static_cast<uint8_t>(get(bytes, pos, 1));
  h.total_slices = static_cast<uint8_t>(get(bytes, pos, 1));
  h.mode_id = static_cast<uint8_t>(get(bytes, pos, 1));
  h.plan_seed = get(bytes, pos, 8);
  h.grid_h = static_cast<uint16_t>(get(bytes, pos, 2));
  h.grid_w = static_cast<uint16_t>(get(bytes, pos, 2));
  h.channels = static_cast<uint16_t>(get(bytes, pos, 1));
  if (h.channels == 0) h.channels = 256;
  h.beta_milli = static_cast<uint16_t>(get(bytes, pos, 2));
  h.payload_len = static_cast<uint32_t>(get(bytes, pos, 4));
  const size_t crc_at = pos;
  h.crc32 = static_cast<uint32_t>(get(bytes, pos, 4));
  if (h.version != kPacketVersion) return std::nullopt;
  if (bytes.size() != kHeaderBytes + h.payload_len) return std::nullopt;
  const auto payload = bytes.subspan(kHeaderBytes);
  if (crc_of(bytes.first(crc_at), payload) != h.crc32) return std::nullopt;
  if (h.total_slices == 0 || h.slice_index >= h.total_slices) return std::nullopt;
  p.payload.bytes.assign(payload.begin(), payload.end());
  return p;
}

// ---------------------------------------------------------------------------

const std::vector<PresetRecord>& preset_table() {
  static const std::vector<PresetRecord> table = {
      {"EP1", 0.99968, 0.8462, 0.0000, 0.1538, 0.002, 6.50},
      {"EP2", 0.9798, 0.3720, 0.3333, 0.6304, 0.031, 1.59},
      {"EP3", 0.9500, 0.8000, 0.6000, 0.8000, 0.065, 5.00},
      {"EP4", 0.9363, 0.4072, 0.5662, 0.3631, 0.138, 1.69},
      {"EP5", 0.9000, 0.9000, 0.1000, 0.1000, 0.214, 10.0},
      {"EP6", 0.8507, 0.6305, 0.2000, 0.2982, 0.323, 2.71},
  };
  return table;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& r : preset_table()) names.push_back(r.name);
  return names;
}

LossModel markov2(double p_gb, double p_bb) {
  LossModel m;
  m.kind = LossModel::Kind::kMarkov2;
  m.name = "markov2";
  m.states = 2;
  m.transition = {1.0 - p_gb, p_gb, 1.0 - p_bb, p_bb};
  m.loss = {0, 1};
  check_stochastic(m);
  return m;
}

LossModel iid_loss(double epsilon) {
  LossModel m = markov2(epsilon, epsilon);
  m.kind = LossModel::Kind::kIid;
  m.name = "iid";
  return m;
}

LossModel markov3(std::span<const double> transition, int loss_state) {
  if (transition.size() != 9) throw InvalidArgument("markov3: need a 3x3 matrix");
  if (loss_state < 0 || loss_state > 2) throw InvalidArgument("markov3: loss state out of range");
  LossModel m;
  m.kind = LossModel::Kind::kMarkov3;
  m.name = "markov3";
  m.states = 3;
  m.transition.assign(transition.begin(), transition.end());
  m.loss = {0, 0, 0};
  m.loss[loss_state] = 1;
  check_stochastic(m);
  return m;
}

LossModel preset(const std::string& name) {
  for (const auto& r : preset_table()) {
    if (r.name != name) continue;
    const double p_bb = 1.0 - 1.0 / r.gamma;
    const double p_gb = r.epsilon / (r.gamma * (1.0 - r.epsilon));
    LossModel m = markov2(p_gb, p_bb);
    m.name = r.name;
    m.preset = r;
    return m;
  }
  throw InvalidArgument("unknown loss preset '" + name + "'");
}

std::vector<double> stationary_distribution(const LossModel& model) {
  check_stochastic(model);
  const int n = model.states;
  // Recurrent states are those that can return from everywhere they reach;
  // a unique stationary law needs all of them in one class.
  std::vector<uint8_t> reach(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    reach[i * n + i] = 1;
    for (int j = 0; j < n; ++j)
      if (model.p(i, j) > 0.0) reach[i * n + j] = 1;
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i * n + k] && reach[k * n + j]) reach[i * n + j] = 1;
  int first_recurrent = -1;
  for (int i = 0; i < n; ++i) {
    bool recurrent = true;
    for (int j = 0; j < n; ++j)
      if (reach[i * n + j] && !reach[j * n + i]) recurrent = false;
    if (!recurrent) continue;
    if (first_recurrent < 0) {
      first_recurrent = i;
    } else if (!reach[first_recurrent * n + i]) {
      throw InvalidArgument("loss model: reducible chain has several recurrent classes");
    }
  }

  // Power iteration on the lazy chain (P + I) / 2, which shares the
  // stationary law and is aperiodic.
  std::vector<double> pi(static_cast<size_t>(n), 1.0 / n), next(static_cast<size_t>(n));
  for (long it = 0; it < 50'000'000L; ++it) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.5 * pi[j];
      for (int i = 0; i < n; ++i) acc += 0.5 * pi[i] * model.p(i, j);
      next[j] = acc;
    }
    double delta = 0.0;
    for (int j = 0; j < n; ++j) delta = std::max(delta, std::abs(next[j] - pi[j]));
    pi.swap(next);
    if (delta < 1e-15) break;
  }
  double sum = 0.0;
  for (double v : pi) sum += v;
  for (double& v : pi) v /= sum;
  return pi;
}

LossStats stationary(const LossModel& model) {
  const auto pi = stationary_distribution(model);
  LossStats s;
  double exit_flow = 0.0;
  for (int i = 0; i < model.states; ++i) {
    if (!model.loss[i]) continue;
    s.epsilon += pi[i];
    for (int j = 0; j < model.states; ++j)
      if (!model.loss[j]) exit_flow += pi[i] * model.p(i, j);
  }
  if (s.epsilon <= 0.0) {
    s.gamma = 0.0;
  } else {
    s.gamma = exit_flow > 0.0 ? s.epsilon / exit_flow : HUGE_VAL;
  }
  return s;
}

LossTrace sample_trace(const LossModel& model, size_t n_packets, uint64_t seed) {
  if (n_packets < 1) throw InvalidArgument("sample_trace: need at least one packet");
  const auto pi = stationary_distribution(model);
  std::mt19937_64 rng(seed);
  auto draw = [&](auto row_prob) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int j = 0; j < model.states; ++j) {
      acc += row_prob(j);
      if (u < acc) return j;
    }
    // Rounding left u above the cumulative sum: take the last reachable state.
    for (int j = model.states - 1; j >= 0; --j)
      if (row_prob(j) > 0.0) return j;
    return model.states - 1;
  };
  int state = draw([&](int j) { return pi[j]; });
  LossTrace trace(n_packets);
  for (size_t i = 0; i < n_packets; ++i) {
    trace[i] = model.loss[state] ? 0 : 1;
    const int from = state;
    state = draw([&](int j) { return model.p(from, j); });
  }
  return trace;
}

LossStats trace_stats(std::span<const uint8_t> trace) {
  LossStats s;
  if (trace.empty()) return s;
  size_t lost = 0, bursts = 0;
  for (size_t i = 0; i < trace.size(); ++i) {
    if (trace[i]) continue;
    ++lost;
    if (i == 0 || trace[i - 1]) ++bursts;
  }
  s.epsilon = static_cast<double>(lost) / static_cast<double>(trace.size());
  s.gamma = bursts ? static_cast<double>(lost) / static_cast<double>(bursts) : 0.0;
  return s;
}

void write_traces(const std::filesystem::path& path, std::span<const LossTrace> traces) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const LossTrace& t : traces) {
    std::string line(t.size(), '0');
    for (size_t i = 0; i < t.size(); ++i)
      if (t[i]) line[i] = '1';
    out << line << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<LossTrace> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<LossTrace> traces;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    LossTrace t(line.size());
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] != '0' && line[i] != '1')
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected only 0/1");
      t[i] = line[i] == '1';
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

// ---------------------------------------------------------------------------

Delivery apply_loss(std::span<const WirePacket> sent, std::span<const uint8_t> trace) {
  if (sent.size() != trace.size()) throw InvalidArgument("apply_loss: trace length must match packets");
  Delivery d;
  d.flags.assign(sent.size(), 0);
  for (size_t i = 0; i < sent.size(); ++i) {
    if (!trace[i]) continue;
    auto p = from_wire(sent[i]);
    if (!p) continue;
    d.flags[i] = 1;
    d.packets.push_back(std::move(*p));
  }
  return d;
}

std::vector<const Packet*> slice_packets(std::span<const Packet> received, int total_slices) {
  std::vector<const Packet*> out(static_cast<size_t>(total_slices), nullptr);
  for (const Packet& p : received) {
    const int s = p.header.slice_index;
    if (s < total_slices && p.header.total_slices == total_slices && !out[s]) out[s] = &p;
  }
  return out;
}

std::vector<uint8_t> slice_flags(std::span<const Packet> received, int total_slices) {
  const auto pk = slice_packets(received, total_slices);
  std::vector<uint8_t> f(pk.size());
  for (size_t i = 0; i < pk.size(); ++i) f[i] = pk[i] != nullptr;
  return f;
}

bool fec_channel(int n_data, int n_parity, std::span<const uint8_t> trace) {
  if (n_data < 1 || n_parity < 0) throw InvalidArgument("fec_channel: bad code dimensions");
  if (trace.size() != static_cast<size_t>(n_data + n_parity))
    throw InvalidArgument("fec_channel: trace length must be N_k + N_r");
  const auto got = std::count_if(trace.begin(), trace.end(), [](uint8_t f) { return f != 0; });
  return got >= n_data;
}

std::vector<Packet> uep_backup(std::span<const Packet> packets, std::span<const int> protected_slices) {
  std::vector<Packet> out(packets.begin(), packets.end());
  for (int s : protected_slices) {
    auto it = std::find_if(packets.begin(), packets.end(), [&](const Packet& p) {
      return p.header.slice_index == s && !(p.header.flags & kFlagBackup);
    });
    if (it == packets.end())
      throw InvalidArgument("uep_backup: no packet for slice " + std::to_string(s));
    Packet dup = *it;
    dup.header.flags |= kFlagBackup;
    seal(dup);
    out.push_back(std::move(dup));
  }
  return out;
}

}  // namespace resicomp

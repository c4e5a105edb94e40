#include "resicomp/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

constexpr char kModelMagic[4] = {'R', 'C', 'P', 'M'};
constexpr uint16_t kModelVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_f64(std::string& out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  uint64_t uint(int bytes) {
    if (pos_ + bytes > s_.size()) throw IoError("model file truncated");
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
      v |= static_cast<uint64_t>(static_cast<uint8_t>(s_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  bool done() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  size_t pos_ = 0;
};

GmmParams prior_params(const PriorModel& prior, int c, const std::array<double, kMaxComponents>& w) {
  GmmParams g;
  g.k = kDefaultComponents;
  for (int i = 0; i < kDefaultComponents; ++i) {
    g.weights[i] = w[i];
    g.means[i] = prior.mean[c];
    g.sigmas[i] = prior.std[c];
  }
  return g;
}

void check_prior(const TokenGrid& grid, const PriorModel& prior) {
  if (prior.channels() != grid.channels || prior.std.size() != prior.mean.size())
    throw InvalidArgument("predictor: model channel count does not match the grid");
  if (prior.window < 1 || prior.window % 2 == 0)
    throw InvalidArgument("predictor: window must be odd and positive");
}

// Fills entry `i` of `out` for the masked position p.
void predict_one(const TokenGrid& grid, const PriorModel& prior,
                 const std::array<double, kMaxComponents>& mix, Position p, size_t i,
                 PredictorOutput& out) {
  const int C = grid.channels;
  const int radius = prior.window / 2;
  const int r0 = std::max(0, p.row - radius), r1 = std::min(grid.h - 1, p.row + radius);
  const int c0 = std::max(0, p.col - radius), c1 = std::min(grid.w - 1, p.col + radius);

  std::vector<double> sum(static_cast<size_t>(C), 0.0);
  double wsum = 0.0;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const size_t q = grid.index(r, c);
      if (!grid.known[q]) continue;
      const int dr = r - p.row, dc = c - p.col;
      const double w = 1.0 / std::sqrt(static_cast<double>(dr * dr + dc * dc));
      const int32_t* t = grid.token(q);
      for (int ch = 0; ch < C; ++ch) sum[ch] += w * t[ch];
      wsum += w;
    }

  GmmParams* g = out.gmm.data() + i * C;
  int32_t* v = out.values.data() + i * C;
  if (wsum == 0.0) {
    out.from_prior[i] = 1;
    for (int ch = 0; ch < C; ++ch) {
      g[ch] = prior_params(prior, ch, mix);
      v[ch] = static_cast<int32_t>(std::lround(prior.mean[ch]));
    }
    return;
  }

  std::vector<double> mean(static_cast<size_t>(C));
  for (int ch = 0; ch < C; ++ch) mean[ch] = sum[ch] / wsum;
  std::vector<double> var(static_cast<size_t>(C), 0.0);
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      const size_t q = grid.index(r, c);
      if (!grid.known[q]) continue;
      const int dr = r - p.row, dc = c - p.col;
      const double w = 1.0 / std::sqrt(static_cast<double>(dr * dr + dc * dc));
      const int32_t* t = grid.token(q);
      for (int ch = 0; ch < C; ++ch) {
        const double d = t[ch] - mean[ch];
        var[ch] += w * d * d;
      }
    }

  out.from_prior[i] = 0;
  for (int ch = 0; ch < C; ++ch) {
    GmmParams& gp = g[ch];
    gp = prior_params(prior, ch, mix);
    gp.means[0] = mean[ch];
    gp.sigmas[0] = std::max(kSigmaFloor, std::sqrt(var[ch] / wsum));
    v[ch] = static_cast<int32_t>(std::lround(mean[ch]));
  }
}

PredictorOutput make_output(const TokenGrid& grid, std::span<const Position> positions) {
  PredictorOutput out;
  out.positions.assign(positions.begin(), positions.end());
  out.channels = grid.channels;
  out.gmm.resize(positions.size() * grid.channels);
  out.values.resize(positions.size() * grid.channels);
  out.from_prior.resize(positions.size());
  for (const Position& p : positions) {
    if (p.row < 0 || p.row >= grid.h || p.col < 0 || p.col >= grid.w)
      throw InvalidArgument("predictor: position outside grid");
    if (grid.known[grid.index(p.row, p.col)])
      throw InvalidArgument("predictor: position is not masked");
  }
  return out;
}

std::array<double, kMaxComponents> mixture_weights(const PriorModel& prior) {
  return softmax(prior.logits);
}

}  // namespace

PriorModel fit_prior(std::span<const TokenGrid> grids) {
  if (grids.empty()) throw InvalidArgument("fit_prior: no grids");
  const int C = grids.front().channels;
  std::vector<double> sum(static_cast<size_t>(C), 0.0), sq(static_cast<size_t>(C), 0.0);
  double count = 0.0;
  for (const TokenGrid& g : grids) {
    if (g.channels != C) throw InvalidArgument("fit_prior: channel counts differ");
    for (size_t p = 0; p < g.positions(); ++p) {
      if (!g.known[p]) continue;
      const int32_t* t = g.token(p);
      for (int c = 0; c < C; ++c) {
        sum[c] += t[c];
        sq[c] += static_cast<double>(t[c]) * t[c];
      }
      count += 1.0;
    }
  }
  if (count == 0.0) throw InvalidArgument("fit_prior: no known tokens");
  PriorModel m;
  m.mean.resize(static_cast<size_t>(C));
  m.std.resize(static_cast<size_t>(C));
  for (int c = 0; c < C; ++c) {
    m.mean[c] = sum[c] / count;
    const double var = std::max(0.0, sq[c] / count - m.mean[c] * m.mean[c]);
    m.std[c] = std::max(kSigmaFloor, std::sqrt(var));
  }
  return m;
}

std::string serialize_model(const PriorModel& model) {
  std::string out(kModelMagic, 4);
  put_u16(out, kModelVersion);
  put_u16(out, static_cast<uint16_t>(model.channels()));
  for (double v : model.mean) put_f64(out, v);
  for (double v : model.std) put_f64(out, v);
  put_u16(out, static_cast<uint16_t>(model.window));
  for (double v : model.logits) put_f64(out, v);
  return out;
}

PriorModel deserialize_model(const std::string& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0)
    throw IoError("model file: bad magic");
  Reader in(bytes);
  in.uint(4);
  if (in.uint(2) != kModelVersion) throw IoError("model file: unsupported version");
  const int C = static_cast<int>(in.uint(2));
  if (C < 1 || C > 256) throw IoError("model file: channel count out of range");
  PriorModel m;
  m.mean.resize(static_cast<size_t>(C));
  m.std.resize(static_cast<size_t>(C));
  for (double& v : m.mean) v = in.f64();
  for (double& v : m.std) v = in.f64();
  m.window = static_cast<int>(in.uint(2));
  for (double& v : m.logits) v = in.f64();
  if (!in.done()) throw IoError("model file: trailing bytes");
  for (int c = 0; c < C; ++c)
    if (!std::isfinite(m.mean[c]) || !(m.std[c] >= kSigmaFloor))
      throw IoError("model file: invalid prior statistics");
  if (m.window < 1 || m.window % 2 == 0) throw IoError("model file: window must be odd");
  return m;
}

void save_model(const std::filesystem::path& path, const PriorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string s = serialize_model(model);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("short write to " + path.string());
}

PriorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

TokenGrid collect_context(int slice, const ContextMode& mode, std::span<const uint8_t> received,
                          const SlicePlan& plan, const TokenGrid& decoded) {
  if (slice < 0 || slice >= mode.slices()) throw InvalidArgument("collect_context: bad slice index");
  if (received.size() != static_cast<size_t>(mode.slices()) || plan.slices != mode.slices())
    throw InvalidArgument("collect_context: slice counts disagree");
  TokenGrid ctx = decoded.masked_like();
  for (int j = 0; j < slice; ++j) {
    if (!mode.depends(slice, j)) continue;
    if (!received[j]) throw SynchronizationError(slice, j);
    for (const Position& p : plan.slice(j)) {
      const size_t q = ctx.index(p.row, p.col);
      std::copy_n(decoded.token(q), ctx.channels, ctx.token(q));
      ctx.known[q] = 1;
    }
  }
  return ctx;
}

PredictorOutput predict_at(const TokenGrid& masked, const PriorModel& prior,
                           std::span<const Position> positions) {
  check_prior(masked, prior);
  PredictorOutput out = make_output(masked, positions);
  const auto mix = mixture_weights(prior);
  const long n = static_cast<long>(positions.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) predict_one(masked, prior, mix, positions[i], static_cast<size_t>(i), out);
  return out;
}

PredictorOutput predict_at_serial(const TokenGrid& masked, const PriorModel& prior,
                                  std::span<const Position> positions) {
  check_prior(masked, prior);
  PredictorOutput out = make_output(masked, positions);
  const auto mix = mixture_weights(prior);
  for (size_t i = 0; i < positions.size(); ++i) predict_one(masked, prior, mix, positions[i], i, out);
  return out;
}

PredictorOutput predict(const TokenGrid& masked, const PriorModel& prior) {
  std::vector<Position> positions;
  for (int r = 0; r < masked.h; ++r)
    for (int c = 0; c < masked.w; ++c)
      if (!masked.known[masked.index(r, c)]) positions.push_back({r, c});
  return predict_at(masked, prior, positions);
}

PredictorOutput prior_output(const PriorModel& prior, std::span<const Position> positions) {
  PredictorOutput out;
  const int C = prior.channels();
  out.positions.assign(positions.begin(), positions.end());
  out.channels = C;
  out.gmm.resize(positions.size() * C);
  out.values.resize(positions.size() * C);
  out.from_prior.assign(positions.size(), 1);
  const auto mix = mixture_weights(prior);
  for (size_t i = 0; i < positions.size(); ++i)
    for (int c = 0; c < C; ++c) {
      out.gmm[i * C + c] = prior_params(prior, c, mix);
      out.values[i * C + c] = static_cast<int32_t>(std::lround(prior.mean[c]));
    }
  return out;
}

TokenGrid conceal(const TokenGrid& grid, const PredictorOutput& output) {
  if (output.channels != grid.channels) throw InvalidArgument("conceal: channel mismatch");
  TokenGrid out = grid;
  size_t filled = 0;
  for (size_t i = 0; i < output.positions.size(); ++i) {
    const Position& p = output.positions[i];
    const size_t q = out.index(p.row, p.col);
    if (grid.known[q]) throw InvalidArgument("conceal: prediction given for a known position");
    if (out.known[q]) throw InvalidArgument("conceal: duplicate prediction");
    std::copy_n(output.values.data() + i * output.channels, output.channels, out.token(q));
    out.known[q] = 1;
    ++filled;
  }
  if (filled + grid.known_count() != grid.positions())
    throw InvalidArgument("conceal: predictions do not cover every masked position");
  return out;
}

}  // namespace resicomp

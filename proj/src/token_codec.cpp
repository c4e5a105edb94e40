#include "resicomp/token_codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

using Basis = std::array<double, kBlock * kBlock>;

// Orthonormal DCT-II basis, basis[k * 16 + n].
const Basis& dct_basis() {
  static const Basis basis = [] {
    Basis b{};
    for (int k = 0; k < kBlock; ++k) {
      const double scale = k == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int n = 0; n < kBlock; ++n)
        b[k * kBlock + n] = scale * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kBlock));
    }
    return b;
  }();
  return basis;
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

void check_image(const Image& image, const CodecConfig& cfg) {
  cfg.validate();
  if (image.empty() || image.height <= 0 || image.width <= 0)
    throw InvalidArgument("analyze: empty image");
  if (image.planes != 1 && image.planes != 3)
    throw InvalidArgument("analyze: planes must be 1 or 3");
  if (cfg.channels > image.planes * kBlock * kBlock)
    throw InvalidArgument("analyze: more channels than block coefficients");
}

// Forward 2-D transform of one block of one plane, edge-replicated padding.
void forward_block(const Image& image, int by, int bx, int plane,
                   std::array<double, kBlock * kBlock>& out) {
  const Basis& b = dct_basis();
  std::array<double, kBlock * kBlock> px{};
  for (int y = 0; y < kBlock; ++y) {
    const int sy = std::min(by * kBlock + y, image.height - 1);
    for (int x = 0; x < kBlock; ++x) {
      const int sx = std::min(bx * kBlock + x, image.width - 1);
      px[y * kBlock + x] = image.at(sy, sx, plane);
    }
  }
  // rows: tmp[y][u] = sum_x px[y][x] * b[u][x]
  std::array<double, kBlock * kBlock> tmp{};
  for (int y = 0; y < kBlock; ++y)
    for (int u = 0; u < kBlock; ++u) {
      double acc = 0.0;
      for (int x = 0; x < kBlock; ++x) acc += px[y * kBlock + x] * b[u * kBlock + x];
      tmp[y * kBlock + u] = acc;
    }
  for (int v = 0; v < kBlock; ++v)
    for (int u = 0; u < kBlock; ++u) {
      double acc = 0.0;
      for (int y = 0; y < kBlock; ++y) acc += tmp[y * kBlock + u] * b[v * kBlock + y];
      out[v * kBlock + u] = acc;
    }
}

// Transforms block (by, bx) into `coeffs` (C kept coefficients) and, when
// `tokens` is non-null, quantizes into it. Returns the clamp count.
size_t analyze_block(const Image& image, const CodecConfig& cfg, int by, int bx,
                     double* coeffs, int32_t* tokens) {
  const auto& zz = zigzag_order();
  std::array<std::array<double, kBlock * kBlock>, 3> planes{};
  for (int p = 0; p < image.planes; ++p) forward_block(image, by, bx, p, planes[p]);
  size_t clamped = 0;
  for (int c = 0; c < cfg.channels; ++c) {
    const int z = channel_zigzag(c, image.planes);
    const double coef = planes[channel_plane(c, image.planes)][zz[z]];
    if (coeffs) coeffs[c] = coef;
    if (tokens) {
      long q = std::lround(coef / cfg.step(z));
      if (q > cfg.clamp) {
        q = cfg.clamp;
        ++clamped;
      } else if (q < -cfg.clamp) {
        q = -cfg.clamp;
        ++clamped;
      }
      tokens[c] = static_cast<int32_t>(q);
    }
  }
  return clamped;
}

}  // namespace

void CodecConfig::validate() const {
  if (channels < 1 || channels > 256) throw InvalidArgument("channels must be in 1..256");
  if (!(quality > 0.0) || !std::isfinite(quality)) throw InvalidArgument("quality must be > 0");
  if (clamp < 1 || clamp > (1 << 20)) throw InvalidArgument("clamp bound out of range");
}

bool TokenGrid::all_known() const {
  return std::all_of(known.begin(), known.end(), [](uint8_t k) { return k != 0; });
}

size_t TokenGrid::known_count() const {
  return static_cast<size_t>(std::count_if(known.begin(), known.end(),
                                           [](uint8_t k) { return k != 0; }));
}

const std::array<int, kBlock * kBlock>& zigzag_order() {
  static const std::array<int, kBlock * kBlock> order = [] {
    std::array<int, kBlock * kBlock> o{};
    int i = 0;
    for (int s = 0; s <= 2 * (kBlock - 1); ++s) {
      const int lo = std::max(0, s - (kBlock - 1));
      const int hi = std::min(s, kBlock - 1);
      if (s % 2 == 1) {
        for (int row = lo; row <= hi; ++row) o[i++] = row * kBlock + (s - row);
      } else {
        for (int row = hi; row >= lo; --row) o[i++] = row * kBlock + (s - row);
      }
    }
    return o;
  }();
  return order;
}

int channel_plane(int channel, int planes) { return channel % planes; }
int channel_zigzag(int channel, int planes) { return channel / planes; }

TokenGrid analyze_serial(const Image& image, const CodecConfig& cfg, AnalyzeStats* stats) {
  check_image(image, cfg);
  TokenGrid grid(ceil_div(image.height, kBlock), ceil_div(image.width, kBlock), cfg.channels, true);
  size_t clamped = 0;
  for (int by = 0; by < grid.h; ++by)
    for (int bx = 0; bx < grid.w; ++bx)
      clamped += analyze_block(image, cfg, by, bx, nullptr, grid.token(grid.index(by, bx)));
  if (stats) {
    stats->coefficients = grid.values.size();
    stats->clamped = clamped;
  }
  return grid;
}

TokenGrid analyze(const Image& image, const CodecConfig& cfg, AnalyzeStats* stats) {
  check_image(image, cfg);
  TokenGrid grid(ceil_div(image.height, kBlock), ceil_div(image.width, kBlock), cfg.channels, true);
  const long blocks = static_cast<long>(grid.h) * grid.w;
  size_t clamped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamped)
  for (long b = 0; b < blocks; ++b) {
    const int by = static_cast<int>(b / grid.w);
    const int bx = static_cast<int>(b % grid.w);
    clamped += analyze_block(image, cfg, by, bx, nullptr, grid.token(static_cast<size_t>(b)));
  }
  if (stats) {
    stats->coefficients = grid.values.size();
    stats->clamped = clamped;
  }
  return grid;
}

std::vector<double> block_coefficients(const Image& image, const CodecConfig& cfg) {
  check_image(image, cfg);
  const int h = ceil_div(image.height, kBlock);
  const int w = ceil_div(image.width, kBlock);
  std::vector<double> out(static_cast<size_t>(h) * w * cfg.channels);
  for (int by = 0; by < h; ++by)
    for (int bx = 0; bx < w; ++bx)
      analyze_block(image, cfg, by, bx,
                    out.data() + (static_cast<size_t>(by) * w + bx) * cfg.channels, nullptr);
  return out;
}

Image synthesize(const TokenGrid& tokens, const CodecConfig& cfg, int out_height, int out_width,
                 int planes) {
  cfg.validate();
  if (tokens.channels != cfg.channels) throw InvalidArgument("synthesize: channel mismatch");
  if (!tokens.all_known()) throw InvalidArgument("synthesize: masked positions must be concealed first");
  if (planes != 1 && planes != 3) throw InvalidArgument("synthesize: planes must be 1 or 3");
  if (out_height <= 0 || out_width <= 0 || out_height > tokens.h * kBlock ||
      out_width > tokens.w * kBlock)
    throw InvalidArgument("synthesize: output size does not fit the token grid");

  const Basis& b = dct_basis();
  const auto& zz = zigzag_order();
  Image out(out_height, out_width, planes);
  const long blocks = static_cast<long>(tokens.h) * tokens.w;
#pragma omp parallel for schedule(static)
  for (long blk = 0; blk < blocks; ++blk) {
    const int by = static_cast<int>(blk / tokens.w);
    const int bx = static_cast<int>(blk % tokens.w);
    const int32_t* tok = tokens.token(static_cast<size_t>(blk));
    for (int p = 0; p < planes; ++p) {
      std::array<double, kBlock * kBlock> coef{};
      for (int c = p; c < cfg.channels; c += planes) {
        const int z = channel_zigzag(c, planes);
        coef[zz[z]] = tok[c] * cfg.step(z);
      }
      // px[y][x] = sum_v sum_u b[v][y] coef[v][u] b[u][x]
      std::array<double, kBlock * kBlock> tmp{};
      for (int v = 0; v < kBlock; ++v)
        for (int x = 0; x < kBlock; ++x) {
          double acc = 0.0;
          for (int u = 0; u < kBlock; ++u) acc += coef[v * kBlock + u] * b[u * kBlock + x];
          tmp[v * kBlock + x] = acc;
        }
      for (int y = 0; y < kBlock; ++y) {
        const int oy = by * kBlock + y;
        if (oy >= out_height) break;
        for (int x = 0; x < kBlock; ++x) {
          const int ox = bx * kBlock + x;
          if (ox >= out_width) break;
          double acc = 0.0;
          for (int v = 0; v < kBlock; ++v) acc += b[v * kBlock + y] * tmp[v * kBlock + x];
          out.at(oy, ox, p) = static_cast<uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
        }
      }
    }
  }
  return out;
}

}  // namespace resicomp

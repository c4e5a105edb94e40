#include "resicomp/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

struct Uniform {
  std::mt19937_64 rng;
  double operator()() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
  double in(double lo, double hi) { return lo + (hi - lo) * (*this)(); }
  double gauss() {
    const double u1 = std::max((*this)(), 1e-300);
    const double u2 = (*this)();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

struct Wave {
  double amp, kx, ky, phase;
};

struct Shape {
  bool ellipse;
  double cy, cx, ry, rx, angle, offset, slope;
};

}  // namespace

uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t hash64(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x51ed270b27d3b1a5ULL;
  for (uint64_t p : parts) h = mix64(h ^ mix64(p));
  return h;
}

Image synthetic_image(uint64_t index, int height, int width, int planes, uint64_t seed) {
  if (height < 1 || width < 1 || (planes != 1 && planes != 3))
    throw InvalidArgument("synthetic_image: bad dimensions");
  Uniform u{std::mt19937_64(hash64({seed, index, 0x636f72707573ULL}))};
  const double two_pi = 2.0 * std::numbers::pi;

  const double base = u.in(90, 160);
  const double gy = u.in(-60, 60) / height;
  const double gx = u.in(-60, 60) / width;

  std::vector<Wave> waves;
  for (int i = 0; i < 5; ++i) {
    const double period = u.in(48, 260);
    const double theta = u.in(0, std::numbers::pi);
    waves.push_back({u.in(6, 24), two_pi * std::cos(theta) / period,
                     two_pi * std::sin(theta) / period, u.in(0, two_pi)});
  }
  std::vector<Wave> texture;
  for (int i = 0; i < 3; ++i) {
    const double period = u.in(6, 14);
    const double theta = u.in(0, std::numbers::pi);
    texture.push_back({u.in(1.5, 4.0), two_pi * std::cos(theta) / period,
                       two_pi * std::sin(theta) / period, u.in(0, two_pi)});
  }
  std::vector<Shape> shapes;
  const int n_shapes = 3 + static_cast<int>(u() * 5);
  for (int i = 0; i < n_shapes; ++i) {
    const double r = u.in(0.06, 0.28) * std::min(height, width);
    shapes.push_back({u() < 0.6, u.in(0, height), u.in(0, width), r * u.in(0.5, 1.5),
                      r * u.in(0.5, 1.5), u.in(0, std::numbers::pi),
                      u.in(25, 70) * (u() < 0.5 ? -1.0 : 1.0), u.in(-0.6, 0.6)});
  }
  std::array<double, 3> gain{1.0, 1.0, 1.0};
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  if (planes == 3)
    for (int p = 0; p < 3; ++p) {
      gain[p] = u.in(0.75, 1.15);
      bias[p] = u.in(-20, 20);
    }

  Image img(height, width, planes);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double v = base + gy * y + gx * x;
      for (const Wave& w : waves) v += w.amp * std::cos(w.kx * x + w.ky * y + w.phase);
      for (const Shape& s : shapes) {
        const double dy = y - s.cy, dx = x - s.cx;
        const double ca = std::cos(s.angle), sa = std::sin(s.angle);
        const double a = (dx * ca + dy * sa) / s.rx;
        const double b = (-dx * sa + dy * ca) / s.ry;
        const bool inside = s.ellipse ? a * a + b * b <= 1.0 : std::abs(a) <= 1.0 && std::abs(b) <= 1.0;
        if (inside) v += s.offset + s.slope * (dx + dy);
      }
      double tex = 0.0;
      for (const Wave& w : texture) tex += w.amp * std::cos(w.kx * x + w.ky * y + w.phase);
      for (int p = 0; p < planes; ++p) {
        const double pv = gain[p] * (v - 128.0) + 128.0 + bias[p] + tex + 2.0 * u.gauss();
        img.at(y, x, p) = static_cast<uint8_t>(std::clamp(std::lround(pv), 0L, 255L));
      }
    }
  return img;
}

std::vector<Image> synthetic_corpus(int count, int height, int width, int planes, uint64_t seed) {
  std::vector<Image> out;
  out.reserve(static_cast<size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(synthetic_image(static_cast<uint64_t>(i), height, width, planes, seed));
  return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace resicomp

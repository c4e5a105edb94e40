#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace resicomp {

// 8-bit image, row-major, planes interleaved per pixel.
struct Image {
  int height = 0;
  int width = 0;
  int planes = 1;
  std::vector<uint8_t> samples;

  Image() = default;
  Image(int h, int w, int p, uint8_t fill = 0)
      : height(h), width(w), planes(p),
        samples(static_cast<size_t>(h) * w * p, fill) {}

  bool empty() const { return samples.empty(); }
  uint8_t& at(int y, int x, int p = 0) {
    return samples[(static_cast<size_t>(y) * width + x) * planes + p];
  }
  uint8_t at(int y, int x, int p = 0) const {
    return samples[(static_cast<size_t>(y) * width + x) * planes + p];
  }
  bool operator==(const Image&) const = default;
};

// Binary PPM/PGM (P6 / P5, maxval 255).
Image read_pnm(const std::filesystem::path& path);
Image decode_pnm(const std::string& bytes);
void write_pnm(const std::filesystem::path& path, const Image& img);
std::string encode_pnm(const Image& img);

double mse(const Image& a, const Image& b);

// Zero MSE maps to kPsnrCap.
inline constexpr double kPsnrCap = 100.0;
double psnr(const Image& a, const Image& b);

}  // namespace resicomp

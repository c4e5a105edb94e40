#include "resicomp/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "resicomp/errors.hpp"

namespace resicomp {

namespace {

// Reads one ASCII header integer, skipping whitespace and '#' comments.
int read_header_int(const std::string& s, size_t& pos) {
  for (;;) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos < s.size() && s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  size_t start = pos;
  long value = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    if (value > (1 << 24)) throw IoError("pnm: header value too large");
    ++pos;
  }
  if (pos == start) throw IoError("pnm: malformed header");
  return static_cast<int>(value);
}

}  // namespace

Image decode_pnm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw IoError("pnm: only binary P5/P6 supported");
  const int planes = bytes[1] == '6' ? 3 : 1;
  size_t pos = 2;
  const int width = read_header_int(bytes, pos);
  const int height = read_header_int(bytes, pos);
  const int maxval = read_header_int(bytes, pos);
  if (maxval != 255) throw IoError("pnm: maxval must be 255");
  if (width <= 0 || height <= 0) throw IoError("pnm: empty image");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
    throw IoError("pnm: malformed header");
  ++pos;
  Image img(height, width, planes);
  if (bytes.size() - pos < img.samples.size()) throw IoError("pnm: truncated pixel data");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), img.samples.size(),
              img.samples.begin());
  return img;
}

std::string encode_pnm(const Image& img) {
  if (img.planes != 1 && img.planes != 3) throw InvalidArgument("pnm: planes must be 1 or 3");
  std::ostringstream out;
  out << (img.planes == 3 ? "P6" : "P5") << '\n'
      << img.width << ' ' << img.height << "\n255\n";
  std::string s = out.str();
  s.append(reinterpret_cast<const char*>(img.samples.data()), img.samples.size());
  return s;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_pnm(buf.str());
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::string s = encode_pnm(img);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) throw IoError("short write to " + path.string());
}

double mse(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width || a.planes != b.planes)
    throw InvalidArgument("mse: image dimensions differ");
  if (a.samples.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    const double d = static_cast<double>(a.samples[i]) - b.samples[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.samples.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / e));
}

}  // namespace resicomp

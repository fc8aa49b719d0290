#include "rainlab/image.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <fstream>

#include "rainlab/errors.hpp"

namespace rainlab {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {
  if (h < 0 || w < 0 || c <= 0) throw ShapeError("image dimensions must be non-negative");
}

uint8_t QuantizationRule::quantize(double v) {
  long long r = std::llround(v * 255.0);  // llround: halfway cases go away from zero
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<uint8_t>(r);
}

Image clip_unit(Image img) {
  for (double& v : img.data) v = std::min(1.0, std::max(0.0, v));
  return img;
}

namespace {

inline double lerp1(double a, double b, double t) { return a + t * (b - a); }

}  // namespace

Image resize_bilinear(const Image& img, int new_h, int new_w) {
  if (new_h <= 0 || new_w <= 0) throw ShapeError("resize target must be positive");
  if (img.height <= 0 || img.width <= 0) throw ShapeError("resize source is empty");
  Image out(new_h, new_w, img.channels);
  const double sy = static_cast<double>(img.height) / new_h;
  const double sx = static_cast<double>(img.width) / new_w;
  for (int y = 0; y < new_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double ty = fy - y0;
    int ya = std::clamp(y0, 0, img.height - 1);
    int yb = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < new_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double tx = fx - x0;
      int xa = std::clamp(x0, 0, img.width - 1);
      int xb = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) {
        double top = lerp1(img.at(ya, xa, c), img.at(ya, xb, c), tx);
        double bot = lerp1(img.at(yb, xa, c), img.at(yb, xb, c), tx);
        out.at(y, x, c) = lerp1(top, bot, ty);
      }
    }
  }
  return out;
}

namespace {

// whitespace-and-comment aware token scanner for PPM headers
struct HeaderScanner {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      uint8_t c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(c)) {
        ++pos;
      } else {
        break;
      }
    }
  }

  long next_number() {
    skip_space_and_comments();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
      throw FormatError("ppm: expected numeric header field");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1000000000L) throw FormatError("ppm: header field out of range");
      ++pos;
    }
    return v;
  }
};

}  // namespace

Image decode_p6(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw FormatError("ppm: missing P6 magic");
  HeaderScanner sc{bytes, 2};
  long w = sc.next_number();
  long h = sc.next_number();
  long maxval = sc.next_number();
  if (w <= 0 || h <= 0) throw FormatError("ppm: non-positive dimensions");
  if (maxval != 255) throw FormatError("ppm: only maxval 255 is supported");
  if (sc.pos >= bytes.size() || !std::isspace(bytes[sc.pos]))
    throw FormatError("ppm: missing separator before payload");
  ++sc.pos;  // exactly one whitespace byte separates header and payload
  size_t need = static_cast<size_t>(w) * h * 3;
  if (bytes.size() - sc.pos < need) throw FormatError("ppm: truncated payload");
  if (bytes.size() - sc.pos > need) throw FormatError("ppm: trailing bytes after payload");
  Image img(static_cast<int>(h), static_cast<int>(w), 3);
  for (size_t i = 0; i < need; ++i)
    img.data[i] = QuantizationRule::dequantize(bytes[sc.pos + i]);
  return img;
}

std::vector<uint8_t> encode_p6(const Image& img) {
  if (img.channels != 3) throw ShapeError("ppm: encoding requires 3 channels");
  if (img.height <= 0 || img.width <= 0) throw ShapeError("ppm: empty image");
  std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data.size());
  for (double v : img.data) out.push_back(QuantizationRule::quantize(v));
  return out;
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failure: " + path);
  return bytes;
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failure: " + path);
}

Image load_ppm(const std::string& path) {
  return decode_p6(read_file(path));
}

void save_ppm(const std::string& path, const Image& img) {
  write_file(path, encode_p6(img));
}

}  // namespace rainlab

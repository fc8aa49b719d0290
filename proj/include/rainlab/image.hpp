#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rainlab {

// Row-major H x W x C intensity grid.  Values are nominally in [0,1] but the
// type does not enforce that; detail layers are signed and live here too.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0);

  double& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// 8-bit byte <-> unit interval, 256 levels.  Halfway cases round away from
// zero so that quantize(dequantize(b)) == b for every byte.
struct QuantizationRule {
  static constexpr int levels = 256;
  static uint8_t quantize(double v);
  static double dequantize(uint8_t b) { return b / 255.0; }
};

// clamp every intensity into [0,1]
Image clip_unit(Image img);

// Bilinear resampling; sample centers sit at (i + 0.5) * scale - 0.5 so the
// grid stays alignment-free of corner pixels and constants pass through
// untouched.
Image resize_bilinear(const Image& img, int new_h, int new_w);

// Binary PPM, maxval 255.  decode accepts standard headers (comments,
// arbitrary whitespace); encode always writes "P6\n<w> <h>\n255\n".
Image decode_p6(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_p6(const Image& img);

Image load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Image& img);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace rainlab

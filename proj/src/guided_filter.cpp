#include "rainlab/guided_filter.hpp"

#include <vector>

#include "rainlab/errors.hpp"

namespace rainlab {

namespace {

// Summed-area table per channel.  S has one extra row/column of zeros so the
// window sum is always four lookups.
struct Sat {
  int h, w;
  std::vector<double> s;  // (h+1) x (w+1)

  Sat(const Image& img, int channel) : h(img.height), w(img.width), s(static_cast<size_t>(h + 1) * (w + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += img.at(y, x, channel);
        s[static_cast<size_t>(y + 1) * (w + 1) + (x + 1)] = s[static_cast<size_t>(y) * (w + 1) + (x + 1)] + row;
      }
    }
  }

  // inclusive rectangle [y0,y1] x [x0,x1]
  double sum(int y0, int x0, int y1, int x1) const {
    const size_t W = w + 1;
    return s[(y1 + 1) * W + (x1 + 1)] - s[y0 * W + (x1 + 1)] - s[(y1 + 1) * W + x0] + s[y0 * W + x0];
  }
};

Image product_image(const Image& a, const Image& b) {
  Image out(a.height, a.width, a.channels);
  for (size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

Image box_filter(const Image& img, int radius) {
  if (radius < 0) throw ParamError("box_filter: radius must be >= 0");
  if (img.height <= 0 || img.width <= 0) throw ShapeError("box_filter: empty image");
  Image out(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    Sat sat(img, c);
    for (int y = 0; y < img.height; ++y) {
      int y0 = std::max(0, y - radius);
      int y1 = std::min(img.height - 1, y + radius);
      for (int x = 0; x < img.width; ++x) {
        int x0 = std::max(0, x - radius);
        int x1 = std::min(img.width - 1, x + radius);
        double count = static_cast<double>(y1 - y0 + 1) * (x1 - x0 + 1);
        out.at(y, x, c) = sat.sum(y0, x0, y1, x1) / count;
      }
    }
  }
  return out;
}

Image guided_filter_self(const Image& img, const FilterParams& params) {
  if (params.eps <= 0.0) throw ParamError("guided filter: eps must be positive");
  if (params.radius < 0) throw ParamError("guided filter: radius must be >= 0");
  const Image m = box_filter(img, params.radius);
  const Image mpp = box_filter(product_image(img, img), params.radius);
  Image a(img.height, img.width, img.channels);
  Image b(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i) {
    double v = mpp.data[i] - m.data[i] * m.data[i];
    double ai = v / (v + params.eps);
    a.data[i] = ai;
    b.data[i] = (1.0 - ai) * m.data[i];
  }
  const Image abar = box_filter(a, params.radius);
  const Image bbar = box_filter(b, params.radius);
  Image q(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i)
    q.data[i] = abar.data[i] * img.data[i] + bbar.data[i];
  return q;
}

Decomposition decompose(const Image& img, const FilterParams& params) {
  Decomposition d;
  d.base = guided_filter_self(img, params);
  d.detail = Image(img.height, img.width, img.channels);
  for (size_t i = 0; i < img.data.size(); ++i)
    d.detail.data[i] = img.data[i] - d.base.data[i];
  return d;
}

}  // namespace rainlab

#pragma once

#include "rainlab/image.hpp"

namespace rainlab {

struct FilterParams {
  int radius = 10;
  // regularizer on the local variance, expressed on the unit intensity scale
  double eps = 10.0 / (255.0 * 255.0);
};

// Mean over the (2r+1)^2 window centered at each pixel, clipped at the image
// border.  The divisor is the actual number of pixels in the clipped window,
// never a padded count.
Image box_filter(const Image& img, int radius);

// Edge-preserving smoothing where the image guides itself; channels are
// filtered independently.  q = box(a) * p + box(b) with a = v/(v+eps) and
// b = (1-a) * m computed from windowed mean m and variance v.
Image guided_filter_self(const Image& img, const FilterParams& params);

struct Decomposition {
  Image base;
  Image detail;  // detail = img - base, signed, never clipped
};

Decomposition decompose(const Image& img, const FilterParams& params);

}  // namespace rainlab

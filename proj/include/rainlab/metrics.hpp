#pragma once

#include <string>
#include <vector>

#include "rainlab/image.hpp"
#include "rainlab/synth.hpp"

namespace rainlab {

// 10*log10(peak^2 / mse); identical images give +infinity
double psnr(const Image& a, const Image& b, double peak = 1.0);

// 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, valid-window
// sliding, per channel then averaged.  Requires min(H, W) >= 11.
double ssim(const Image& a, const Image& b);

// 8x8 unweighted sliding windows, per channel then averaged.  Windows whose
// denominator vanishes use the stabilized values: flat-equal windows count as
// 1, flat-unequal windows as 2ab/(a^2+b^2) of the means.  Requires
// min(H, W) >= 8.
double uqi(const Image& a, const Image& b);

struct ImageMetrics {
  std::string id;
  double psnr = 0.0, ssim = 0.0, uqi = 0.0;
};

struct MetricsReport {
  std::vector<ImageMetrics> images;
  double mean_psnr = 0.0, mean_ssim = 0.0, mean_uqi = 0.0;
  int count = 0;
};

// Pairs every manifest entry's clean image with the same-named file under
// derained_dir (matched by the rainy file's basename).
MetricsReport evaluate_dataset(const DatasetManifest& manifest, const std::string& manifest_dir,
                               const std::string& derained_dir);

std::string report_to_json(const MetricsReport& report);
void save_report(const std::string& path, const MetricsReport& report);

}  // namespace rainlab

#include "rainlab/metrics.hpp"

#include <cmath>
#include <filesystem>
#include <limits>

#include "json.hpp"
#include "rainlab/errors.hpp"

namespace fs = std::filesystem;

namespace rainlab {

namespace {

constexpr int kSsimWin = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kUqiWin = 8;

void check_pair(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": images differ in shape");
  if (a.height <= 0 || a.width <= 0) throw ShapeError(std::string(what) + ": empty image");
}

// normalized 1-D Gaussian taps for the ssim window
std::vector<double> ssim_taps() {
  std::vector<double> t(kSsimWin);
  double s = 0.0;
  for (int i = 0; i < kSsimWin; ++i) {
    double d = i - (kSsimWin - 1) / 2.0;
    t[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    s += t[i];
  }
  for (double& v : t) v /= s;
  return t;
}

// weighted horizontal then vertical pass, valid region only
std::vector<double> gauss_valid(const std::vector<double>& src, int h, int w,
                                const std::vector<double>& taps) {
  int vw = w - kSsimWin + 1;
  int vh = h - kSsimWin + 1;
  std::vector<double> tmp(static_cast<size_t>(h) * vw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWin; ++k) acc += taps[k] * src[static_cast<size_t>(y) * w + x + k];
      tmp[static_cast<size_t>(y) * vw + x] = acc;
    }
  std::vector<double> out(static_cast<size_t>(vh) * vw);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWin; ++k) acc += taps[k] * tmp[static_cast<size_t>(y + k) * vw + x];
      out[static_cast<size_t>(y) * vw + x] = acc;
    }
  return out;
}

std::vector<double> plane_of(const Image& img, int c) {
  std::vector<double> p(static_cast<size_t>(img.height) * img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p[static_cast<size_t>(y) * img.width + x] = img.at(y, x, c);
  return p;
}

struct Sat1 {
  int h, w;
  std::vector<double> s;
  Sat1(const std::vector<double>& plane, int h_, int w_) : h(h_), w(w_), s(static_cast<size_t>(h_ + 1) * (w_ + 1), 0.0) {
    for (int y = 0; y < h; ++y) {
      double row = 0.0;
      for (int x = 0; x < w; ++x) {
        row += plane[static_cast<size_t>(y) * w + x];
        s[static_cast<size_t>(y + 1) * (w + 1) + x + 1] = s[static_cast<size_t>(y) * (w + 1) + x + 1] + row;
      }
    }
  }
  double sum(int y0, int x0, int n) const {  // n x n window with top-left (y0,x0)
    const size_t W = w + 1;
    return s[(y0 + n) * W + x0 + n] - s[y0 * W + x0 + n] - s[(y0 + n) * W + x0] + s[y0 * W + x0];
  }
};

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  check_pair(a, b, "psnr");
  if (peak <= 0.0) throw ParamError("psnr: peak must be positive");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b) {
  check_pair(a, b, "ssim");
  if (a.height < kSsimWin || a.width < kSsimWin)
    throw ShapeError("ssim: image smaller than the 11x11 window");
  static const std::vector<double> taps = ssim_taps();
  const int h = a.height, w = a.width;
  double channel_acc = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> pa = plane_of(a, c), pb = plane_of(b, c);
    std::vector<double> paa(pa.size()), pbb(pa.size()), pab(pa.size());
    for (size_t i = 0; i < pa.size(); ++i) {
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    auto ma = gauss_valid(pa, h, w, taps);
    auto mb = gauss_valid(pb, h, w, taps);
    auto maa = gauss_valid(paa, h, w, taps);
    auto mbb = gauss_valid(pbb, h, w, taps);
    auto mab = gauss_valid(pab, h, w, taps);
    double acc = 0.0;
    for (size_t i = 0; i < ma.size(); ++i) {
      double va = maa[i] - ma[i] * ma[i];
      double vb = mbb[i] - mb[i] * mb[i];
      double vab = mab[i] - ma[i] * mb[i];
      double num = (2.0 * (ma[i] * mb[i]) + kC1) * (2.0 * vab + kC2);
      double den = (ma[i] * ma[i] + mb[i] * mb[i] + kC1) * (va + vb + kC2);
      acc += num / den;
    }
    channel_acc += acc / static_cast<double>(ma.size());
  }
  return channel_acc / a.channels;
}

double uqi(const Image& a, const Image& b) {
  check_pair(a, b, "uqi");
  if (a.height < kUqiWin || a.width < kUqiWin)
    throw ShapeError("uqi: image smaller than the 8x8 window");
  const int h = a.height, w = a.width;
  const int vh = h - kUqiWin + 1, vw = w - kUqiWin + 1;
  const double N = static_cast<double>(kUqiWin) * kUqiWin;
  double channel_acc = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> pa = plane_of(a, c), pb = plane_of(b, c);
    std::vector<double> paa(pa.size()), pbb(pa.size()), pab(pa.size());
    for (size_t i = 0; i < pa.size(); ++i) {
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    Sat1 sa(pa, h, w), sb(pb, h, w), saa(paa, h, w), sbb(pbb, h, w), sab(pab, h, w);
    double acc = 0.0;
    for (int y = 0; y < vh; ++y)
      for (int x = 0; x < vw; ++x) {
        double ma = sa.sum(y, x, kUqiWin) / N;
        double mb = sb.sum(y, x, kUqiWin) / N;
        double va = saa.sum(y, x, kUqiWin) / N - ma * ma;
        double vb = sbb.sum(y, x, kUqiWin) / N - mb * mb;
        double vab = sab.sum(y, x, kUqiWin) / N - ma * mb;
        double den1 = va + vb;
        double musq = ma * ma + mb * mb;
        double den = den1 * musq;
        if (den != 0.0) {
          acc += (4.0 * vab) * (ma * mb) / den;
        } else if (musq != 0.0) {
          acc += 2.0 * (ma * mb) / musq;
        } else {
          acc += 1.0;
        }
      }
    channel_acc += acc / (static_cast<double>(vh) * vw);
  }
  return channel_acc / a.channels;
}

MetricsReport evaluate_dataset(const DatasetManifest& manifest, const std::string& manifest_dir,
                               const std::string& derained_dir) {
  if (manifest.entries.empty()) throw DataError("evaluate_dataset: manifest has no entries");
  MetricsReport rep;
  for (const auto& e : manifest.entries) {
    std::string id = fs::path(e.rainy_path).stem().string();
    fs::path clean_path = fs::path(manifest_dir) / e.clean_path;
    fs::path derained_path = fs::path(derained_dir) / fs::path(e.rainy_path).filename();
    if (!fs::exists(clean_path)) throw IoError("evaluate_dataset: missing clean image for " + id);
    if (!fs::exists(derained_path)) throw IoError("evaluate_dataset: missing derained image for " + id);
    Image clean = load_ppm(clean_path.string());
    Image restored = load_ppm(derained_path.string());
    ImageMetrics m;
    m.id = id;
    m.psnr = psnr(restored, clean);
    m.ssim = ssim(restored, clean);
    m.uqi = uqi(restored, clean);
    rep.images.push_back(std::move(m));
  }
  rep.count = static_cast<int>(rep.images.size());
  double sp = 0.0, ss = 0.0, su = 0.0;
  for (const auto& m : rep.images) {
    sp += m.psnr;
    ss += m.ssim;
    su += m.uqi;
  }
  rep.mean_psnr = sp / rep.count;
  rep.mean_ssim = ss / rep.count;
  rep.mean_uqi = su / rep.count;
  return rep;
}

namespace {

nlohmann::ordered_json metric_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["images"] = nlohmann::ordered_json::array();
  for (const auto& m : report.images) {
    j["images"].push_back({{"id", m.id},
                           {"psnr", metric_value(m.psnr)},
                           {"ssim", metric_value(m.ssim)},
                           {"uqi", metric_value(m.uqi)}});
  }
  j["mean_psnr"] = metric_value(report.mean_psnr);
  j["mean_ssim"] = metric_value(report.mean_ssim);
  j["mean_uqi"] = metric_value(report.mean_uqi);
  j["count"] = report.count;
  return j.dump(2) + "\n";
}

void save_report(const std::string& path, const MetricsReport& report) {
  std::string body = report_to_json(report);
  write_file(path, std::vector<uint8_t>(body.begin(), body.end()));
}

}  // namespace rainlab

#include "rainlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "rainlab/errors.hpp"

namespace fs = std::filesystem;

namespace rainlab {

StreakSpec::Direction direction_from_string(const std::string& s) {
  if (s == "left") return StreakSpec::Direction::Left;
  if (s == "vertical") return StreakSpec::Direction::Vertical;
  if (s == "right") return StreakSpec::Direction::Right;
  throw FormatError("unknown streak direction: " + s);
}

std::string direction_to_string(StreakSpec::Direction d) {
  switch (d) {
    case StreakSpec::Direction::Left: return "left";
    case StreakSpec::Direction::Vertical: return "vertical";
    case StreakSpec::Direction::Right: return "right";
  }
  throw ContractError("bad direction enum");
}

StreakSpec EnrichmentPolicy::sample_spec(StreakSpec::Direction cat, int h, int w, Rng& rng) const {
  StreakSpec s;
  s.category = cat;
  switch (cat) {
    case StreakSpec::Direction::Left: s.angle_deg = rng.uniform(-45.0, -10.0); break;
    case StreakSpec::Direction::Vertical: s.angle_deg = rng.uniform(-10.0, 10.0); break;
    case StreakSpec::Direction::Right: s.angle_deg = rng.uniform(10.0, 45.0); break;
  }
  double side = std::min(h, w);
  s.length = rng.uniform(length_frac_lo, length_frac_hi) * side;
  s.width = rng.uniform(width_lo, width_hi);
  s.density = rng.uniform(density_lo, density_hi);
  s.intensity = rng.uniform(intensity_lo, intensity_hi);
  return s;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// distance from point p to segment [a,b]
double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  double dx = bx - ax, dy = by - ay;
  double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  double cx = ax + t * dx - px, cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

Image render_streak_layer(const StreakSpec& spec, int h, int w, uint64_t seed) {
  if (h <= 0 || w <= 0) throw ShapeError("render_streak_layer: empty canvas");
  if (spec.density < 0.0) throw ParamError("render_streak_layer: negative density");
  if (spec.intensity <= 0.0 || spec.intensity > 1.0)
    throw ParamError("render_streak_layer: intensity must be in (0,1]");
  if (spec.length <= 0.0 || spec.width <= 0.0)
    throw ParamError("render_streak_layer: length and width must be positive");

  Image layer(h, w, 1);
  long long n = std::llround(spec.density * h * w / 1000.0);
  Rng rng(seed);
  for (long long i = 0; i < n; ++i) {
    double cx = rng.uniform(0.0, static_cast<double>(w));
    double cy = rng.uniform(0.0, static_cast<double>(h));
    double ang = (spec.angle_deg + rng.uniform(-3.0, 3.0)) * kPi / 180.0;
    double len = spec.length * rng.uniform(0.8, 1.2);
    double bright = spec.intensity * rng.uniform(0.5, 1.0);
    // streak direction: angle measured from vertical
    double dx = std::sin(ang), dy = std::cos(ang);
    double ax = cx - dx * len * 0.5, ay = cy - dy * len * 0.5;
    double bx = cx + dx * len * 0.5, by = cy + dy * len * 0.5;
    double halfw = spec.width * 0.5;
    double reach = halfw + 1.0;
    int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - reach)));
    int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + reach)));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - reach)));
    int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(ay, by) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double d = segment_distance(x + 0.5, y + 0.5, ax, ay, bx, by);
        double cov = std::clamp(halfw + 0.5 - d, 0.0, 1.0);  // 1px soft edge
        if (cov > 0.0) layer.at(y, x, 0) += bright * cov;
      }
    }
  }
  for (double& v : layer.data) v = std::min(1.0, v);
  return layer;
}

Image apply_record(const Image& clean, const EnrichmentRecord& record) {
  if (record.k != static_cast<int>(record.specs.size()))
    throw ContractError("enrichment record: k does not match spec count");
  if (record.k == 0) return clean;
  Image out = clean;
  for (size_t i = 0; i < record.specs.size(); ++i) {
    Image layer = render_streak_layer(record.specs[i], clean.height, clean.width,
                                      derive_seed(record.seed, "streak-layer", i));
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        for (int c = 0; c < out.channels; ++c)
          out.at(y, x, c) += layer.at(y, x, 0);
  }
  return clip_unit(std::move(out));
}

std::pair<Image, EnrichmentRecord> enrich(const Image& clean, const EnrichmentPolicy& policy, uint64_t seed) {
  Rng rng(derive_seed(seed, "enrich-choices"));
  EnrichmentRecord rec;
  rec.seed = seed;
  rec.k = static_cast<int>(rng.uniform_int(0, 3));
  StreakSpec::Direction cats[3] = {StreakSpec::Direction::Left, StreakSpec::Direction::Vertical,
                                   StreakSpec::Direction::Right};
  // partial Fisher-Yates; the first k entries are the chosen distinct directions
  for (int i = 0; i < rec.k; ++i) {
    int j = i + static_cast<int>(rng.below(3 - i));
    std::swap(cats[i], cats[j]);
  }
  for (int i = 0; i < rec.k; ++i)
    rec.specs.push_back(policy.sample_spec(cats[i], clean.height, clean.width, rng));
  return {apply_record(clean, rec), rec};
}

double total_density(const EnrichmentRecord& record) {
  double t = 0.0;
  for (const auto& s : record.specs) t += s.density;
  return t;
}

bool is_heavy(const EnrichmentRecord& record, double density_threshold) {
  return record.k >= 2 || total_density(record) >= density_threshold;
}

void partition_heavy(DatasetManifest& manifest, double density_threshold) {
  for (auto& e : manifest.entries) e.heavy = is_heavy(e.record, density_threshold);
}

Image procedural_texture(int h, int w, uint64_t seed) {
  if (h <= 0 || w <= 0) throw ShapeError("procedural_texture: empty canvas");
  Rng rng(seed);
  double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
  double g0 = rng.uniform(0.3, 0.7);
  double ga = rng.uniform(0.15, 0.4);
  struct Blob { double cx, cy, sigma, amp; };
  std::vector<Blob> blobs(static_cast<size_t>(rng.uniform_int(1, 3)));
  double side = std::min(h, w);
  for (auto& b : blobs) {
    b.cx = rng.uniform(0.0, static_cast<double>(w));
    b.cy = rng.uniform(0.0, static_cast<double>(h));
    b.sigma = rng.uniform(0.12, 0.35) * side;
    b.amp = rng.uniform(-0.25, 0.25);
  }
  double wamp = rng.uniform(0.02, 0.08);
  double wfx = rng.uniform(0.5, 1.5) * 2.0 * kPi / w;
  double wfy = rng.uniform(0.5, 1.5) * 2.0 * kPi / h;
  double ph1 = rng.uniform(0.0, 2.0 * kPi), ph2 = rng.uniform(0.0, 2.0 * kPi);
  double tint[3], off[3];
  for (int c = 0; c < 3; ++c) {
    tint[c] = rng.uniform(0.82, 1.0);
    off[c] = rng.uniform(-0.06, 0.06);
  }
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double lum = g0 + ga * (gx * (static_cast<double>(x) / w - 0.5) + gy * (static_cast<double>(y) / h - 0.5));
      for (const auto& b : blobs) {
        double ddx = x - b.cx, ddy = y - b.cy;
        lum += b.amp * std::exp(-(ddx * ddx + ddy * ddy) / (2.0 * b.sigma * b.sigma));
      }
      lum += wamp * std::sin(wfx * x + ph1) * std::sin(wfy * y + ph2);
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::min(1.0, std::max(0.0, lum * tint[c] + off[c]));
    }
  }
  return img;
}

namespace {

nlohmann::ordered_json spec_to_json(const StreakSpec& s) {
  return {{"category", direction_to_string(s.category)}, {"angle", s.angle_deg}, {"length", s.length},
          {"width", s.width},                            {"density", s.density}, {"intensity", s.intensity}};
}

StreakSpec spec_from_json(const nlohmann::json& j) {
  StreakSpec s;
  s.category = direction_from_string(j.at("category").get<std::string>());
  s.angle_deg = j.at("angle").get<double>();
  s.length = j.at("length").get<double>();
  s.width = j.at("width").get<double>();
  s.density = j.at("density").get<double>();
  s.intensity = j.at("intensity").get<double>();
  return s;
}

std::string entry_id(const std::string& clean_path) {
  return fs::path(clean_path).stem().string();
}

}  // namespace

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  for (const auto& e : manifest.entries) {
    nlohmann::ordered_json j;
    j["clean"] = e.clean_path;
    j["rainy"] = e.rainy_path;
    j["k"] = e.record.k;
    nlohmann::ordered_json specs = nlohmann::ordered_json::array();
    for (const auto& s : e.record.specs) specs.push_back(spec_to_json(s));
    j["specs"] = specs;
    j["seed"] = e.record.seed;
    j["heavy"] = e.heavy;
    f << j.dump() << "\n";
  }
  if (!f) throw IoError("write failure: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  DatasetManifest m;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      ManifestEntry e;
      e.clean_path = j.at("clean").get<std::string>();
      e.rainy_path = j.at("rainy").get<std::string>();
      e.record.k = j.at("k").get<int>();
      for (const auto& sj : j.at("specs")) e.record.specs.push_back(spec_from_json(sj));
      e.record.seed = j.at("seed").get<uint64_t>();
      e.record.source_id = entry_id(e.clean_path);
      e.heavy = j.at("heavy").get<bool>();
      if (e.record.k != static_cast<int>(e.record.specs.size()))
        throw FormatError("manifest line " + std::to_string(lineno) + ": k does not match specs");
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

DatasetManifest build_dataset(const std::string& clean_dir, int n, int size, uint64_t seed,
                              const std::string& out_dir, const EnrichmentPolicy& policy,
                              double heavy_threshold) {
  if (n < 0) throw ParamError("build_dataset: n must be >= 0");
  if (size < 0) throw ParamError("build_dataset: size must be >= 0");
  std::vector<std::string> sources;
  if (!clean_dir.empty() && fs::is_directory(clean_dir)) {
    for (const auto& de : fs::directory_iterator(clean_dir))
      if (de.is_regular_file() && de.path().extension() == ".ppm") sources.push_back(de.path().string());
    std::sort(sources.begin(), sources.end());
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw IoError("cannot create output directory: " + out_dir);

  DatasetManifest manifest;
  for (int i = 0; i < n; ++i) {
    Image clean;
    if (sources.empty()) {
      int side = size > 0 ? size : 64;
      clean = procedural_texture(side, side, derive_seed(seed, "texture", i));
    } else {
      clean = load_ppm(sources[i % sources.size()]);
      if (size > 0) clean = resize_bilinear(clean, size, size);
    }
    // snap to the byte grid so the written file decodes to exactly the image
    // the enrichment saw; record replay from disk then matches bit for bit
    clean = decode_p6(encode_p6(clean));
    auto [rainy, rec] = enrich(clean, policy, derive_seed(seed, "enrich", i));

    char name[32];
    std::snprintf(name, sizeof(name), "clean_%04d.ppm", i);
    std::string clean_rel = name;
    std::snprintf(name, sizeof(name), "rainy_%04d.ppm", i);
    std::string rainy_rel = name;
    save_ppm((fs::path(out_dir) / clean_rel).string(), clean);
    save_ppm((fs::path(out_dir) / rainy_rel).string(), rainy);

    ManifestEntry e;
    e.clean_path = clean_rel;
    e.rainy_path = rainy_rel;
    e.record = rec;
    e.record.source_id = entry_id(clean_rel);
    manifest.entries.push_back(std::move(e));
  }
  partition_heavy(manifest, heavy_threshold);
  save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  return manifest;
}

}  // namespace rainlab

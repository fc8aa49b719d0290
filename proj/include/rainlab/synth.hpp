#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rainlab/image.hpp"
#include "rainlab/rng.hpp"

namespace rainlab {

// One family of rain streaks.  Angles are degrees from vertical; negative
// leans left, positive leans right.
struct StreakSpec {
  enum class Direction { Left, Vertical, Right };
  Direction category = Direction::Vertical;
  double angle_deg = 0.0;
  double length = 12.0;     // pixels
  double width = 1.5;       // pixels
  double density = 5.0;     // streaks per 1000 pixels
  double intensity = 0.3;   // peak additive brightness, (0,1]
};

StreakSpec::Direction direction_from_string(const std::string& s);
std::string direction_to_string(StreakSpec::Direction d);

struct EnrichmentRecord {
  int k = 0;
  std::vector<StreakSpec> specs;
  uint64_t seed = 0;
  std::string source_id;
};

struct ManifestEntry {
  std::string clean_path;  // relative to the manifest file
  std::string rainy_path;
  EnrichmentRecord record;
  bool heavy = false;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// Sampling ranges for streak families.  Angle ranges per direction category
// are fixed: left [-45,-10], near-vertical (-10,10), right [10,45].
struct EnrichmentPolicy {
  double length_frac_lo = 0.25, length_frac_hi = 0.55;  // fraction of min(h,w)
  double width_lo = 1.0, width_hi = 2.0;
  double density_lo = 3.0, density_hi = 10.0;
  double intensity_lo = 0.15, intensity_hi = 0.45;

  StreakSpec sample_spec(StreakSpec::Direction cat, int h, int w, Rng& rng) const;
};

// Renders round(density * h * w / 1000) anti-aliased streaks into a single
// channel layer.  Per streak the angle jitters by up to +-3 degrees, the
// length by up to +-20%, and the brightness is intensity * U[0.5, 1].
Image render_streak_layer(const StreakSpec& spec, int h, int w, uint64_t seed);

// Draw k in {0,1,2,3} streak families (pairwise distinct directions when
// k >= 2), overlay them on the clean image, clip to [0,1].  k = 0 returns the
// input untouched.
std::pair<Image, EnrichmentRecord> enrich(const Image& clean, const EnrichmentPolicy& policy, uint64_t seed);

// Deterministic re-render of a recorded enrichment.
Image apply_record(const Image& clean, const EnrichmentRecord& record);

double total_density(const EnrichmentRecord& record);

// heavy iff k >= 2 or total density >= threshold (boundary inclusive)
bool is_heavy(const EnrichmentRecord& record, double density_threshold);
void partition_heavy(DatasetManifest& manifest, double density_threshold);

// Seeded smooth background: gradient + soft blobs + a low-frequency wave,
// lightly tinted per channel.
Image procedural_texture(int h, int w, uint64_t seed);

// Writes n (clean, rainy) PPM pairs plus manifest.jsonl into out_dir.  Clean
// sources come from clean_dir (*.ppm, sorted, cycled) or, when clean_dir is
// empty or missing, from the procedural texture generator.  size > 0 resizes
// every clean source to size x size; size == 0 keeps native sizes.
DatasetManifest build_dataset(const std::string& clean_dir, int n, int size, uint64_t seed,
                              const std::string& out_dir, const EnrichmentPolicy& policy = {},
                              double heavy_threshold = 8.0);

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

}  // namespace rainlab

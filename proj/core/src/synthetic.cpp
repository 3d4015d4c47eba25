#include "ppac/synthetic.hpp"

#include <cmath>
#include <string>

#include "ppac/error.hpp"
#include "ppac/rng.hpp"

namespace ppac {
namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Vec3d draw_radii(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

double mean_radius(const Vec3d& r) { return (r.x + r.y + r.z) / 3.0; }

} // namespace

void validate(const SyntheticSpec& spec) {
  for (int i = 0; i < 3; ++i) {
    if (spec.dims[i] < 4) throw ConfigError("dims: every extent must be at least 4");
    if (!(spec.spacing[i] > 0.0)) throw ConfigError("spacing: every entry must be positive");
    if (2 * spec.target_margin >= spec.dims[i] - 1) throw ConfigError("target_margin: leaves no room for the target");
  }
  if (spec.target_margin < 1) throw ConfigError("target_margin: must be at least 1");
  if (spec.blobs < 1) throw ConfigError("blobs: at least the target blob is required");
  if (!(spec.radius_min > 0.0) || spec.radius_max < spec.radius_min) throw ConfigError("radius_min/radius_max: invalid range");
  if (!(spec.target_radius_min > 0.0) || spec.target_radius_max < spec.target_radius_min) {
    throw ConfigError("target_radius_min/target_radius_max: invalid range");
  }
  if (spec.distractor_amplitude_min < 0.0 || spec.distractor_amplitude_max < spec.distractor_amplitude_min ||
      spec.distractor_amplitude_max >= 1.0) {
    throw ConfigError("distractor_amplitude_min/distractor_amplitude_max: must satisfy 0 <= min <= max < 1");
  }
  if (spec.separation < 0.0) throw ConfigError("separation: must be non-negative");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) throw ConfigError("noise_sigma: must be finite and non-negative");
  if (spec.landmark_name.empty()) throw ConfigError("landmark_name: must not be empty");
}

SyntheticVolume generate_synthetic_detailed(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, 0x5e));

  std::vector<Blob> blobs;
  blobs.reserve(static_cast<std::size_t>(spec.blobs));

  Blob target;
  target.center = Vec3d(Vec3i{uniform_int(rng, spec.target_margin, spec.dims.x - 1 - spec.target_margin),
                              uniform_int(rng, spec.target_margin, spec.dims.y - 1 - spec.target_margin),
                              uniform_int(rng, spec.target_margin, spec.dims.z - 1 - spec.target_margin)});
  target.radii = draw_radii(rng, spec.target_radius_min, spec.target_radius_max);
  target.amplitude = 1.0;
  blobs.push_back(target);

  constexpr int kMaxAttempts = 10000;
  for (int b = 1; b < spec.blobs; ++b) {
    Blob d;
    d.radii = draw_radii(rng, spec.radius_min, spec.radius_max);
    d.amplitude = uniform(rng, spec.distractor_amplitude_min, spec.distractor_amplitude_max);
    const double min_dist = spec.separation * (mean_radius(target.radii) + mean_radius(d.radii));
    int attempt = 0;
    for (; attempt < kMaxAttempts; ++attempt) {
      d.center = {uniform(rng, 0.0, spec.dims.x - 1.0), uniform(rng, 0.0, spec.dims.y - 1.0), uniform(rng, 0.0, spec.dims.z - 1.0)};
      if (distance(d.center, target.center) >= min_dist) break;
    }
    if (attempt == kMaxAttempts) throw ConfigError("separation: cannot place distractor blobs in the given dims");
    blobs.push_back(d);
  }

  const Vec3i dims = spec.dims;
  std::vector<float> data(static_cast<std::size_t>(dims.x) * dims.y * dims.z);
  std::size_t k = 0;
  for (int z = 0; z < dims.z; ++z) {
    for (int y = 0; y < dims.y; ++y) {
      for (int x = 0; x < dims.x; ++x, ++k) {
        double value = 0.0;
        for (const auto& blob : blobs) {
          const double dx = (x - blob.center.x) / blob.radii.x;
          const double dy = (y - blob.center.y) / blob.radii.y;
          const double dz = (z - blob.center.z) / blob.radii.z;
          value += blob.amplitude * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz));
        }
        if (spec.noise_sigma > 0.0) value += spec.noise_sigma * standard_normal(rng);
        data[k] = static_cast<float>(value);
      }
    }
  }

  SyntheticVolume out{Volume(dims, spec.spacing, std::move(data), {Landmark{spec.landmark_name, target.center}}), std::move(blobs)};
  return out;
}

} // namespace ppac

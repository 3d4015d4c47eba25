#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ppac/geometry.hpp"
#include "ppac/volume.hpp"

namespace ppac {

/// Parameters for the Gaussian-blob volume generator.
///
/// Blob 0 is the designated target: amplitude 1, radii drawn from
/// [target_radius_min, target_radius_max], center on an integer voxel at
/// least `target_margin` voxels from every face. Remaining blobs are
/// distractors with amplitude in [distractor_amplitude_min,
/// distractor_amplitude_max] and radii in [radius_min, radius_max]. The
/// landmark is the target's center.
struct SyntheticSpec {
  Vec3i dims{64, 64, 64};
  Vec3d spacing{1.0, 1.0, 1.0};
  int blobs = 3;
  double radius_min = 3.0;
  double radius_max = 6.0;
  double target_radius_min = 6.0;
  double target_radius_max = 10.0;
  double distractor_amplitude_min = 0.3;
  double distractor_amplitude_max = 0.6;
  /// Minimum center separation between the target and any distractor, in
  /// units of (target radius + distractor radius).
  double separation = 2.0;
  int target_margin = 8;
  double noise_sigma = 0.02;
  std::string landmark_name = "target";
  std::uint64_t seed = 1;
};

/// One generated blob; exposed for tests that need the ground truth layout.
struct Blob {
  Vec3d center;
  Vec3d radii; // per-axis Gaussian sigma
  double amplitude = 1.0;
};

struct SyntheticVolume {
  Volume volume;
  std::vector<Blob> blobs; // blobs[0] is the target
};

/// Throws ConfigError on invalid dims, radius ranges, or amplitudes.
void validate(const SyntheticSpec& spec);

/// Deterministic in spec (including seed).
SyntheticVolume generate_synthetic_detailed(const SyntheticSpec& spec);

inline Volume generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_detailed(spec).volume;
}

} // namespace ppac

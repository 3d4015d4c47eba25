#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppac/geometry.hpp"

namespace ppac {

struct Landmark {
  std::string name;
  Vec3d position; // voxel coordinates

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Dense scalar volume stored x-fastest, then y, then z.
///
/// Immutable after construction. The intensity range is cached so that state
/// extraction can normalize without rescanning the data.
class Volume {
public:
  Volume() = default;

  /// Throws ConfigError if dims are non-positive, the data length does not
  /// match, a value is non-finite, or a landmark lies outside [0, dims-1].
  Volume(Vec3i dims, Vec3d spacing, std::vector<float> data, std::vector<Landmark> landmarks = {});

  const Vec3i& dims() const { return dims_; }
  const Vec3d& spacing() const { return spacing_; }
  std::span<const float> data() const { return data_; }
  const std::vector<Landmark>& landmarks() const { return landmarks_; }

  float min_value() const { return min_; }
  float max_value() const { return max_; }

  std::size_t voxel_count() const { return data_.size(); }

  bool contains(const Vec3i& q) const {
    return q.x >= 0 && q.y >= 0 && q.z >= 0 && q.x < dims_.x && q.y < dims_.y && q.z < dims_.z;
  }

  std::size_t linear_index(const Vec3i& q) const {
    return static_cast<std::size_t>(q.x) +
           static_cast<std::size_t>(dims_.x) * (static_cast<std::size_t>(q.y) + static_cast<std::size_t>(dims_.y) * static_cast<std::size_t>(q.z));
  }

  float at(const Vec3i& q) const { return data_[linear_index(q)]; }

  /// Intensity mapped to [0,1] by the per-volume min-max range; 0 outside the volume.
  float normalized(const Vec3i& q) const;

  /// First landmark; throws ConfigError if the volume has none.
  const Landmark& target() const;

  /// Landmark by name, or nullptr.
  const Landmark* find_landmark(const std::string& name) const;

  friend bool operator==(const Volume& a, const Volume& b);

private:
  Vec3i dims_{};
  Vec3d spacing_{1.0, 1.0, 1.0};
  std::vector<float> data_;
  std::vector<Landmark> landmarks_;
  float min_ = 0.0f;
  float max_ = 0.0f;
  float inv_range_ = 0.0f;
};

enum class Plane : std::uint8_t { Axial = 0, Coronal = 1, Sagittal = 2 };

/// Tri-planar observation: three m x m patches centered at `center`.
///
/// Axial is the XY plane at z = center.z (rows along y, columns along x),
/// coronal the XZ plane at y = center.y (rows along z, columns along x),
/// sagittal the YZ plane at x = center.x (rows along z, columns along y).
/// Patch pixel (r, c) samples offset (c - m/2, r - m/2) in the plane's
/// (column, row) axes.
struct State {
  int window = 0;
  Vec3i center{};
  std::vector<float> pixels; // 3 * window * window, plane-major, row-major

  std::span<const float> patch(Plane p) const {
    const auto n = static_cast<std::size_t>(window) * static_cast<std::size_t>(window);
    return std::span<const float>(pixels).subspan(static_cast<std::size_t>(p) * n, n);
  }
  float at(Plane p, int row, int col) const {
    return pixels[(static_cast<std::size_t>(p) * window + row) * window + col];
  }
};

/// Extracts the tri-planar state at q. Out-of-volume samples are 0; in-volume
/// samples are min-max normalized to [0,1]. Total for every q and window >= 1.
State extract_state(const Volume& v, const Vec3i& q, int window);

/// Same as extract_state but writes into a caller-owned buffer of
/// 3 * window * window floats.
void extract_state_into(const Volume& v, const Vec3i& q, int window, std::span<float> out);

} // namespace ppac

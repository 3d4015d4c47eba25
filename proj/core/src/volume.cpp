#include "ppac/volume.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <string>

#include "ppac/error.hpp"

namespace ppac {

Volume::Volume(Vec3i dims, Vec3d spacing, std::vector<float> data, std::vector<Landmark> landmarks)
    : dims_(dims), spacing_(spacing), data_(std::move(data)), landmarks_(std::move(landmarks)) {
  if (dims_.x <= 0 || dims_.y <= 0 || dims_.z <= 0) throw ConfigError("dims: every extent must be positive");
  const auto expected = static_cast<std::size_t>(dims_.x) * dims_.y * dims_.z;
  if (data_.size() != expected) {
    throw ConfigError("data: expected " + std::to_string(expected) + " values, got " + std::to_string(data_.size()));
  }
  for (int i = 0; i < 3; ++i) {
    if (!std::isfinite(spacing_[i]) || spacing_[i] <= 0.0) throw ConfigError("spacing: every entry must be positive and finite");
  }
  for (const auto& lm : landmarks_) {
    for (int i = 0; i < 3; ++i) {
      const double p = lm.position[i];
      if (!std::isfinite(p) || p <= 0.0 || p >= dims_[i] - 1) {
        throw ConfigError("landmarks." + lm.name + ": position must lie strictly inside the volume");
      }
    }
  }
  min_ = max_ = data_.front();
  for (float value : data_) {
    if (!std::isfinite(value)) throw ConfigError("data: non-finite intensity");
    min_ = std::min(min_, value);
    max_ = std::max(max_, value);
  }
  inv_range_ = max_ > min_ ? 1.0f / (max_ - min_) : 0.0f;
}

float Volume::normalized(const Vec3i& q) const {
  if (!contains(q)) return 0.0f;
  return std::clamp((at(q) - min_) * inv_range_, 0.0f, 1.0f);
}

const Landmark& Volume::target() const {
  if (landmarks_.empty()) throw ConfigError("landmarks: volume has no ground-truth landmark");
  return landmarks_.front();
}

const Landmark* Volume::find_landmark(const std::string& name) const {
  for (const auto& lm : landmarks_) {
    if (lm.name == name) return &lm;
  }
  return nullptr;
}

bool operator==(const Volume& a, const Volume& b) {
  return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.landmarks_ == b.landmarks_ &&
         std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), b.data_.end(),
                    [](float l, float r) { return std::bit_cast<std::uint32_t>(l) == std::bit_cast<std::uint32_t>(r); });
}

void extract_state_into(const Volume& v, const Vec3i& q, int window, std::span<float> out) {
  const int m = window;
  const int half = m / 2;
  const auto plane = static_cast<std::size_t>(m) * m;
  if (m <= 0 || out.size() != 3 * plane) throw ConfigError("window: output buffer does not match 3*m*m");

  float* axial = out.data();
  float* coronal = axial + plane;
  float* sagittal = coronal + plane;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const int dr = r - half;
      const int dc = c - half;
      const std::size_t k = static_cast<std::size_t>(r) * m + c;
      axial[k] = v.normalized({q.x + dc, q.y + dr, q.z});
      coronal[k] = v.normalized({q.x + dc, q.y, q.z + dr});
      sagittal[k] = v.normalized({q.x, q.y + dc, q.z + dr});
    }
  }
}

State extract_state(const Volume& v, const Vec3i& q, int window) {
  if (window <= 0) throw ConfigError("window: must be positive");
  State s;
  s.window = window;
  s.center = q;
  s.pixels.resize(3 * static_cast<std::size_t>(window) * window);
  extract_state_into(v, q, window, s.pixels);
  return s;
}

} // namespace ppac

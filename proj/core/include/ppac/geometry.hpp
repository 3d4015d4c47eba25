#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace ppac {

enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};

constexpr int index_of(Axis a) { return static_cast<int>(a); }

constexpr std::string_view axis_name(Axis a) {
  switch (a) {
  case Axis::X: return "x";
  case Axis::Y: return "y";
  case Axis::Z: return "z";
  }
  return "?";
}

/// Integer voxel position.
struct Vec3i {
  int x = 0;
  int y = 0;
  int z = 0;

  constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr int& operator[](Axis a) { return (*this)[index_of(a)]; }
  constexpr int operator[](Axis a) const { return (*this)[index_of(a)]; }

  friend constexpr bool operator==(const Vec3i&, const Vec3i&) = default;
  friend constexpr Vec3i operator+(Vec3i a, const Vec3i& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3i operator-(Vec3i a, const Vec3i& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
};

/// Real-valued position, in voxel units unless stated otherwise.
struct Vec3d {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3d() = default;
  constexpr Vec3d(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  constexpr explicit Vec3d(const Vec3i& v) : x(v.x), y(v.y), z(v.z) {}

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr bool operator==(const Vec3d&, const Vec3d&) = default;
  friend constexpr Vec3d operator+(Vec3d a, const Vec3d& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3d operator-(Vec3d a, const Vec3d& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3d operator*(Vec3d a, double s) { return {a.x * s, a.y * s, a.z * s}; }
};

inline double norm(const Vec3d& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(const Vec3d& a, const Vec3d& b) { return norm(a - b); }

/// Euclidean distance scaled per axis by voxel spacing.
inline double distance_mm(const Vec3d& a, const Vec3d& b, const Vec3d& spacing) {
  const Vec3d d = a - b;
  return norm({d.x * spacing.x, d.y * spacing.y, d.z * spacing.z});
}

} // namespace ppac

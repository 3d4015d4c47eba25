#include "ppac/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppac/error.hpp"

namespace ppac {
namespace {

constexpr std::array<std::string_view, 6> kTokens{"x+", "x-", "y+", "y-", "z+", "z-"};

double squared_distance(const Vec3i& q, const Vec3d& p) {
  const double dx = p.x - q.x;
  const double dy = p.y - q.y;
  const double dz = p.z - q.z;
  return dx * dx + dy * dy + dz * dz;
}

void check_pair(const std::array<double, 2>& pair, Axis axis) {
  if (!(pair[0] >= 0.0 && pair[1] >= 0.0) || std::abs(pair[0] + pair[1] - 1.0) > 1e-6) {
    throw ContractViolation("merge_policies: partial policy for axis " + std::string(axis_name(axis)) +
                            " is not a distribution over two actions");
  }
}

} // namespace

std::string_view action_token(Action a) { return kTokens[static_cast<std::size_t>(index_of(a))]; }

std::optional<Action> parse_action(std::string_view token) {
  const auto it = std::find(kTokens.begin(), kTokens.end(), token);
  if (it == kTokens.end()) return std::nullopt;
  return static_cast<Action>(it - kTokens.begin());
}

Vec3i transition(const Vec3i& q, Action a, int eta, const Vec3i& dims) {
  if (eta < 1) throw ContractViolation("transition: step length must be at least 1");
  Vec3i next = q;
  const int axis = index_of(axis_of(a));
  next[axis] = std::clamp(q[axis] + sign_of(a) * eta, 0, dims[axis] - 1);
  return next;
}

int reward(const Vec3i& q, const Vec3i& q_next, const Vec3d& target) {
  // Comparing squared distances gives the same sign without the square roots.
  const double before = squared_distance(q, target);
  const double after = squared_distance(q_next, target);
  return (before > after) - (before < after);
}

Vec3i reconstruct_action(Action ax, Action ay, Action az, int eta) {
  if (axis_of(ax) != Axis::X || axis_of(ay) != Axis::Y || axis_of(az) != Axis::Z) {
    throw ContractViolation("reconstruct_action: expected one partial action per axis in x, y, z order");
  }
  return reconstruct_action(sign_of(ax) * eta, sign_of(ay) * eta, sign_of(az) * eta);
}

std::array<double, 6> merge_policies(const std::array<double, 2>& px, const std::array<double, 2>& py,
                                     const std::array<double, 2>& pz) {
  check_pair(px, Axis::X);
  check_pair(py, Axis::Y);
  check_pair(pz, Axis::Z);
  constexpr double third = 1.0 / 3.0;
  return {px[0] * third, px[1] * third, py[0] * third, py[1] * third, pz[0] * third, pz[1] * third};
}

} // namespace ppac

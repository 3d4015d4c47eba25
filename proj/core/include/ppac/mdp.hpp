#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "ppac/geometry.hpp"

namespace ppac {

/// The six unit moves. The enumerator value is the index into six-way
/// policy/Q outputs: 2 * axis + (negative ? 1 : 0).
enum class Action : std::uint8_t { XPlus = 0, XMinus = 1, YPlus = 2, YMinus = 3, ZPlus = 4, ZMinus = 5 };

inline constexpr std::array<Action, 6> kActions{Action::XPlus, Action::XMinus, Action::YPlus,
                                                 Action::YMinus, Action::ZPlus, Action::ZMinus};

constexpr int index_of(Action a) { return static_cast<int>(a); }
constexpr Axis axis_of(Action a) { return static_cast<Axis>(index_of(a) / 2); }
constexpr int sign_of(Action a) { return index_of(a) % 2 == 0 ? +1 : -1; }

/// Index of `a` inside its partial space: 0 for i+, 1 for i-.
constexpr int partial_index(Action a) { return index_of(a) % 2; }

constexpr Action make_action(Axis axis, int partial) { return static_cast<Action>(2 * index_of(axis) + partial); }

/// Projection of the action space onto one axis: {i+, i-}.
struct PartialActionSpace {
  Axis axis;

  constexpr std::array<Action, 2> members() const { return {make_action(axis, 0), make_action(axis, 1)}; }
  constexpr bool contains(Action a) const { return axis_of(a) == axis; }
};

constexpr PartialActionSpace partial_space(Axis axis) { return {axis}; }

/// Trace token: "x+", "x-", ..., "z-".
std::string_view action_token(Action a);
std::optional<Action> parse_action(std::string_view token);

/// One observed move (q, a, q') with its reward. States are re-extracted
/// from `volume_id` and the positions when needed.
struct Transition {
  int volume_id = 0;
  Vec3i q{};
  Action action = Action::XPlus;
  Vec3i q_next{};
  int reward = 0;

  Axis axis() const { return axis_of(action); }
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Moves q by +-eta along the action's axis and clamps every coordinate to
/// [0, dims_i - 1]. Throws ContractViolation if eta < 1.
Vec3i transition(const Vec3i& q, Action a, int eta, const Vec3i& dims);

/// sign(|p - q| - |p - q'|): +1 if the move strictly approaches the target,
/// -1 if it strictly recedes, 0 otherwise (including clamped wall pushes).
int reward(const Vec3i& q, const Vec3i& q_next, const Vec3d& target);

/// Composite displacement sum_i a_i * e_i from one signed step per axis.
constexpr Vec3i reconstruct_action(int ax, int ay, int az) { return {ax, ay, az}; }

/// Same, from three partial actions of length eta.
Vec3i reconstruct_action(Action ax, Action ay, Action az, int eta);

/// Concatenates the three partial distributions (each over {i+, i-}) and
/// scales by 1/3, giving a distribution over the six actions in enum order.
/// Throws ContractViolation if a pair has a negative entry or does not sum
/// to 1 within 1e-6.
std::array<double, 6> merge_policies(const std::array<double, 2>& px, const std::array<double, 2>& py,
                                     const std::array<double, 2>& pz);

} // namespace ppac

#pragma once

#include "ppac/network.hpp"

namespace ppac {

/// TD(0): target = r + gamma * V(s'), error = target - V(s).
constexpr TdPair td_quantities(double reward, double v_next, double v_curr, double gamma) {
  const double target = reward + gamma * v_next;
  return {target, target - v_curr};
}

} // namespace ppac

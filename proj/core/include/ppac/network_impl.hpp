#pragma once

// Template definitions for network.hpp; include that header instead.

#include <algorithm>
#include <cmath>
#include <string>

#include "ppac/error.hpp"

namespace ppac {

template <class T>
T log_softmax_at(std::span<const T> logits, int index) {
  const T peak = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (T z : logits) sum += std::exp(z - peak);
  return logits[static_cast<std::size_t>(index)] - peak - std::log(sum);
}

template <class T, class TdFn>
LossValues accumulate_actor_critic(const Network<T>& net, SampleScratch<T>& scratch, std::span<const float> states,
                                   int policy_head, int value_head, std::span<const int> actions, TdFn&& td, T scale,
                                   std::span<T> grads) {
  net.forward_trunk(states, scratch.trunk);
  const int batch = scratch.trunk.batch;
  if (actions.size() != static_cast<std::size_t>(batch)) throw ContractViolation("accumulate_actor_critic: one action per state");
  net.begin_backward(scratch.backward, batch);
  LossValues loss;
  for (int i = 0; i < batch; ++i) {
    const auto sample = static_cast<std::size_t>(i);
    const std::string where = "batch sample " + std::to_string(i) + ": ";
    T v = 0;
    if (value_head >= 0) {
      net.forward_head(value_head, scratch.trunk, scratch.value, i);
      v = scratch.value.output[0];
      if (!std::isfinite(v)) throw NumericalError(where + "value head produced a non-finite output");
    }
    const TdPair pair = td(sample, static_cast<double>(v));
    const T tau = static_cast<T>(pair.target);
    const T eps = static_cast<T>(pair.error);

    if (policy_head >= 0) {
      net.forward_head(policy_head, scratch.trunk, scratch.policy, i);
      const std::span<const T> logits(scratch.policy.output);
      for (T z : logits) {
        if (!std::isfinite(z)) throw NumericalError(where + "policy head produced a non-finite output");
      }
      const int action = actions[sample];
      loss.actor += static_cast<double>(-eps * log_softmax_at(logits, action));
      const auto probs = softmax(logits);
      scratch.d_output.assign(probs.size(), T(0));
      for (std::size_t j = 0; j < probs.size(); ++j) {
        const T indicator = static_cast<int>(j) == action ? T(1) : T(0);
        scratch.d_output[j] = scale * eps * (probs[j] - indicator);
      }
      net.backward_head(policy_head, scratch.trunk, scratch.policy, scratch.d_output, grads, scratch.backward, i);
    }
    if (value_head >= 0) {
      const T residual = tau - v;
      loss.critic += static_cast<double>(residual * residual);
      scratch.d_output.assign(1, scale * T(2) * (v - tau));
      net.backward_head(value_head, scratch.trunk, scratch.value, scratch.d_output, grads, scratch.backward, i);
    }
  }
  net.backward_trunk(scratch.trunk, grads, scratch.backward);
  return loss;
}

template <class T>
LossValues accumulate_q(const Network<T>& net, SampleScratch<T>& scratch, std::span<const float> states, int q_head,
                        std::span<const int> actions, std::span<const T> targets, T scale, std::span<T> grads) {
  net.forward_trunk(states, scratch.trunk);
  const int batch = scratch.trunk.batch;
  if (actions.size() != static_cast<std::size_t>(batch) || targets.size() != actions.size()) {
    throw ContractViolation("accumulate_q: one action and target per state");
  }
  net.begin_backward(scratch.backward, batch);
  LossValues loss;
  for (int i = 0; i < batch; ++i) {
    const auto sample = static_cast<std::size_t>(i);
    net.forward_head(q_head, scratch.trunk, scratch.value, i);
    const auto a = static_cast<std::size_t>(actions[sample]);
    const T q = scratch.value.output[a];
    if (!std::isfinite(q)) throw NumericalError("batch sample " + std::to_string(i) + ": Q head produced a non-finite output");
    const T residual = targets[sample] - q;
    loss.critic += static_cast<double>(residual * residual);
    scratch.d_output.assign(scratch.value.output.size(), T(0));
    scratch.d_output[a] = scale * T(2) * (q - targets[sample]);
    net.backward_head(q_head, scratch.trunk, scratch.value, scratch.d_output, grads, scratch.backward, i);
  }
  net.backward_trunk(scratch.trunk, grads, scratch.backward);
  return loss;
}

} // namespace ppac

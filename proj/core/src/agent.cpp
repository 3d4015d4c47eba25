#include "ppac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "ppac/error.hpp"
#include "ppac/td.hpp"

namespace ppac {
namespace {

const Volume& volume_for(std::span<const Volume> volumes, const Transition& t) {
  if (t.volume_id < 0 || static_cast<std::size_t>(t.volume_id) >= volumes.size()) {
    throw ContractViolation("update: transition refers to unknown volume " + std::to_string(t.volume_id));
  }
  return volumes[static_cast<std::size_t>(t.volume_id)];
}

std::size_t argmax(const std::vector<double>& scores) {
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

Action to_action(const Agent& agent, Axis axis, std::size_t index) {
  if (agent.layout() == HeadLayout::Partial) return make_action(axis, static_cast<int>(index));
  return static_cast<Action>(index);
}

} // namespace

// ---------------------------------------------------------------------------

NetworkAgent::NetworkAgent(Network<float> net) : net_(std::move(net)) {}

NetworkAgent::NetworkAgent(const NetworkConfig& config, std::uint64_t seed) : net_(config, seed) {}

std::vector<double> NetworkAgent::action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore,
                                                Rng& rng) const {
  std::vector<float> state(static_cast<std::size_t>(net_.arch().input_size()));
  extract_state_into(v, q, window(), state);
  TrunkCache<float> trunk;
  HeadCache<float> head;
  const bool dropout = explore.keep_prob < 1.0;
  net_.forward_trunk(state, trunk, explore.keep_prob, dropout ? &rng : nullptr);
  const int h = layout() == HeadLayout::Partial ? net_.arch().policy_head(axis) : 0;
  net_.forward_head(h, trunk, head);
  for (float z : head.output) {
    if (!std::isfinite(z)) throw NumericalError("action_scores: non-finite head output");
  }
  if (layout() == HeadLayout::QLearning) return {head.output.begin(), head.output.end()};
  const auto probs = softmax(std::span<const float>(head.output));
  return {probs.begin(), probs.end()};
}

LossValues NetworkAgent::update(std::span<const Volume> volumes, std::span<const Transition> batch,
                                std::optional<Axis> axis, double gamma, double alpha) {
  if (batch.empty()) throw ContractViolation("update: empty batch");
  const auto& arch = net_.arch();
  const HeadLayout mode = layout();
  int policy_head = 0;
  int value_head = 1;
  if (mode == HeadLayout::Partial) {
    if (!axis) throw ContractViolation("update: partial agents need the batch's axis");
    policy_head = arch.policy_head(*axis);
    value_head = arch.value_head(*axis);
  }

  grads_.assign(arch.parameter_count(), 0.0f);
  const auto input = static_cast<std::size_t>(arch.input_size());
  const std::size_t n = batch.size();
  state_.resize(input * n);
  next_state_.resize(input * n);
  actions_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& t = batch[i];
    if (mode == HeadLayout::Partial && t.axis() != *axis) {
      throw ContractViolation("update: " + std::string(axis_name(t.axis())) + "-axis transition in a " +
                              std::string(axis_name(*axis)) + "-axis batch");
    }
    const Volume& vol = volume_for(volumes, t);
    extract_state_into(vol, t.q, window(), std::span<float>(state_).subspan(i * input, input));
    extract_state_into(vol, t.q_next, window(), std::span<float>(next_state_).subspan(i * input, input));
    actions_[i] = mode == HeadLayout::Partial ? partial_index(t.action) : index_of(t.action);
  }

  // Bootstrap values from one trunk pass over the next states.
  net_.forward_trunk(next_state_, scratch_.trunk);
  next_value_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int row = static_cast<int>(i);
    const std::string where = "batch sample " + std::to_string(i) + ": ";
    if (mode == HeadLayout::QLearning) {
      net_.forward_head(0, scratch_.trunk, scratch_.value, row);
      const float best = *std::max_element(scratch_.value.output.begin(), scratch_.value.output.end());
      if (!std::isfinite(best)) throw NumericalError(where + "Q head produced a non-finite output");
      next_value_[i] = static_cast<float>(batch[i].reward + gamma * best);
    } else {
      net_.forward_head(value_head, scratch_.trunk, scratch_.value, row);
      next_value_[i] = scratch_.value.output[0];
      if (!std::isfinite(next_value_[i])) throw NumericalError(where + "value head produced a non-finite output");
    }
  }

  const float scale = 1.0f / static_cast<float>(n);
  LossValues total;
  if (mode == HeadLayout::QLearning) {
    total = accumulate_q(net_, scratch_, state_, 0, actions_, std::span<const float>(next_value_), scale,
                         std::span<float>(grads_));
  } else {
    total = accumulate_actor_critic(
        net_, scratch_, state_, policy_head, value_head, actions_,
        [&](std::size_t i, double v_curr) { return td_quantities(batch[i].reward, next_value_[i], v_curr, gamma); },
        scale, std::span<float>(grads_));
  }
  apply_update(net_, std::span<const float>(grads_), static_cast<float>(alpha));
  total.actor /= static_cast<double>(batch.size());
  total.critic /= static_cast<double>(batch.size());
  return total;
}

// ---------------------------------------------------------------------------

TabularAgent::TabularAgent(Vec3i dims) : dims_(dims) {
  if (dims.x < 1 || dims.y < 1 || dims.z < 1) throw ConfigError("dims: every extent must be positive");
  const auto cells = static_cast<std::size_t>(dims.x) * dims.y * dims.z;
  logits_.assign(cells, {});
  values_.assign(cells, {});
}

std::size_t TabularAgent::cell(const Vec3i& q) const {
  if (q.x < 0 || q.y < 0 || q.z < 0 || q.x >= dims_.x || q.y >= dims_.y || q.z >= dims_.z) {
    throw ContractViolation("tabular agent: position outside the table");
  }
  return static_cast<std::size_t>(q.x) + static_cast<std::size_t>(dims_.x) * (q.y + static_cast<std::size_t>(dims_.y) * q.z);
}

std::array<double, 2> TabularAgent::policy(const Vec3i& q, Axis axis) const {
  const auto& l = logits_[cell(q)];
  const auto i = static_cast<std::size_t>(2 * index_of(axis));
  const double peak = std::max(l[i], l[i + 1]);
  const double e0 = std::exp(l[i] - peak);
  const double e1 = std::exp(l[i + 1] - peak);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

double TabularAgent::value(const Vec3i& q, Axis axis) const {
  return values_[cell(q)][static_cast<std::size_t>(index_of(axis))];
}

void TabularAgent::set_logits(const Vec3i& q, Axis axis, std::array<double, 2> logits) {
  auto& l = logits_[cell(q)];
  l[static_cast<std::size_t>(2 * index_of(axis))] = logits[0];
  l[static_cast<std::size_t>(2 * index_of(axis)) + 1] = logits[1];
}

std::vector<double> TabularAgent::action_scores(const Volume&, const Vec3i& q, Axis axis, const Exploration&, Rng&) const {
  const auto p = policy(q, axis);
  return {p[0], p[1]};
}

LossValues TabularAgent::update(std::span<const Volume>, std::span<const Transition> batch, std::optional<Axis> axis,
                                double gamma, double alpha) {
  if (batch.empty()) throw ContractViolation("update: empty batch");
  if (!axis) throw ContractViolation("update: partial agents need the batch's axis");
  const auto ax = static_cast<std::size_t>(index_of(*axis));
  const double scale = 1.0 / static_cast<double>(batch.size());

  struct CellGrad {
    double d_plus = 0.0, d_minus = 0.0, d_value = 0.0;
  };
  // Gradients are taken at the pre-update table, then applied together.
  std::unordered_map<std::size_t, CellGrad> grads;
  LossValues total;
  for (const Transition& t : batch) {
    if (t.axis() != *axis) throw ContractViolation("update: transition axis does not match the batch axis");
    const std::size_t c = cell(t.q);
    const double v_curr = values_[c][ax];
    const double v_next = values_[cell(t.q_next)][ax];
    const TdPair td = td_quantities(t.reward, v_next, v_curr, gamma);
    const auto p = policy(t.q, *axis);
    const int a = partial_index(t.action);
    total.actor += -td.error * std::log(std::max(p[static_cast<std::size_t>(a)], 1e-300));
    total.critic += (td.target - v_curr) * (td.target - v_curr);

    auto& g = grads[c];
    g.d_plus += scale * td.error * (p[0] - (a == 0 ? 1.0 : 0.0));
    g.d_minus += scale * td.error * (p[1] - (a == 1 ? 1.0 : 0.0));
    g.d_value += scale * 2.0 * (v_curr - td.target);
  }
  for (const auto& [c, g] : grads) {
    if (!policy_frozen_) {
      logits_[c][2 * ax] -= alpha * g.d_plus;
      logits_[c][2 * ax + 1] -= alpha * g.d_minus;
    }
    values_[c][ax] -= alpha * g.d_value;
  }
  total.actor *= scale;
  total.critic *= scale;
  return total;
}

// ---------------------------------------------------------------------------

std::vector<double> OracleAgent::action_scores(const Volume&, const Vec3i& q, Axis axis, const Exploration&, Rng&) const {
  const int i = index_of(axis);
  if (target_[i] > q[i]) return {1.0, 0.0};
  return {0.0, 1.0};
}

LossValues OracleAgent::update(std::span<const Volume>, std::span<const Transition>, std::optional<Axis>, double, double) {
  throw ContractViolation("update: the oracle agent is not trainable");
}

// ---------------------------------------------------------------------------

Action sample_action(const Agent& agent, const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore, Rng& rng) {
  const std::size_t choices = agent.layout() == HeadLayout::Partial ? 2 : 6;
  if (explore.epsilon > 0.0 && uniform01(rng) < explore.epsilon) {
    return to_action(agent, axis, static_cast<std::size_t>(rng() % choices));
  }
  const auto scores = agent.action_scores(v, q, axis, explore, rng);
  if (agent.layout() == HeadLayout::QLearning) return to_action(agent, axis, argmax(scores));
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    cumulative += scores[i];
    if (u < cumulative) return to_action(agent, axis, i);
  }
  return to_action(agent, axis, scores.size() - 1);
}

Action greedy_action(const Agent& agent, const Volume& v, const Vec3i& q, Axis axis) {
  thread_local Rng unused(0);
  return to_action(agent, axis, argmax(agent.action_scores(v, q, axis, Exploration{}, unused)));
}

} // namespace ppac

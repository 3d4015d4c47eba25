#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "ppac/geometry.hpp"
#include "ppac/mdp.hpp"
#include "ppac/network.hpp"
#include "ppac/rng.hpp"
#include "ppac/volume.hpp"

namespace ppac {

/// Exploration knobs in effect while sampling actions.
struct Exploration {
  double keep_prob = 1.0; // dropout keep probability on the trunk output; 1 disables dropout
  double epsilon = 0.0;   // probability of a uniformly random action
};

/// A policy/value approximator the learner and the localizer can drive.
///
/// Partial agents answer per-axis two-way distributions; flat agents answer
/// six-way distributions (ActorCritic) or six Q-values (QLearning).
class Agent {
public:
  virtual ~Agent() = default;

  virtual HeadLayout layout() const = 0;

  /// Partial: (p(i+), p(i-)) for `axis`. ActorCritic: six probabilities.
  /// QLearning: six Q-values. `axis` is ignored by flat agents. `rng` is
  /// only consumed when exploration requires it.
  virtual std::vector<double> action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore,
                                            Rng& rng) const = 0;

  /// One SGD step of size alpha on a minibatch. For partial agents every
  /// transition must lie in `axis`'s partial space and only that axis's
  /// policy/value parameters (plus any shared trunk) change.
  virtual LossValues update(std::span<const Volume> volumes, std::span<const Transition> batch, std::optional<Axis> axis,
                            double gamma, double alpha) = 0;
};

/// Agent backed by the convolutional network.
class NetworkAgent final : public Agent {
public:
  explicit NetworkAgent(Network<float> net);
  NetworkAgent(const NetworkConfig& config, std::uint64_t seed);

  HeadLayout layout() const override { return net_.arch().config().layout; }
  int window() const { return net_.arch().config().window; }

  std::vector<double> action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore,
                                    Rng& rng) const override;

  /// Throws NumericalError if a forward pass produces non-finite values.
  LossValues update(std::span<const Volume> volumes, std::span<const Transition> batch, std::optional<Axis> axis,
                    double gamma, double alpha) override;

  const Network<float>& network() const { return net_; }
  Network<float>& network() { return net_; }

private:
  Network<float> net_;
  SampleScratch<float> scratch_;
  std::vector<float> grads_;
  std::vector<float> state_;
  std::vector<float> next_state_;
  std::vector<int> actions_;
  std::vector<float> next_value_; // V(s') or the Q target
};

/// Lookup-table partial actor-critic over the positions of one volume
/// shape: per position, three logit pairs and three state values. Used to
/// validate the learning rule without function approximation error.
class TabularAgent final : public Agent {
public:
  explicit TabularAgent(Vec3i dims);

  HeadLayout layout() const override { return HeadLayout::Partial; }

  std::vector<double> action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore,
                                    Rng& rng) const override;
  LossValues update(std::span<const Volume> volumes, std::span<const Transition> batch, std::optional<Axis> axis,
                    double gamma, double alpha) override;

  /// When frozen, updates only touch the state values.
  void freeze_policy(bool frozen) { policy_frozen_ = frozen; }

  std::array<double, 2> policy(const Vec3i& q, Axis axis) const;
  double value(const Vec3i& q, Axis axis) const;

  /// Overwrites one logit pair; for building fixed policies in tests.
  void set_logits(const Vec3i& q, Axis axis, std::array<double, 2> logits);

private:
  std::size_t cell(const Vec3i& q) const;

  Vec3i dims_;
  std::vector<std::array<double, 6>> logits_; // [axis * 2 + partial]
  std::vector<std::array<double, 3>> values_;
  bool policy_frozen_ = false;
};

/// Analytic sign policy: i+ with probability 1 iff target_i > q_i. Not
/// trainable.
class OracleAgent final : public Agent {
public:
  explicit OracleAgent(Vec3d target) : target_(target) {}

  HeadLayout layout() const override { return HeadLayout::Partial; }
  std::vector<double> action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore,
                                    Rng& rng) const override;
  /// Throws ContractViolation.
  LossValues update(std::span<const Volume> volumes, std::span<const Transition> batch, std::optional<Axis> axis,
                    double gamma, double alpha) override;

private:
  Vec3d target_;
};

/// Draws an action from an agent's scores under the exploration settings:
/// partial and actor-critic sample from the distribution, Q-learning picks
/// the argmax; any of them is replaced by a uniform action with probability
/// epsilon.
Action sample_action(const Agent& agent, const Volume& v, const Vec3i& q, Axis axis, const Exploration& explore, Rng& rng);

/// Deterministic choice: argmax of the scores, first index on ties.
Action greedy_action(const Agent& agent, const Volume& v, const Vec3i& q, Axis axis);

} // namespace ppac

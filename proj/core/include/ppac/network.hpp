#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ppac/geometry.hpp"
#include "ppac/rng.hpp"

namespace ppac {

/// Which heads sit on top of the shared trunk.
///   Partial:     policy_x, policy_y, policy_z (2-way softmax), value_x, value_y, value_z (scalar)
///   ActorCritic: policy (6-way softmax), value (scalar)
///   QLearning:   q (6 linear outputs)
enum class HeadLayout : std::uint8_t { Partial, ActorCritic, QLearning };

enum class HeadKind : std::uint8_t { Policy, Value, Q };

std::string_view layout_name(HeadLayout layout);
std::optional<HeadLayout> parse_layout(std::string_view name);

struct NetworkConfig {
  int window = 16;
  std::vector<int> channels{16, 32, 32, 64}; // one conv+ReLU+2x2 max-pool stage per entry
  int kernel = 3;                            // odd; 'same' zero padding, stride 1
  int hidden = 128;
  HeadLayout layout = HeadLayout::Partial;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct HeadSpec {
  std::string name;
  HeadKind kind;
  int outputs;
};

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct StageShape {
  int in_channels, out_channels;
  int height, width;         // conv input/output (same padding)
  int pooled_h, pooled_w;    // after 2x2 max-pool, floor
};

/// Shape bookkeeping for one NetworkConfig. Parameters live in one flat
/// array: trunk tensors first, then each head's [w1, b1, w2, b2] contiguously,
/// so that any head (or the trunk) is one contiguous range.
class Architecture {
public:
  /// Throws ConfigError if the window collapses to nothing before the last
  /// stage, or any size is non-positive.
  explicit Architecture(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  const std::vector<StageShape>& stages() const { return stages_; }
  const std::vector<HeadSpec>& heads() const { return heads_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }

  int flat_size() const { return flat_; }
  int input_size() const { return 3 * config_.window * config_.window; }
  std::size_t parameter_count() const { return count_; }

  /// [begin, end) of the trunk's parameters.
  std::pair<std::size_t, std::size_t> trunk_range() const { return {0, trunk_end_}; }
  /// [begin, end) of one head's parameters.
  std::pair<std::size_t, std::size_t> head_range(int head) const;

  /// Index of the named head; throws ConfigError if absent.
  int head_index(std::string_view name) const;
  int policy_head(Axis axis) const; // Partial layout only
  int value_head(Axis axis) const;  // Partial layout only

  // Offsets of individual tensors.
  std::size_t conv_weight(int stage) const { return tensors_[2 * static_cast<std::size_t>(stage)].offset; }
  std::size_t conv_bias(int stage) const { return tensors_[2 * static_cast<std::size_t>(stage) + 1].offset; }
  const TensorInfo& head_tensor(int head, int which) const; // which: 0=w1 1=b1 2=w2 3=b2

private:
  NetworkConfig config_;
  std::vector<StageShape> stages_;
  std::vector<HeadSpec> heads_;
  std::vector<TensorInfo> tensors_;
  int flat_ = 0;
  std::size_t trunk_end_ = 0;
  std::size_t count_ = 0;
};

/// Activations kept from one trunk pass.
template <class T>
struct TrunkCache {
  int batch = 1;
  std::vector<std::vector<T>> padded_input; // per stage: B x C_in x (H+2p) x (W+2p)
  std::vector<std::vector<T>> columns;      // per stage: (C_in*k*k) x (B*H*W) im2col of padded_input
  std::vector<std::vector<T>> activation;   // per stage: post-ReLU C_out x B x H x W
  std::vector<std::vector<int>> pool_index; // per stage: argmax into activation for each pooled cell
  std::vector<T> flat;                      // B x F trunk output after optional dropout
  std::vector<T> dropout_scale;             // empty when dropout is off
};

template <class T>
struct HeadCache {
  std::vector<T> hidden; // post-ReLU
  std::vector<T> output; // logits (policy), value, or Q values
};

/// Scratch buffers for backward passes, reused across samples.
template <class T>
struct BackwardWorkspace {
  std::vector<T> d_flat;
  std::vector<T> d_hidden;
  std::vector<std::vector<T>> d_activation;
  std::vector<std::vector<T>> d_padded;
  std::vector<T> d_columns;
};

/// Test hook: deliberately wrong backward rules for mutation tests.
enum class BackwardFault : std::uint8_t { None, IgnoreReluMask };

/// Shared convolutional trunk plus heads, with parameters in a flat array.
template <class T>
class Network {
public:
  /// Weights uniform in +-sqrt(6 / fan_in) for ReLU layers and
  /// +-0.1 * sqrt(3 / fan_in) for output layers; biases zero.
  Network(const NetworkConfig& config, std::uint64_t seed);
  Network(Architecture arch, std::vector<T> params);

  const Architecture& arch() const { return arch_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }

  /// Runs the trunk on B stacked 3*m*m states (B >= 1). When keep_prob < 1
  /// and rng is given, inverted dropout is applied to the flat output. Throws
  /// ConfigError when the size is not a positive multiple of the state size.
  void forward_trunk(std::span<const float> states, TrunkCache<T>& cache, double keep_prob = 1.0,
                     Rng* rng = nullptr) const;

  /// Evaluates one head on row `row` of a trunk output. Policy heads leave
  /// logits in cache.output; use softmax() for probabilities.
  void forward_head(int head, const TrunkCache<T>& trunk, HeadCache<T>& cache, int row = 0) const;

  /// Accumulates d(loss)/d(params) for one head given d(loss)/d(head output),
  /// and adds the head's contribution to row `row` of ws.d_flat (which must
  /// be sized and zeroed by the caller, see begin_backward).
  void backward_head(int head, const TrunkCache<T>& trunk, const HeadCache<T>& cache, std::span<const T> d_output,
                     std::span<T> grads, BackwardWorkspace<T>& ws, int row = 0) const;

  /// Resets ws.d_flat to zeros for `batch` trunk outputs.
  void begin_backward(BackwardWorkspace<T>& ws, int batch = 1) const;

  /// Back-propagates ws.d_flat through the trunk, accumulating into grads.
  void backward_trunk(const TrunkCache<T>& trunk, std::span<T> grads, BackwardWorkspace<T>& ws) const;

  void set_backward_fault(BackwardFault fault) { fault_ = fault; }

  template <class U>
  Network<U> cast() const {
    return Network<U>(arch_, std::vector<U>(params_.begin(), params_.end()));
  }

private:
  Architecture arch_;
  std::vector<T> params_;
  BackwardFault fault_ = BackwardFault::None;
};

/// Numerically stable softmax.
template <class T>
std::vector<T> softmax(std::span<const T> logits);

// ---------------------------------------------------------------------------
// Losses

/// One actor-critic sample: state, chosen action within the policy head,
/// TD-target tau and TD-error eps (a constant coefficient, no gradient flows
/// through it).
template <class T>
struct ActorCriticSample {
  std::span<const float> state;
  int action = 0;
  T td_target = 0;
  T td_error = 0;
};

/// One Q-learning sample with its precomputed target r + gamma * max Q(s').
template <class T>
struct QSample {
  std::span<const float> state;
  int action = 0;
  T target = 0;
};

struct LossValues {
  double actor = 0.0;  // mean of -eps * log pi(a|s)
  double critic = 0.0; // mean of (tau - V(s))^2, or (target - Q(s,a))^2
};

/// Gradients of the mean batch loss -eps*log pi(a|s) + (tau - V(s))^2 with
/// respect to every parameter. Either head may be -1 to drop its term.
/// Entries for other heads are exactly zero. `grads` is overwritten.
/// Throws ContractViolation on an empty batch and NumericalError (naming the
/// sample index) on non-finite outputs.
template <class T>
LossValues loss_and_gradients(const Network<T>& net, std::span<const ActorCriticSample<T>> batch, int policy_head,
                              int value_head, std::span<T> grads);

/// Mean batch loss only (no gradients); used by finite-difference checks.
template <class T>
LossValues evaluate_loss(const Network<T>& net, std::span<const ActorCriticSample<T>> batch, int policy_head,
                         int value_head);

/// Gradients of mean (target - Q(s,a))^2 for a Q head. `grads` is overwritten.
template <class T>
LossValues q_loss_and_gradients(const Network<T>& net, std::span<const QSample<T>> batch, int q_head, std::span<T> grads);

template <class T>
LossValues evaluate_q_loss(const Network<T>& net, std::span<const QSample<T>> batch, int q_head);

/// Plain SGD: params -= alpha * grads. Descending the combined loss moves
/// actor parameters up the advantage-weighted log-likelihood and critic
/// parameters down the squared TD residual.
template <class T>
void apply_update(Network<T>& net, std::span<const T> grads, T alpha);

/// Batch kernels shared by the losses and the learner. One trunk pass covers
/// the B stacked `states`. For each sample i, `td(i, V(s_i))` gives (tau, eps)
/// (V is 0 when value_head is -1). `scale` times each sample's loss gradient is
/// accumulated into grads. Returned losses are sums over the batch.
template <class T>
struct SampleScratch {
  TrunkCache<T> trunk;
  HeadCache<T> policy;
  HeadCache<T> value;
  BackwardWorkspace<T> backward;
  std::vector<T> d_output;
};

struct TdPair {
  double target;
  double error;
};

template <class T, class TdFn>
LossValues accumulate_actor_critic(const Network<T>& net, SampleScratch<T>& scratch, std::span<const float> states,
                                   int policy_head, int value_head, std::span<const int> actions, TdFn&& td, T scale,
                                   std::span<T> grads);

/// Q counterpart: squared error between targets[i] and Q(s_i, actions[i]).
template <class T>
LossValues accumulate_q(const Network<T>& net, SampleScratch<T>& scratch, std::span<const float> states, int q_head,
                        std::span<const int> actions, std::span<const T> targets, T scale, std::span<T> grads);

// ---------------------------------------------------------------------------
// Gradient checking

enum class CheckedHead : std::uint8_t { Policy, Value, Q };

struct GradientCheckOptions {
  NetworkConfig config{8, {4, 8}, 3, 16, HeadLayout::Partial};
  int batch = 3;
  double step = 1e-4;
  BackwardFault fault = BackwardFault::None;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;
  std::size_t parameters_checked = 0;
};

/// Compares analytic gradients of the head's loss with central finite
/// differences in double precision over every parameter. The layout is forced
/// to QLearning for CheckedHead::Q and to Partial otherwise. Relative error is
/// |a - n| / max(|a| + |n|, 1e-6). Deterministic in seed.
GradientCheckResult gradient_check(CheckedHead head, std::uint64_t seed, const GradientCheckOptions& options = {});

std::optional<CheckedHead> parse_checked_head(std::string_view name);

} // namespace ppac

#include "ppac/network_impl.hpp"

#include "ppac/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Core>

#include "ppac/error.hpp"
#include "ppac/rng.hpp"

namespace ppac {
namespace {

std::vector<HeadSpec> heads_for(HeadLayout layout) {
  switch (layout) {
  case HeadLayout::Partial:
    return {{"policy_x", HeadKind::Policy, 2}, {"policy_y", HeadKind::Policy, 2}, {"policy_z", HeadKind::Policy, 2},
            {"value_x", HeadKind::Value, 1},   {"value_y", HeadKind::Value, 1},   {"value_z", HeadKind::Value, 1}};
  case HeadLayout::ActorCritic:
    return {{"policy", HeadKind::Policy, 6}, {"value", HeadKind::Value, 1}};
  case HeadLayout::QLearning:
    return {{"q", HeadKind::Q, 6}};
  }
  throw ConfigError("layout: unknown head layout");
}

std::size_t product(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

template <class T>
using Mat = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using ConstMat = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Rows are (channel, ky, kx), columns are (sample, y, x).
template <class T>
void im2col(const std::vector<T>& padded, const StageShape& st, int k, int batch, std::vector<T>& cols) {
  const int pad = k / 2;
  const int hp = st.height + 2 * pad;
  const int wp = st.width + 2 * pad;
  const std::size_t hw = static_cast<std::size_t>(st.height) * st.width;
  cols.resize(static_cast<std::size_t>(st.in_channels) * k * k * hw * batch);
  T* dst = cols.data();
  for (int c = 0; c < st.in_channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int b = 0; b < batch; ++b) {
          const T* plane = padded.data() + (static_cast<std::size_t>(b) * st.in_channels + c) * hp * wp;
          for (int y = 0; y < st.height; ++y) {
            const T* src = plane + (y + ky) * wp + kx;
            std::copy(src, src + st.width, dst);
            dst += st.width;
          }
        }
      }
    }
  }
}

template <class T>
void col2im(const std::vector<T>& cols, const StageShape& st, int k, int batch, std::vector<T>& padded) {
  const int pad = k / 2;
  const int hp = st.height + 2 * pad;
  const int wp = st.width + 2 * pad;
  const T* src = cols.data();
  for (int c = 0; c < st.in_channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int b = 0; b < batch; ++b) {
          T* plane = padded.data() + (static_cast<std::size_t>(b) * st.in_channels + c) * hp * wp;
          for (int y = 0; y < st.height; ++y) {
            T* dst = plane + (y + ky) * wp + kx;
            for (int x = 0; x < st.width; ++x) dst[x] += src[x];
            src += st.width;
          }
        }
      }
    }
  }
}

template <class Sample>
std::vector<float> stack_states(std::span<const Sample> batch) {
  std::vector<float> states;
  for (const auto& sample : batch) states.insert(states.end(), sample.state.begin(), sample.state.end());
  return states;
}

} // namespace

std::string_view layout_name(HeadLayout layout) {
  switch (layout) {
  case HeadLayout::Partial: return "partial";
  case HeadLayout::ActorCritic: return "actor-critic";
  case HeadLayout::QLearning: return "q-learning";
  }
  return "?";
}

std::optional<HeadLayout> parse_layout(std::string_view name) {
  for (auto layout : {HeadLayout::Partial, HeadLayout::ActorCritic, HeadLayout::QLearning}) {
    if (layout_name(layout) == name) return layout;
  }
  return std::nullopt;
}

Architecture::Architecture(NetworkConfig config) : config_(std::move(config)) {
  if (config_.window < 1) throw ConfigError("window: must be positive");
  if (config_.kernel < 1 || config_.kernel % 2 == 0) throw ConfigError("kernel: must be a positive odd number");
  if (config_.hidden < 1) throw ConfigError("hidden: must be positive");
  if (config_.channels.empty()) throw ConfigError("channels: at least one trunk stage is required");

  auto add = [this](std::string name, std::vector<int> shape) {
    TensorInfo info{std::move(name), std::move(shape), count_, 0};
    info.size = product(info.shape);
    count_ += info.size;
    tensors_.push_back(std::move(info));
  };

  int in_channels = 3;
  int h = config_.window;
  int w = config_.window;
  const int k = config_.kernel;
  for (std::size_t s = 0; s < config_.channels.size(); ++s) {
    const int out_channels = config_.channels[s];
    if (out_channels < 1) throw ConfigError("channels: every stage needs at least one channel");
    StageShape stage{in_channels, out_channels, h, w, h / 2, w / 2};
    if (stage.pooled_h < 1 || stage.pooled_w < 1) {
      throw ConfigError("window: " + std::to_string(config_.window) + " is too small for " +
                        std::to_string(config_.channels.size()) + " pooling stages");
    }
    stages_.push_back(stage);
    add("trunk.conv" + std::to_string(s) + ".weight", {out_channels, in_channels, k, k});
    add("trunk.conv" + std::to_string(s) + ".bias", {out_channels});
    in_channels = out_channels;
    h = stage.pooled_h;
    w = stage.pooled_w;
  }
  flat_ = in_channels * h * w;
  trunk_end_ = count_;

  heads_ = heads_for(config_.layout);
  for (const auto& head : heads_) {
    add(head.name + ".w1", {config_.hidden, flat_});
    add(head.name + ".b1", {config_.hidden});
    add(head.name + ".w2", {head.outputs, config_.hidden});
    add(head.name + ".b2", {head.outputs});
  }
}

const TensorInfo& Architecture::head_tensor(int head, int which) const {
  return tensors_[2 * stages_.size() + 4 * static_cast<std::size_t>(head) + static_cast<std::size_t>(which)];
}

std::pair<std::size_t, std::size_t> Architecture::head_range(int head) const {
  if (head < 0 || head >= static_cast<int>(heads_.size())) throw ConfigError("head: index out of range");
  const auto& first = head_tensor(head, 0);
  const auto& last = head_tensor(head, 3);
  return {first.offset, last.offset + last.size};
}

int Architecture::head_index(std::string_view name) const {
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    if (heads_[i].name == name) return static_cast<int>(i);
  }
  throw ConfigError("head: no head named " + std::string(name) + " in layout " + std::string(layout_name(config_.layout)));
}

int Architecture::policy_head(Axis axis) const {
  if (config_.layout != HeadLayout::Partial) throw ConfigError("layout: partial heads requested from a non-partial network");
  return index_of(axis);
}

int Architecture::value_head(Axis axis) const {
  if (config_.layout != HeadLayout::Partial) throw ConfigError("layout: partial heads requested from a non-partial network");
  return 3 + index_of(axis);
}

// ---------------------------------------------------------------------------

template <class T>
Network<T>::Network(const NetworkConfig& config, std::uint64_t seed) : arch_(config) {
  params_.assign(arch_.parameter_count(), T(0));
  Rng rng(derive_seed(seed, 0x1e17));
  auto fill = [&](const TensorInfo& t, double bound) {
    for (std::size_t i = 0; i < t.size; ++i) params_[t.offset + i] = static_cast<T>(bound * (2.0 * uniform01(rng) - 1.0));
  };
  const int k = arch_.config().kernel;
  for (std::size_t s = 0; s < arch_.stages().size(); ++s) {
    const double fan_in = static_cast<double>(arch_.stages()[s].in_channels) * k * k;
    fill(arch_.tensors()[2 * s], std::sqrt(6.0 / fan_in));
  }
  for (std::size_t h = 0; h < arch_.heads().size(); ++h) {
    const int head = static_cast<int>(h);
    fill(arch_.head_tensor(head, 0), std::sqrt(6.0 / arch_.flat_size()));
    fill(arch_.head_tensor(head, 2), 0.1 * std::sqrt(3.0 / arch_.config().hidden));
  }
}

template <class T>
Network<T>::Network(Architecture arch, std::vector<T> params) : arch_(std::move(arch)), params_(std::move(params)) {
  if (params_.size() != arch_.parameter_count()) {
    throw ConfigError("params: expected " + std::to_string(arch_.parameter_count()) + " values, got " +
                      std::to_string(params_.size()));
  }
}

template <class T>
void Network<T>::forward_trunk(std::span<const float> states, TrunkCache<T>& cache, double keep_prob, Rng* rng) const {
  const auto input = static_cast<std::size_t>(arch_.input_size());
  if (states.empty() || states.size() % input != 0) {
    throw ConfigError("window: state has " + std::to_string(states.size()) + " values but the trunk expects a multiple of " +
                      std::to_string(input));
  }
  const int batch = static_cast<int>(states.size() / input);
  const auto& stages = arch_.stages();
  const int k = arch_.config().kernel;
  const int pad = k / 2;
  const std::size_t n = stages.size();
  const auto flat = static_cast<std::size_t>(arch_.flat_size());
  cache.batch = batch;
  cache.padded_input.resize(n);
  cache.columns.resize(n);
  cache.activation.resize(n);
  cache.pool_index.resize(n);
  cache.flat.resize(flat * batch);

  for (std::size_t s = 0; s < n; ++s) {
    const StageShape& st = stages[s];
    const int hp = st.height + 2 * pad;
    const int wp = st.width + 2 * pad;
    auto& pin = cache.padded_input[s];
    if (s == 0) {
      pin.assign(static_cast<std::size_t>(batch) * st.in_channels * hp * wp, T(0));
      for (int b = 0; b < batch; ++b) {
        for (int c = 0; c < st.in_channels; ++c) {
          for (int y = 0; y < st.height; ++y) {
            const float* src = states.data() + b * input + (static_cast<std::size_t>(c) * st.height + y) * st.width;
            T* dst = pin.data() + ((static_cast<std::size_t>(b) * st.in_channels + c) * hp + y + pad) * wp + pad;
            for (int x = 0; x < st.width; ++x) dst[x] = static_cast<T>(src[x]);
          }
        }
      }
    }

    const std::size_t hw = static_cast<std::size_t>(st.height) * st.width;
    const std::size_t bhw = hw * batch;
    auto& act = cache.activation[s];
    act.resize(static_cast<std::size_t>(st.out_channels) * bhw);
    auto& cols = cache.columns[s];
    im2col(pin, st, k, batch, cols);
    const Eigen::Index kk = static_cast<Eigen::Index>(st.in_channels) * k * k;
    ConstMat<T> weight(params_.data() + arch_.conv_weight(static_cast<int>(s)), st.out_channels, kk);
    ConstMat<T> columns(cols.data(), kk, static_cast<Eigen::Index>(bhw));
    const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(params_.data() + arch_.conv_bias(static_cast<int>(s)),
                                                                      st.out_channels);
    Mat<T> out(act.data(), st.out_channels, static_cast<Eigen::Index>(bhw));
    out.noalias() = weight * columns;
    out.colwise() += bias;
    out = out.cwiseMax(T(0));

    // 2x2 max-pool into the next stage's padded input, or the flat output.
    const bool last = s + 1 == n;
    const int dest_wp = last ? st.pooled_w : st.pooled_w + 2 * pad;
    const int dest_hp = last ? st.pooled_h : st.pooled_h + 2 * pad;
    const int dest_pad = last ? 0 : pad;
    if (!last) cache.padded_input[s + 1].assign(static_cast<std::size_t>(batch) * st.out_channels * dest_hp * dest_wp, T(0));
    T* dest = last ? cache.flat.data() : cache.padded_input[s + 1].data();
    auto& pidx = cache.pool_index[s];
    pidx.resize(static_cast<std::size_t>(st.out_channels) * batch * st.pooled_h * st.pooled_w);
    for (int c = 0; c < st.out_channels; ++c) {
      for (int b = 0; b < batch; ++b) {
        const std::size_t base = static_cast<std::size_t>(c) * bhw + b * hw;
        T* plane = dest + (static_cast<std::size_t>(b) * st.out_channels + c) * dest_hp * dest_wp;
        for (int y = 0; y < st.pooled_h; ++y) {
          for (int x = 0; x < st.pooled_w; ++x) {
            std::size_t best = base + static_cast<std::size_t>(2 * y) * st.width + 2 * x;
            for (int dy = 0; dy < 2; ++dy) {
              for (int dx = 0; dx < 2; ++dx) {
                const std::size_t idx = base + static_cast<std::size_t>(2 * y + dy) * st.width + 2 * x + dx;
                if (act[idx] > act[best]) best = idx;
              }
            }
            pidx[((static_cast<std::size_t>(c) * batch + b) * st.pooled_h + y) * st.pooled_w + x] = static_cast<int>(best);
            plane[(y + dest_pad) * dest_wp + x + dest_pad] = act[best];
          }
        }
      }
    }
  }

  cache.dropout_scale.clear();
  if (keep_prob < 1.0 && rng != nullptr) {
    cache.dropout_scale.resize(cache.flat.size());
    const T inv = static_cast<T>(1.0 / keep_prob);
    for (std::size_t i = 0; i < cache.flat.size(); ++i) {
      cache.dropout_scale[i] = uniform01(*rng) < keep_prob ? inv : T(0);
      cache.flat[i] *= cache.dropout_scale[i];
    }
  }
}

template <class T>
void Network<T>::forward_head(int head, const TrunkCache<T>& trunk, HeadCache<T>& cache, int row) const {
  const auto& w1 = arch_.head_tensor(head, 0);
  const auto& b1 = arch_.head_tensor(head, 1);
  const auto& w2 = arch_.head_tensor(head, 2);
  const auto& b2 = arch_.head_tensor(head, 3);
  const int hidden = arch_.config().hidden;
  const int flat = arch_.flat_size();
  const int outputs = arch_.heads()[static_cast<std::size_t>(head)].outputs;

  const T* in = trunk.flat.data() + static_cast<std::size_t>(row) * flat;

  cache.hidden.resize(static_cast<std::size_t>(hidden));
  for (int h = 0; h < hidden; ++h) {
    const T* w = params_.data() + w1.offset + static_cast<std::size_t>(h) * flat;
    T acc = params_[b1.offset + static_cast<std::size_t>(h)];
    for (int f = 0; f < flat; ++f) acc += w[f] * in[f];
    cache.hidden[static_cast<std::size_t>(h)] = std::max(acc, T(0));
  }
  cache.output.resize(static_cast<std::size_t>(outputs));
  for (int o = 0; o < outputs; ++o) {
    const T* w = params_.data() + w2.offset + static_cast<std::size_t>(o) * hidden;
    T acc = params_[b2.offset + static_cast<std::size_t>(o)];
    for (int h = 0; h < hidden; ++h) acc += w[h] * cache.hidden[static_cast<std::size_t>(h)];
    cache.output[static_cast<std::size_t>(o)] = acc;
  }
}

template <class T>
void Network<T>::begin_backward(BackwardWorkspace<T>& ws, int batch) const {
  ws.d_flat.assign(static_cast<std::size_t>(arch_.flat_size()) * batch, T(0));
}

template <class T>
void Network<T>::backward_head(int head, const TrunkCache<T>& trunk, const HeadCache<T>& cache,
                               std::span<const T> d_output, std::span<T> grads, BackwardWorkspace<T>& ws,
                               int row) const {
  const auto& w1 = arch_.head_tensor(head, 0);
  const auto& b1 = arch_.head_tensor(head, 1);
  const auto& w2 = arch_.head_tensor(head, 2);
  const auto& b2 = arch_.head_tensor(head, 3);
  const int hidden = arch_.config().hidden;
  const int flat = arch_.flat_size();
  const int outputs = arch_.heads()[static_cast<std::size_t>(head)].outputs;

  const T* in = trunk.flat.data() + static_cast<std::size_t>(row) * flat;
  T* d_in = ws.d_flat.data() + static_cast<std::size_t>(row) * flat;

  ws.d_hidden.assign(static_cast<std::size_t>(hidden), T(0));
  for (int o = 0; o < outputs; ++o) {
    const T d = d_output[static_cast<std::size_t>(o)];
    if (d == T(0)) continue;
    grads[b2.offset + static_cast<std::size_t>(o)] += d;
    T* g_row = grads.data() + w2.offset + static_cast<std::size_t>(o) * hidden;
    const T* w_row = params_.data() + w2.offset + static_cast<std::size_t>(o) * hidden;
    for (int h = 0; h < hidden; ++h) {
      g_row[h] += d * cache.hidden[static_cast<std::size_t>(h)];
      ws.d_hidden[static_cast<std::size_t>(h)] += d * w_row[h];
    }
  }
  for (int h = 0; h < hidden; ++h) {
    T d = ws.d_hidden[static_cast<std::size_t>(h)];
    if (fault_ != BackwardFault::IgnoreReluMask && cache.hidden[static_cast<std::size_t>(h)] <= T(0)) d = T(0);
    if (d == T(0)) continue;
    grads[b1.offset + static_cast<std::size_t>(h)] += d;
    T* g_row = grads.data() + w1.offset + static_cast<std::size_t>(h) * flat;
    const T* w_row = params_.data() + w1.offset + static_cast<std::size_t>(h) * flat;
    for (int f = 0; f < flat; ++f) {
      g_row[f] += d * in[f];
      d_in[f] += d * w_row[f];
    }
  }
}

template <class T>
void Network<T>::backward_trunk(const TrunkCache<T>& trunk, std::span<T> grads, BackwardWorkspace<T>& ws) const {
  const auto& stages = arch_.stages();
  const int k = arch_.config().kernel;
  const int pad = k / 2;
  const std::size_t n = stages.size();
  const int batch = trunk.batch;
  const auto flat = static_cast<std::size_t>(arch_.flat_size());
  if (ws.d_flat.size() != flat * batch) throw ContractViolation("backward_trunk: workspace sized for another batch");
  ws.d_activation.resize(n);
  ws.d_padded.resize(n);

  if (!trunk.dropout_scale.empty()) {
    for (std::size_t i = 0; i < ws.d_flat.size(); ++i) ws.d_flat[i] *= trunk.dropout_scale[i];
  }

  for (std::size_t si = n; si-- > 0;) {
    const StageShape& st = stages[si];
    const int hp = st.height + 2 * pad;
    const int wp = st.width + 2 * pad;
    const auto& act = trunk.activation[si];
    auto& d_act = ws.d_activation[si];
    d_act.assign(act.size(), T(0));

    // Un-pool: route each pooled gradient to its argmax.
    const auto& pidx = trunk.pool_index[si];
    const bool last = si + 1 == n;
    const int up_wp = last ? st.pooled_w : st.pooled_w + 2 * pad;
    const int up_hp = last ? st.pooled_h : st.pooled_h + 2 * pad;
    const int up_pad = last ? 0 : pad;
    const T* upstream = last ? ws.d_flat.data() : ws.d_padded[si + 1].data();
    for (int c = 0; c < st.out_channels; ++c) {
      for (int b = 0; b < batch; ++b) {
        const T* plane = upstream + (static_cast<std::size_t>(b) * st.out_channels + c) * up_hp * up_wp;
        for (int y = 0; y < st.pooled_h; ++y) {
          for (int x = 0; x < st.pooled_w; ++x) {
            const std::size_t j = ((static_cast<std::size_t>(c) * batch + b) * st.pooled_h + y) * st.pooled_w + x;
            d_act[static_cast<std::size_t>(pidx[j])] += plane[(y + up_pad) * up_wp + x + up_pad];
          }
        }
      }
    }
    if (fault_ != BackwardFault::IgnoreReluMask) {
      for (std::size_t i = 0; i < d_act.size(); ++i) {
        if (act[i] <= T(0)) d_act[i] = T(0);
      }
    }

    const Eigen::Index kk = static_cast<Eigen::Index>(st.in_channels) * k * k;
    const Eigen::Index bhw = static_cast<Eigen::Index>(st.height) * st.width * batch;
    const std::size_t w_off = arch_.conv_weight(static_cast<int>(si));
    const std::size_t b_off = arch_.conv_bias(static_cast<int>(si));
    ConstMat<T> d_out(d_act.data(), st.out_channels, bhw);
    ConstMat<T> columns(trunk.columns[si].data(), kk, bhw);
    Mat<T> d_weight(grads.data() + w_off, st.out_channels, kk);
    d_weight.noalias() += d_out * columns.transpose();
    // Plain loop: Eigen's vectorized reductions peel by address, which would
    // make the summation order depend on heap alignment.
    for (int c = 0; c < st.out_channels; ++c) {
      const T* row = d_act.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(bhw);
      T sum = 0;
      for (Eigen::Index i = 0; i < bhw; ++i) sum += row[i];
      grads[b_off + static_cast<std::size_t>(c)] += sum;
    }

    if (si > 0) {
      ConstMat<T> weight(params_.data() + w_off, st.out_channels, kk);
      ws.d_columns.resize(static_cast<std::size_t>(kk * bhw));
      Mat<T> d_columns(ws.d_columns.data(), kk, bhw);
      d_columns.noalias() = weight.transpose() * d_out;
      ws.d_padded[si].assign(static_cast<std::size_t>(batch) * st.in_channels * hp * wp, T(0));
      col2im(ws.d_columns, st, k, batch, ws.d_padded[si]);
    }
  }
}

template <class T>
std::vector<T> softmax(std::span<const T> logits) {
  std::vector<T> out(logits.size());
  const T peak = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
  return out;
}

// ---------------------------------------------------------------------------

template <class T>
LossValues loss_and_gradients(const Network<T>& net, std::span<const ActorCriticSample<T>> batch, int policy_head,
                              int value_head, std::span<T> grads) {
  if (batch.empty()) throw ContractViolation("loss_and_gradients: empty batch");
  if (grads.size() != net.params().size()) throw ContractViolation("loss_and_gradients: gradient buffer has the wrong size");
  std::fill(grads.begin(), grads.end(), T(0));
  const auto states = stack_states(batch);
  std::vector<int> actions;
  for (const auto& sample : batch) actions.push_back(sample.action);
  SampleScratch<T> scratch;
  const T scale = T(1) / static_cast<T>(batch.size());
  LossValues total = accumulate_actor_critic(
      net, scratch, states, policy_head, value_head, actions,
      [&](std::size_t i, double) {
        return TdPair{static_cast<double>(batch[i].td_target), static_cast<double>(batch[i].td_error)};
      },
      scale, grads);
  total.actor /= static_cast<double>(batch.size());
  total.critic /= static_cast<double>(batch.size());
  return total;
}

template <class T>
LossValues evaluate_loss(const Network<T>& net, std::span<const ActorCriticSample<T>> batch, int policy_head,
                         int value_head) {
  TrunkCache<T> trunk;
  HeadCache<T> head;
  LossValues total;
  for (const auto& sample : batch) {
    net.forward_trunk(sample.state, trunk);
    if (policy_head >= 0) {
      net.forward_head(policy_head, trunk, head);
      total.actor += static_cast<double>(-sample.td_error * log_softmax_at(std::span<const T>(head.output), sample.action));
    }
    if (value_head >= 0) {
      net.forward_head(value_head, trunk, head);
      const double r = static_cast<double>(sample.td_target - head.output[0]);
      total.critic += r * r;
    }
  }
  total.actor /= static_cast<double>(batch.size());
  total.critic /= static_cast<double>(batch.size());
  return total;
}

template <class T>
LossValues q_loss_and_gradients(const Network<T>& net, std::span<const QSample<T>> batch, int q_head, std::span<T> grads) {
  if (batch.empty()) throw ContractViolation("q_loss_and_gradients: empty batch");
  if (grads.size() != net.params().size()) throw ContractViolation("q_loss_and_gradients: gradient buffer has the wrong size");
  std::fill(grads.begin(), grads.end(), T(0));
  const auto states = stack_states(batch);
  std::vector<int> actions;
  std::vector<T> targets;
  for (const auto& sample : batch) {
    actions.push_back(sample.action);
    targets.push_back(sample.target);
  }
  SampleScratch<T> scratch;
  const T scale = T(1) / static_cast<T>(batch.size());
  LossValues total = accumulate_q(net, scratch, states, q_head, actions, std::span<const T>(targets), scale, grads);
  total.critic /= static_cast<double>(batch.size());
  return total;
}

template <class T>
LossValues evaluate_q_loss(const Network<T>& net, std::span<const QSample<T>> batch, int q_head) {
  TrunkCache<T> trunk;
  HeadCache<T> head;
  LossValues total;
  for (const auto& sample : batch) {
    net.forward_trunk(sample.state, trunk);
    net.forward_head(q_head, trunk, head);
    const double r = static_cast<double>(sample.target - head.output[static_cast<std::size_t>(sample.action)]);
    total.critic += r * r;
  }
  total.critic /= static_cast<double>(batch.size());
  return total;
}

template <class T>
void apply_update(Network<T>& net, std::span<const T> grads, T alpha) {
  auto params = net.params();
  if (grads.size() != params.size()) throw ContractViolation("apply_update: gradient buffer has the wrong size");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= alpha * grads[i];
}

// ---------------------------------------------------------------------------

std::optional<CheckedHead> parse_checked_head(std::string_view name) {
  if (name == "policy") return CheckedHead::Policy;
  if (name == "value") return CheckedHead::Value;
  if (name == "q") return CheckedHead::Q;
  return std::nullopt;
}

GradientCheckResult gradient_check(CheckedHead head, std::uint64_t seed, const GradientCheckOptions& options) {
  NetworkConfig config = options.config;
  config.layout = head == CheckedHead::Q ? HeadLayout::QLearning : HeadLayout::Partial;
  Network<double> net(config, seed);
  net.set_backward_fault(options.fault);
  Rng rng(derive_seed(seed, 0x6c));

  // Non-zero biases so their gradients are exercised at a generic point.
  auto params = net.params();
  for (auto& p : params) {
    if (p == 0.0) p = 0.05 * (2.0 * uniform01(rng) - 1.0);
  }

  const auto input = static_cast<std::size_t>(net.arch().input_size());
  const auto batch_size = static_cast<std::size_t>(std::max(options.batch, 1));
  std::vector<std::vector<float>> states(batch_size, std::vector<float>(input));
  for (auto& s : states) {
    for (auto& v : s) v = static_cast<float>(uniform01(rng));
  }

  std::vector<double> analytic(params.size());
  std::function<double()> loss;
  std::vector<ActorCriticSample<double>> ac;
  std::vector<QSample<double>> qs;
  int policy_head = -1;
  int value_head = -1;

  if (head == CheckedHead::Q) {
    for (const auto& s : states) qs.push_back({s, uniform_int(rng, 0, 5), standard_normal(rng)});
    q_loss_and_gradients<double>(net, qs, 0, analytic);
    loss = [&] { return evaluate_q_loss<double>(net, qs, 0).critic; };
  } else {
    if (head == CheckedHead::Policy) policy_head = net.arch().policy_head(Axis::X);
    else value_head = net.arch().value_head(Axis::X);
    for (const auto& s : states) ac.push_back({s, uniform_int(rng, 0, 1), standard_normal(rng), standard_normal(rng)});
    loss_and_gradients<double>(net, ac, policy_head, value_head, analytic);
    loss = [&] {
      const auto l = evaluate_loss<double>(net, ac, policy_head, value_head);
      return l.actor + l.critic;
    };
  }

  GradientCheckResult result;
  const double h = options.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double plus = loss();
    params[i] = saved - h;
    const double minus = loss();
    params[i] = saved;
    const double numeric = (plus - minus) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_parameter = i;
    }
    ++result.parameters_checked;
  }
  return result;
}

// ---------------------------------------------------------------------------

template class Network<float>;
template class Network<double>;
template std::vector<float> softmax(std::span<const float>);
template std::vector<double> softmax(std::span<const double>);
template LossValues loss_and_gradients(const Network<float>&, std::span<const ActorCriticSample<float>>, int, int, std::span<float>);
template LossValues loss_and_gradients(const Network<double>&, std::span<const ActorCriticSample<double>>, int, int, std::span<double>);
template LossValues evaluate_loss(const Network<float>&, std::span<const ActorCriticSample<float>>, int, int);
template LossValues evaluate_loss(const Network<double>&, std::span<const ActorCriticSample<double>>, int, int);
template LossValues q_loss_and_gradients(const Network<float>&, std::span<const QSample<float>>, int, std::span<float>);
template LossValues q_loss_and_gradients(const Network<double>&, std::span<const QSample<double>>, int, std::span<double>);
template LossValues evaluate_q_loss(const Network<float>&, std::span<const QSample<float>>, int);
template LossValues evaluate_q_loss(const Network<double>&, std::span<const QSample<double>>, int);
template void apply_update(Network<float>&, std::span<const float>, float);
template void apply_update(Network<double>&, std::span<const double>, double);

} // namespace ppac

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ppac/agent.hpp"
#include "ppac/localizer.hpp"
#include "ppac/network.hpp"
#include "ppac/replay.hpp"
#include "ppac/td.hpp"
#include "ppac/volume.hpp"

namespace ppac {

/// Per-epoch exploration, interpolated linearly from `start` (first epoch)
/// to `end` (last epoch).
struct ExplorationSchedule {
  enum class Kind : std::uint8_t { Dropout, EpsilonGreedy };
  Kind kind = Kind::Dropout;
  double start = 0.1; // dropout keep-prob, or epsilon
  double end = 0.7;

  Exploration at(int epoch, int epochs) const;

  static ExplorationSchedule dropout(double start = 0.1, double end = 0.7) { return {Kind::Dropout, start, end}; }
  static ExplorationSchedule epsilon_greedy(double start = 1.0, double end = 0.1) { return {Kind::EpsilonGreedy, start, end}; }
};

struct TrainConfig {
  HeadLayout mode = HeadLayout::Partial;
  double gamma = 0.9;
  double alpha = 1e-4;
  int window = 16;
  int eta = 2;
  int episodes_per_epoch = 40;
  int steps_per_episode = 90; // partial mode runs ceil(steps / 3) step-sequences
  int epochs = 100;
  std::size_t replay_capacity = 100000;
  std::size_t minibatch = 64;
  ExplorationSchedule exploration = ExplorationSchedule::dropout();
  std::uint64_t seed = 1;
  int start_margin = -1; // -1: window / 2

  // Trunk/head shape; window and layout are taken from the fields above.
  std::vector<int> channels{16, 32, 32, 64};
  int kernel = 3;
  int hidden = 128;

  // Periodic validation during train().
  int eval_every = 1;
  int eval_starts = 5;
  int eval_steps = 300;
  int centroid_last = 10;

  NetworkConfig network_config() const { return {window, channels, kernel, hidden, mode}; }
  int margin() const { return start_margin >= 0 ? start_margin : window / 2; }
  LocalizeConfig localize_config() const { return {eval_steps, centroid_last, eta}; }
};

/// Throws ConfigError naming the first invalid field.
void validate(const TrainConfig& config);

/// Runs one exploratory episode from a uniformly drawn start. Partial agents
/// repeat the x, y, z step-sequence, sampling each partial action at the
/// current position and applying it immediately; flat agents take single
/// six-way steps. Every transition is rewarded against the volume's first
/// landmark and pushed into `memories` (indexed by axis for partial agents,
/// a single memory otherwise) when that span is non-empty.
EpisodeTrace collect_episode(const Volume& volume, int volume_id, const Agent& agent, const TrainConfig& config,
                             const Exploration& explore, Rng& rng, std::span<ReplayMemory> memories);

struct EpochStats {
  int epoch = 0;             // 1-based
  double mean_reward = 0.0;  // cumulative reward per episode, averaged over the epoch
  double train_error = 0.0;  // mean distance (mm) of the episodes' final centroids from the target
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  std::size_t updates = 0;
  std::vector<EpisodeTrace> traces;
};

/// Owns the replay memories and random streams for one training run.
class Trainer {
public:
  /// `agent` and `volumes` must outlive the trainer; every volume needs a
  /// landmark.
  Trainer(TrainConfig config, Agent& agent, std::span<const Volume> volumes);

  /// Collects the epoch's episodes (round-robin over volumes), then runs
  /// ceil(pushed / minibatch) minibatch updates per memory, interleaving
  /// the axes. Throws NumericalError with epoch/memory/batch coordinates.
  EpochStats train_epoch();

  int epochs_done() const { return epoch_; }
  std::span<const ReplayMemory> memories() const { return memories_; }
  const TrainConfig& config() const { return config_; }

private:
  TrainConfig config_;
  Agent& agent_;
  std::span<const Volume> volumes_;
  std::vector<ReplayMemory> memories_;
  Rng sample_rng_;
  int epoch_ = 0;
};

struct CurveRow {
  int epoch = 0;
  double mean_reward = 0.0;
  double train_err = 0.0;
  std::optional<double> val_err;    // mean validation error (mm)
  std::optional<double> val_median; // median validation error (mm)
};

/// Writes "epoch,mean_reward,train_err,val_err"; epochs without validation
/// get "nan" in the last column.
void write_curves_header(std::ostream& out);
void write_curve_row(std::ostream& out, const CurveRow& row);

struct TrainResult {
  std::vector<CurveRow> curves;
  Network<float> initial;
  Network<float> best; // lowest validation mean error; the final network when there is no validation set
  Network<float> last;
  int best_epoch = 0;
};

/// Optional on-disk outputs of train(): curves.csv plus checkpoint_init,
/// checkpoint_best and checkpoint_last (".ckpt") in `directory`.
struct TrainOutputs {
  std::filesystem::path directory;
};

/// Trains a fresh network agent in config.mode, evaluating on `validation`
/// every eval_every epochs. `on_epoch` (optional) sees each row as it is
/// produced.
TrainResult train(const TrainConfig& config, std::span<const Volume> training, std::span<const Volume> validation,
                  const TrainOutputs* outputs = nullptr, const std::function<void(const CurveRow&)>& on_epoch = {});

} // namespace ppac

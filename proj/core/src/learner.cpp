#include "ppac/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>

#include "ppac/checkpoint.hpp"
#include "ppac/error.hpp"

namespace ppac {
namespace {

constexpr std::uint64_t kEpisodeStream = 0xe9;
constexpr std::uint64_t kSampleStream = 0x5a;
constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kValidationStream = 0xa1;

int partial_steps(int steps) { return 3 * ((steps + 2) / 3); }

} // namespace

Exploration ExplorationSchedule::at(int epoch, int epochs) const {
  const double frac = epochs > 1 ? std::clamp(static_cast<double>(epoch) / (epochs - 1), 0.0, 1.0) : 0.0;
  const double value = start + (end - start) * frac;
  if (kind == Kind::Dropout) return {value, 0.0};
  return {1.0, value};
}

void validate(const TrainConfig& c) {
  if (!(c.gamma >= 0.0 && c.gamma < 1.0)) throw ConfigError("gamma: must lie in [0, 1)");
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha: must be finite and non-negative");
  if (c.window < 1) throw ConfigError("window: must be positive");
  if (c.eta < 1) throw ConfigError("eta: must be at least 1");
  if (c.episodes_per_epoch < 1) throw ConfigError("episodes_per_epoch: must be positive");
  if (c.steps_per_episode < 1) throw ConfigError("steps_per_episode: must be positive");
  if (c.epochs < 0) throw ConfigError("epochs: must be non-negative");
  if (c.replay_capacity < 1) throw ConfigError("replay_capacity: must be positive");
  if (c.minibatch < 1) throw ConfigError("minibatch: must be positive");
  const auto& e = c.exploration;
  if (e.kind == ExplorationSchedule::Kind::Dropout) {
    if (!(e.start > 0.0 && e.start <= 1.0 && e.end > 0.0 && e.end <= 1.0)) {
      throw ConfigError("exploration: dropout keep probabilities must lie in (0, 1]");
    }
  } else if (!(e.start >= 0.0 && e.start <= 1.0 && e.end >= 0.0 && e.end <= 1.0)) {
    throw ConfigError("exploration: epsilon must lie in [0, 1]");
  }
  if (c.eval_every < 1) throw ConfigError("eval_every: must be positive");
  if (c.eval_starts < 1) throw ConfigError("eval_starts: must be positive");
  if (c.eval_steps < 1) throw ConfigError("eval_steps: must be positive");
  if (c.centroid_last < 1) throw ConfigError("centroid_last: must be positive");
  Architecture check(c.network_config());
}

EpisodeTrace collect_episode(const Volume& volume, int volume_id, const Agent& agent, const TrainConfig& config,
                             const Exploration& explore, Rng& rng, std::span<ReplayMemory> memories) {
  const bool partial = agent.layout() == HeadLayout::Partial;
  if (!memories.empty() && memories.size() != (partial ? 3u : 1u)) {
    throw ContractViolation("collect_episode: expected " + std::to_string(partial ? 3 : 1) + " replay memories");
  }
  const Vec3d target = volume.target().position;
  const int steps = partial ? partial_steps(config.steps_per_episode) : config.steps_per_episode;

  EpisodeTrace trace;
  trace.volume_id = volume_id;
  trace.start = sample_start(volume.dims(), config.margin(), rng);
  trace.steps.reserve(static_cast<std::size_t>(steps));

  Vec3i q = trace.start;
  for (int t = 0; t < steps; ++t) {
    const Axis axis = kAxes[static_cast<std::size_t>(t % 3)];
    const Action a = sample_action(agent, volume, q, axis, explore, rng);
    const Vec3i next = transition(q, a, config.eta, volume.dims());
    const int r = reward(q, next, target);
    if (!memories.empty()) {
      memories[partial ? static_cast<std::size_t>(index_of(axis_of(a))) : 0].push({volume_id, q, a, next, r});
    }
    trace.steps.push_back({next, a, r});
    trace.cumulative_reward += r;
    q = next;
  }
  return trace;
}

Trainer::Trainer(TrainConfig config, Agent& agent, std::span<const Volume> volumes)
    : config_(std::move(config)), agent_(agent), volumes_(volumes), sample_rng_(derive_seed(config_.seed, kSampleStream)) {
  validate(config_);
  if (agent_.layout() != config_.mode) throw ConfigError("mode: agent layout does not match the configured mode");
  if (volumes_.empty()) throw ConfigError("volumes: at least one training volume is required");
  for (const auto& v : volumes_) {
    if (v.landmarks().empty()) throw ConfigError("volumes: every training volume needs a landmark");
  }
  if (config_.mode == HeadLayout::Partial) {
    for (Axis a : kAxes) memories_.emplace_back(config_.replay_capacity, a);
  } else {
    memories_.emplace_back(config_.replay_capacity);
  }
}

EpochStats Trainer::train_epoch() {
  const int e = epoch_;
  const Exploration explore = config_.exploration.at(e, config_.epochs);
  EpochStats stats;
  stats.epoch = e + 1;

  std::vector<std::size_t> pushed(memories_.size(), 0);
  const auto episodes = static_cast<std::size_t>(config_.episodes_per_epoch);
  for (std::size_t k = 0; k < episodes; ++k) {
    const std::size_t serial = static_cast<std::size_t>(e) * episodes + k;
    const std::size_t vid = serial % volumes_.size();
    Rng rng(derive_seed(config_.seed, kEpisodeStream, serial));
    EpisodeTrace trace =
        collect_episode(volumes_[vid], static_cast<int>(vid), agent_, config_, explore, rng, memories_);
    for (const auto& step : trace.steps) {
      ++pushed[memories_.size() == 3 ? static_cast<std::size_t>(index_of(axis_of(step.action))) : 0];
    }
    const Volume& v = volumes_[vid];
    stats.mean_reward += trace.cumulative_reward;
    stats.train_error += distance_mm(trace.centroid(config_.centroid_last), v.target().position, v.spacing());
    stats.traces.push_back(std::move(trace));
  }
  stats.mean_reward /= static_cast<double>(episodes);
  stats.train_error /= static_cast<double>(episodes);

  std::vector<std::size_t> remaining(memories_.size());
  for (std::size_t m = 0; m < memories_.size(); ++m) remaining[m] = (pushed[m] + config_.minibatch - 1) / config_.minibatch;
  std::vector<std::size_t> done(memories_.size(), 0);
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t m = 0; m < memories_.size(); ++m) {
      if (remaining[m] == 0) continue;
      any = true;
      const auto batch = memories_[m].sample(config_.minibatch, sample_rng_);
      try {
        const auto loss = agent_.update(volumes_, batch, memories_[m].axis(), config_.gamma, config_.alpha);
        stats.actor_loss += loss.actor;
        stats.critic_loss += loss.critic;
      } catch (const NumericalError& err) {
        const std::string memory = memories_[m].axis() ? std::string(axis_name(*memories_[m].axis())) : std::string("all");
        throw NumericalError("epoch " + std::to_string(stats.epoch) + ", memory " + memory + ", batch " +
                             std::to_string(done[m]) + ": " + err.what());
      }
      --remaining[m];
      ++done[m];
      ++stats.updates;
    }
  }
  if (stats.updates > 0) {
    stats.actor_loss /= static_cast<double>(stats.updates);
    stats.critic_loss /= static_cast<double>(stats.updates);
  }
  ++epoch_;
  return stats;
}

void write_curves_header(std::ostream& out) { out << "epoch,mean_reward,train_err,val_err\n"; }

void write_curve_row(std::ostream& out, const CurveRow& row) {
  out << row.epoch << ',' << row.mean_reward << ',' << row.train_err << ',';
  if (row.val_err) out << *row.val_err;
  else out << "nan";
  out << '\n';
}

TrainResult train(const TrainConfig& config, std::span<const Volume> training, std::span<const Volume> validation,
                  const TrainOutputs* outputs, const std::function<void(const CurveRow&)>& on_epoch) {
  validate(config);
  NetworkAgent agent(config.network_config(), derive_seed(config.seed, kInitStream));
  TrainResult result{{}, agent.network(), agent.network(), agent.network(), 0};

  std::ofstream curves;
  auto path = [&](const char* name) { return outputs->directory / name; };
  if (outputs != nullptr) {
    std::filesystem::create_directories(outputs->directory);
    curves.open(path("curves.csv"), std::ios::trunc);
    if (!curves) throw IoError("curves: cannot open " + path("curves.csv").string());
    curves.precision(10);
    write_curves_header(curves);
    curves.flush();
    save_checkpoint(path("checkpoint_init.ckpt"), result.initial, 0, config.seed);
  }

  Trainer trainer(config, agent, training);
  EvalConfig eval;
  eval.localize = config.localize_config();
  eval.starts = config.eval_starts;
  eval.start_margin = config.margin();
  eval.seed = derive_seed(config.seed, kValidationStream);

  double best_error = std::numeric_limits<double>::infinity();
  for (int e = 1; e <= config.epochs; ++e) {
    const EpochStats stats = trainer.train_epoch();
    CurveRow row{e, stats.mean_reward, stats.train_error, std::nullopt, std::nullopt};
    if (!validation.empty() && (e % config.eval_every == 0 || e == config.epochs)) {
      const auto report = evaluate(validation, agent, eval);
      row.val_err = report.summary.mean_mm;
      row.val_median = report.summary.median_mm;
      if (report.summary.mean_mm < best_error) {
        best_error = report.summary.mean_mm;
        result.best = agent.network();
        result.best_epoch = e;
        if (outputs != nullptr) save_checkpoint(path("checkpoint_best.ckpt"), result.best, e, config.seed);
      }
    }
    result.curves.push_back(row);
    if (outputs != nullptr) {
      write_curve_row(curves, row);
      curves.flush();
    }
    if (on_epoch) on_epoch(row);
  }

  result.last = agent.network();
  if (validation.empty() || config.epochs == 0) {
    result.best = result.last;
    result.best_epoch = config.epochs;
  }
  if (outputs != nullptr) {
    save_checkpoint(path("checkpoint_last.ckpt"), result.last, config.epochs, config.seed);
    if (validation.empty() || config.epochs == 0) save_checkpoint(path("checkpoint_best.ckpt"), result.best, result.best_epoch, config.seed);
  }
  return result;
}

} // namespace ppac

#include "ppac/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "ppac/checkpoint.hpp"
#include "ppac/error.hpp"
#include "ppac/localizer.hpp"
#include "ppac/network.hpp"
#include "ppac/run_dir.hpp"
#include "ppac/volume_io.hpp"

namespace ppac::cli {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGenStream = 0x6e;
constexpr std::uint64_t kTraceStartStream = 0x7a;

void common(CLI::App* cmd) {
  cmd->option_defaults()->always_capture_default();
  cmd->footer("Options may also come from --config FILE.json, keyed by long option name; flags win.");
}

// Effective options as JSON; also the input of the run-directory hash.
std::string effective_config(const CLI::App& cmd) { return cmd.config_to_str(true, false); }

fs::path open_run(const CLI::App& cmd) {
  const std::string cfg = effective_config(cmd);
  const fs::path dir = make_run_dir(cmd.get_name(), cfg);
  std::ofstream(dir / "config.json") << cfg;
  std::cout << "run_dir " << dir.string() << '\n';
  return dir;
}

std::ofstream create(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("output: cannot open " + p.string());
  return out;
}

struct LoadedSet {
  std::vector<Volume> volumes;
  std::vector<std::string> names;
};

// A directory written by `gen` (manifest.json order), or any directory of
// .vol files in name order.
LoadedSet load_dir(const std::string& dir, const std::string& field) {
  if (dir.empty()) throw ConfigError(field + ": a volume directory is required");
  if (!fs::is_directory(dir)) throw ConfigError(field + ": " + dir + " is not a directory");
  std::vector<std::string> files;
  const fs::path manifest = fs::path(dir) / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& v : j.at("volumes")) files.push_back(v.at("file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError("manifest: " + manifest.string() + ": " + e.what());
    }
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".vol") files.push_back(entry.path().filename().string());
    }
    std::sort(files.begin(), files.end());
  }
  if (files.empty()) throw ConfigError(field + ": no volumes in " + dir);
  LoadedSet set;
  for (const auto& f : files) {
    set.volumes.push_back(load_volume(fs::path(dir) / f));
    set.names.push_back(f);
  }
  return set;
}

// Sign policy toward whichever volume it is asked about.
class LandmarkOracle final : public Agent {
public:
  explicit LandmarkOracle(std::string landmark) : landmark_(std::move(landmark)) {}
  HeadLayout layout() const override { return HeadLayout::Partial; }
  std::vector<double> action_scores(const Volume& v, const Vec3i& q, Axis axis, const Exploration& e, Rng& rng) const override {
    const Landmark* lm = landmark_.empty() ? &v.target() : v.find_landmark(landmark_);
    if (lm == nullptr) throw ConfigError("landmark: no landmark named " + landmark_);
    return OracleAgent(lm->position).action_scores(v, q, axis, e, rng);
  }
  LossValues update(std::span<const Volume>, std::span<const Transition>, std::optional<Axis>, double, double) override {
    throw ContractViolation("update: the oracle agent is not trainable");
  }

private:
  std::string landmark_;
};

std::unique_ptr<Agent> load_agent(const std::string& checkpoint, bool oracle, const std::string& landmark) {
  if (oracle) {
    if (!checkpoint.empty()) throw ConfigError("oracle: cannot be combined with --checkpoint");
    return std::make_unique<LandmarkOracle>(landmark);
  }
  if (checkpoint.empty()) throw ConfigError("checkpoint: required unless --oracle is given");
  return std::make_unique<NetworkAgent>(load_checkpoint(checkpoint).network);
}

} // namespace

// ---------------------------------------------------------------------------
// gen

CLI::App* add_gen(CLI::App& app, GenOptions& o) {
  auto* cmd = app.add_subcommand("gen", "Write synthetic Gaussian-blob volumes and a landmark manifest");
  common(cmd);
  auto& s = o.spec;
  cmd->add_option("--count", o.count, "Number of volumes")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Base seed; volume i uses a seed derived from (seed, i)");
  cmd->add_option("--dims", o.dims, "Volume extent in voxels (x y z)");
  cmd->add_option("--spacing", o.spacing, "Voxel spacing in mm (x y z)");
  cmd->add_option("--blobs", s.blobs, "Blobs per volume, including the target");
  cmd->add_option("--radius-min", s.radius_min, "Smallest distractor radius (voxels)");
  cmd->add_option("--radius-max", s.radius_max, "Largest distractor radius (voxels)");
  cmd->add_option("--target-radius-min", s.target_radius_min, "Smallest target radius (voxels)");
  cmd->add_option("--target-radius-max", s.target_radius_max, "Largest target radius (voxels)");
  cmd->add_option("--distractor-amplitude-min", s.distractor_amplitude_min, "Lowest distractor peak");
  cmd->add_option("--distractor-amplitude-max", s.distractor_amplitude_max, "Highest distractor peak");
  cmd->add_option("--separation", s.separation, "Target/distractor spacing in summed radii");
  cmd->add_option("--target-margin", s.target_margin, "Minimum distance of the target from every face");
  cmd->add_option("--noise", s.noise_sigma, "Gaussian noise sigma");
  cmd->add_option("--landmark-name", s.landmark_name, "Name of the target landmark");
  return cmd;
}

int run_gen(const CLI::App& cmd, GenOptions& o) {
  o.spec.dims = {o.dims[0], o.dims[1], o.dims[2]};
  o.spec.spacing = {o.spacing[0], o.spacing[1], o.spacing[2]};
  validate(o.spec);
  const fs::path dir = open_run(cmd);

  nlohmann::ordered_json manifest;
  manifest["count"] = o.count;
  manifest["seed"] = o.seed;
  manifest["volumes"] = nlohmann::ordered_json::array();
  for (int i = 0; i < o.count; ++i) {
    SyntheticSpec spec = o.spec;
    spec.seed = derive_seed(o.seed, kGenStream, static_cast<std::uint64_t>(i));
    const Volume v = generate_synthetic(spec);
    char name[32];
    std::snprintf(name, sizeof name, "volume_%03d.vol", i);
    save_volume(v, dir / name);
    nlohmann::ordered_json entry;
    entry["file"] = name;
    entry["seed"] = spec.seed;
    for (const auto& lm : v.landmarks()) entry["landmarks"][lm.name] = {lm.position.x, lm.position.y, lm.position.z};
    manifest["volumes"].push_back(entry);
  }
  create(dir / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << o.count << " volumes\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train

CLI::App* add_train(CLI::App& app, TrainOptions& o) {
  auto* cmd = app.add_subcommand("train", "Train an agent; writes curves.csv and checkpoints");
  common(cmd);
  auto& c = o.config;
  cmd->add_option("--train", o.train_dir, "Directory of training volumes")->required();
  cmd->add_option("--val", o.val_dir, "Directory of validation volumes (optional)");
  cmd->add_option("--mode", o.mode, "partial | actor-critic | q-learning")
      ->check(CLI::IsMember({"partial", "actor-critic", "q-learning"}));
  cmd->add_option("--gamma", c.gamma, "Discount factor");
  cmd->add_option("--alpha", c.alpha, "SGD step size");
  cmd->add_option("--window", c.window, "Patch size m");
  cmd->add_option("--eta", c.eta, "Step length in voxels");
  cmd->add_option("--episodes", c.episodes_per_epoch, "Episodes per epoch");
  cmd->add_option("--steps", c.steps_per_episode, "Steps per episode (partial: rounded up to whole x,y,z sequences)");
  cmd->add_option("--epochs", c.epochs, "Training epochs");
  cmd->add_option("--replay-capacity", c.replay_capacity, "Transitions kept per replay memory");
  cmd->add_option("--minibatch", c.minibatch, "Minibatch size");
  cmd->add_option("--explore-start", o.explore_start,
                  "First-epoch exploration: dropout keep-prob (default 0.1) or epsilon for q-learning (default 1.0)");
  cmd->add_option("--explore-end", o.explore_end, "Last-epoch exploration (defaults 0.7 / 0.1)");
  cmd->add_option("--seed", c.seed, "Seed for initialization, episodes, sampling and validation");
  cmd->add_option("--start-margin", c.start_margin, "Start positions keep this distance from faces (-1: window/2)");
  cmd->add_option("--channels", c.channels, "Trunk channels, one conv stage each");
  cmd->add_option("--kernel", c.kernel, "Convolution kernel size (odd)");
  cmd->add_option("--hidden", c.hidden, "Hidden width of every head");
  cmd->add_option("--eval-every", c.eval_every, "Validate every N epochs");
  cmd->add_option("--eval-starts", c.eval_starts, "Validation starts per volume");
  cmd->add_option("--eval-steps", c.eval_steps, "Validation walk length");
  cmd->add_option("--last", c.centroid_last, "Positions averaged for the final estimate");
  return cmd;
}

int run_train(const CLI::App& cmd, TrainOptions& o) {
  auto& c = o.config;
  c.mode = *parse_layout(o.mode);
  c.exploration = c.mode == HeadLayout::QLearning ? ExplorationSchedule::epsilon_greedy() : ExplorationSchedule::dropout();
  if (o.explore_start) c.exploration.start = *o.explore_start;
  if (o.explore_end) c.exploration.end = *o.explore_end;
  validate(c);
  const LoadedSet training = load_dir(o.train_dir, "train");
  const LoadedSet validation = o.val_dir.empty() ? LoadedSet{} : load_dir(o.val_dir, "val");
  const fs::path dir = open_run(cmd);

  const TrainOutputs outputs{dir};
  const auto result = train(c, training.volumes, validation.volumes, &outputs, [](const CurveRow& row) {
    std::cout << "epoch " << row.epoch << " reward " << row.mean_reward << " train_err " << row.train_err;
    if (row.val_err) std::cout << " val_err " << *row.val_err << " val_median " << *row.val_median;
    std::cout << std::endl;
  });
  std::cout << "best_epoch " << result.best_epoch << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// eval

CLI::App* add_eval(CLI::App& app, EvalOptions& o) {
  auto* cmd = app.add_subcommand("eval", "Localize on held-out volumes; writes report.csv and summary.json");
  common(cmd);
  auto& e = o.eval;
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to evaluate");
  cmd->add_flag("--oracle", o.oracle, "Use the analytic sign policy instead of a checkpoint");
  cmd->add_option("--volumes", o.volumes_dir, "Directory of volumes")->required();
  cmd->add_option("--regions", o.regions_dir, "Directory of region masks named like the volumes (optional)");
  cmd->add_option("--landmark", o.landmark, "Landmark to score against (default: each volume's first)");
  cmd->add_option("--starts", e.starts, "Random starts per volume");
  cmd->add_option("--margin", e.start_margin, "Start positions keep this distance from faces");
  cmd->add_option("--steps", e.localize.steps, "Walk length");
  cmd->add_option("--last", e.localize.last, "Positions averaged for the estimate");
  cmd->add_option("--eta", e.localize.eta, "Step length in voxels");
  cmd->add_option("--seed", e.seed, "Seed for start positions");
  cmd->add_option("--workers", e.workers, "Evaluation threads");
  return cmd;
}

int run_eval(const CLI::App& cmd, EvalOptions& o) {
  if (o.eval.starts < 1) throw ConfigError("starts: must be positive");
  if (o.eval.localize.steps < 1) throw ConfigError("steps: must be positive");
  if (o.eval.localize.last < 1) throw ConfigError("last: must be positive");
  if (o.eval.localize.eta < 1) throw ConfigError("eta: must be at least 1");
  const LoadedSet set = load_dir(o.volumes_dir, "volumes");
  std::vector<Volume> masks;
  masks.reserve(set.volumes.size());
  std::vector<EvalCase> cases;
  int missing = 0;
  for (std::size_t i = 0; i < set.volumes.size(); ++i) {
    const Volume& v = set.volumes[i];
    EvalCase ec{&v, std::nullopt, nullptr};
    if (!o.regions_dir.empty() && fs::exists(fs::path(o.regions_dir) / set.names[i])) {
      masks.push_back(load_volume(fs::path(o.regions_dir) / set.names[i]));
      if (!(masks.back().dims() == v.dims())) throw ConfigError("regions: " + set.names[i] + " has different dims");
      ec.region = &masks.back();
    }
    if (!o.landmark.empty()) {
      if (const Landmark* lm = v.find_landmark(o.landmark)) {
        ec.point = *lm;
      } else if (ec.region == nullptr) {
        ++missing; // no ground truth for this volume
        continue;
      }
    }
    cases.push_back(ec);
  }
  const auto agent = load_agent(o.checkpoint, o.oracle, o.landmark);
  const fs::path dir = open_run(cmd);

  EvalReport report = evaluate(cases, *agent, o.eval);
  report.summary.skipped += missing;
  auto csv = create(dir / "report.csv");
  csv.precision(10);
  write_report_csv(csv, report);
  auto json = create(dir / "summary.json");
  write_summary_json(json, report.summary);
  write_summary_json(std::cout, report.summary);
  return 0;
}

// ---------------------------------------------------------------------------
// trace

CLI::App* add_trace(CLI::App& app, TraceOptions& o) {
  auto* cmd = app.add_subcommand("trace", "Record one greedy walk as trace.csv");
  common(cmd);
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint driving the walk");
  cmd->add_flag("--oracle", o.oracle, "Use the analytic sign policy instead of a checkpoint");
  cmd->add_option("--volume", o.volume, "Volume file")->required();
  cmd->add_option("--landmark", o.landmark, "Landmark used for rewards and error (default: first)");
  cmd->add_option("--start", o.start, "Start position x y z (default: seeded random)")->expected(3);
  cmd->add_option("--steps", o.localize.steps, "Walk length");
  cmd->add_option("--last", o.localize.last, "Positions averaged for the estimate");
  cmd->add_option("--eta", o.localize.eta, "Step length in voxels");
  cmd->add_option("--margin", o.margin, "Random starts keep this distance from faces");
  cmd->add_option("--seed", o.seed, "Seed for the random start");
  return cmd;
}

int run_trace(const CLI::App& cmd, TraceOptions& o) {
  if (o.localize.steps < 1) throw ConfigError("steps: must be positive");
  if (o.localize.last < 1) throw ConfigError("last: must be positive");
  if (o.localize.eta < 1) throw ConfigError("eta: must be at least 1");
  const Volume v = load_volume(o.volume);
  const auto agent = load_agent(o.checkpoint, o.oracle, o.landmark);
  Vec3i start;
  if (o.start.empty()) {
    Rng rng(derive_seed(o.seed, kTraceStartStream));
    start = sample_start(v.dims(), o.margin, rng);
  } else {
    start = {o.start[0], o.start[1], o.start[2]};
    if (!v.contains(start)) throw ConfigError("start: outside the volume");
  }
  std::optional<Vec3d> target;
  if (!o.landmark.empty()) {
    const Landmark* lm = v.find_landmark(o.landmark);
    if (lm == nullptr) throw ConfigError("landmark: no landmark named " + o.landmark);
    target = lm->position;
  } else if (!v.landmarks().empty()) {
    target = v.target().position;
  }
  const fs::path dir = open_run(cmd);

  EpisodeTrace trace;
  const Vec3d est = localize(v, *agent, start, o.localize, &trace, target);
  auto csv = create(dir / "trace.csv");
  write_trace_csv(csv, trace);
  std::cout << "estimate " << est.x << ' ' << est.y << ' ' << est.z << '\n';
  if (target) std::cout << "error_mm " << distance_mm(est, *target, v.spacing()) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

CLI::App* add_gradcheck(CLI::App& app, GradcheckOptions& o) {
  auto* cmd = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients on a tiny network");
  common(cmd);
  cmd->add_option("--head", o.head, "policy | value | q | all")->check(CLI::IsMember({"policy", "value", "q", "all"}));
  cmd->add_option("--seed", o.seed, "Seed for parameters and inputs");
  cmd->add_option("--tolerance", o.tolerance, "Largest accepted relative error");
  return cmd;
}

int run_gradcheck(const GradcheckOptions& o) {
  std::vector<std::string> heads;
  if (o.head == "all") heads = {"policy", "value", "q"};
  else heads = {o.head};
  double worst = 0.0;
  for (const auto& name : heads) {
    const auto r = gradient_check(*parse_checked_head(name), o.seed);
    std::printf("%-6s max_relative_error %.3e (%zu parameters)\n", name.c_str(), r.max_relative_error, r.parameters_checked);
    worst = std::max(worst, r.max_relative_error);
  }
  std::printf("max_relative_error %.3e\n", worst);
  return worst <= o.tolerance ? 0 : 1;
}

} // namespace ppac::cli

// Acceptance suite: one PASS/FAIL line per criterion, with the measured
// values. Criteria can be selected on the command line ("acceptance 1 5 6");
// the default runs all of them. Exit status is non-zero if any selected
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ppac/agent.hpp"
#include "ppac/learner.hpp"
#include "ppac/localizer.hpp"
#include "ppac/mdp.hpp"
#include "ppac/network.hpp"
#include "ppac/replay.hpp"
#include "ppac/rng.hpp"
#include "ppac/synthetic.hpp"

namespace {

using namespace ppac;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Verdict& v) {
  std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Gradient fidelity

Verdict gradient_fidelity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string parts;
  for (auto [head, name] : {std::pair{CheckedHead::Policy, "policy"}, {CheckedHead::Value, "value"}, {CheckedHead::Q, "q"}}) {
    const auto r = gradient_check(head, 0);
    worst = std::max(worst, r.max_relative_error);
    parts += fmt("%s %.2e (%zu params), ", name, r.max_relative_error, r.parameters_checked);
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 60.0, parts + fmt("max %.2e <= 1e-4, %.1fs < 60s", worst, t)};
}

// ---------------------------------------------------------------------------
// 2. Tabular oracle equivalence

Volume blank_volume(Vec3i dims, Vec3d target) {
  return Volume(dims, {1, 1, 1}, std::vector<float>(static_cast<std::size_t>(dims.x) * dims.y * dims.z), {{"t", target}});
}

double sign_agreement(const TabularAgent& agent, const Vec3i& dims, const Vec3d& p) {
  int ok = 0, total = 0;
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        const Vec3i q{x, y, z};
        for (Axis a : kAxes) {
          const int i = index_of(a);
          if (std::abs(p[i] - q[i]) < 1.0) continue;
          const auto pi = agent.policy(q, a);
          ok += (pi[0] > pi[1]) == (p[i] > q[i]) ? 1 : 0;
          ++total;
        }
      }
  return static_cast<double>(ok) / total;
}

Verdict tabular_equivalence() {
  const auto t0 = Clock::now();
  const Vec3i dims{9, 9, 9};
  const Vec3d p{2, 6, 5};
  const std::vector<Volume> vols{blank_volume(dims, p)};
  TabularAgent agent(dims);
  TrainConfig c;
  c.eta = 1;
  c.gamma = 0.9;
  c.alpha = 1.0;
  c.start_margin = 0;
  c.epochs = 200;
  Trainer trainer(c, agent, vols);
  for (int e = 0; e < c.epochs; ++e) trainer.train_epoch();
  const double agree = sign_agreement(agent, dims, p);
  const double t = seconds_since(t0);
  return {agree >= 0.95 && t < 300.0, fmt("agreement %.1f%% >= 95%% after %d epochs, %.1fs < 300s", 100 * agree, c.epochs, t)};
}

// ---------------------------------------------------------------------------
// 3 and 4. Desk-scale localization and convergence speed

struct DeskTask {
  int train_volumes = 40;
  int test_volumes = 10;
  std::uint64_t data_seed = 2024;
  TrainConfig config;
};

DeskTask desk_task() {
  DeskTask task;
  TrainConfig& c = task.config;
  c.window = 16;
  c.eta = 2;
  c.gamma = 0.9;
  c.alpha = 1e-4;
  // Sized so training plus the final evaluation fits in 30 minutes on one core.
  c.epochs = 1500;
  c.eval_starts = 5;
  c.eval_every = 10;
  c.seed = 7;
  return task;
}

struct DeskData {
  std::vector<Volume> train;
  std::vector<Volume> test;
};

DeskData desk_data(const DeskTask& task) {
  DeskData d;
  SyntheticSpec spec;
  for (int i = 0; i < task.train_volumes + task.test_volumes; ++i) {
    spec.seed = derive_seed(task.data_seed, 0x6e, static_cast<std::uint64_t>(i));
    (i < task.train_volumes ? d.train : d.test).push_back(generate_synthetic(spec));
  }
  return d;
}

struct DeskRun {
  TrainResult result;
  double train_seconds = 0.0;
};

DeskRun run_desk(const DeskTask& task, const DeskData& data, HeadLayout mode) {
  TrainConfig c = task.config;
  c.mode = mode;
  const auto t0 = Clock::now();
  auto result = train(c, data.train, data.test, nullptr, [&](const CurveRow& row) {
    std::printf("  [%s] epoch %d reward %.2f train_err %.2f test_mean %.2f test_median %.2f (%.0fs)\n",
                std::string(layout_name(mode)).c_str(), row.epoch, row.mean_reward, row.train_err,
                row.val_err.value_or(NAN), row.val_median.value_or(NAN), seconds_since(t0));
    std::fflush(stdout);
  });
  return {std::move(result), seconds_since(t0)};
}

// First epoch whose held-out median reaches the threshold, or nullopt.
std::optional<int> epochs_to(const std::vector<CurveRow>& curves, double threshold) {
  for (const auto& row : curves) {
    if (row.val_median && *row.val_median <= threshold) return row.epoch;
  }
  return std::nullopt;
}

Verdict desk_localization(const DeskTask& task, const DeskData& data, const DeskRun& partial) {
  const auto t0 = Clock::now();
  NetworkAgent agent(partial.result.last);
  EvalConfig ec;
  ec.localize = task.config.localize_config();
  ec.starts = 5;
  ec.start_margin = task.config.margin();
  ec.seed = derive_seed(task.config.seed, 0x7e);
  const auto summary = evaluate(data.test, agent, ec).summary;
  const double t = partial.train_seconds + seconds_since(t0);
  const bool pass = summary.median_mm <= 6.0 && summary.mean_mm <= 8.0 && t <= 1800.0;
  return {pass, fmt("final network on %d held-out volumes x 5 starts: median %.2f <= 6, mean %.2f <= 8 voxels, "
                    "%.0fs <= 1800s",
                    summary.volumes, summary.median_mm, summary.mean_mm, t)};
}

Verdict convergence_speed(const DeskTask& task, const DeskRun& partial, const DeskRun& single) {
  const auto ep = epochs_to(partial.result.curves, 8.0);
  const auto es = epochs_to(single.result.curves, 8.0);
  const int budget = task.config.epochs;
  auto show = [&](const std::optional<int>& e) { return e ? std::to_string(*e) : "not reached in " + std::to_string(budget); };
  std::string detail = "epochs to median <= 8: partial " + show(ep) + ", actor-critic " + show(es);
  if (!ep) return {false, detail + "; partial never reached the threshold"};
  const double ratio = es ? static_cast<double>(*ep) / *es : static_cast<double>(*ep) / (budget + 1);
  detail += es ? fmt(", ratio %.2f", ratio) : fmt(", ratio < %.2f", ratio);
  return {!es || *ep <= *es, detail};
}

// ---------------------------------------------------------------------------
// 5. Invariant suite

struct Check {
  std::string name;
  std::function<bool()> run;
};

bool reward_codomain() {
  Rng rng(1);
  for (int i = 0; i < 20000; ++i) {
    const Vec3i q{uniform_int(rng, 0, 20), uniform_int(rng, 0, 20), uniform_int(rng, 0, 20)};
    const Vec3i qn = transition(q, kActions[static_cast<std::size_t>(uniform_int(rng, 0, 5))], uniform_int(rng, 1, 3), {21, 21, 21});
    const Vec3d p{20 * uniform01(rng), 20 * uniform01(rng), 20 * uniform01(rng)};
    const int r = reward(q, qn, p);
    if (r != -1 && r != 0 && r != 1) return false;
  }
  return true;
}

bool transition_structure() {
  Rng rng(2);
  const Vec3i dims{15, 12, 9};
  for (int i = 0; i < 20000; ++i) {
    const Vec3i q{uniform_int(rng, 0, dims.x - 1), uniform_int(rng, 0, dims.y - 1), uniform_int(rng, 0, dims.z - 1)};
    const Action a = kActions[static_cast<std::size_t>(uniform_int(rng, 0, 5))];
    const int eta = uniform_int(rng, 1, 3);
    const Vec3i qn = transition(q, a, eta, dims);
    int changed = 0;
    for (int k = 0; k < 3; ++k) changed += qn[k] != q[k] ? 1 : 0;
    if (changed > 1) return false;
    for (int k = 0; k < 3; ++k) {
      if (k != index_of(axis_of(a)) && qn[k] != q[k]) return false;
    }
    // Interior moves are undone by the opposite action.
    const int k = index_of(axis_of(a));
    if (q[k] - eta >= 0 && q[k] + eta <= dims[k] - 1) {
      const Action back = make_action(axis_of(a), 1 - partial_index(a));
      if (transition(qn, back, eta, dims) != q) return false;
    }
  }
  return true;
}

bool partition() {
  std::multiset<int> seen;
  for (Axis axis : kAxes) {
    for (Action a : partial_space(axis).members()) {
      seen.insert(index_of(a));
      for (Axis other : kAxes) {
        if (partial_space(other).contains(a) != (other == axis)) return false;
      }
    }
  }
  return seen == std::multiset<int>{0, 1, 2, 3, 4, 5};
}

bool merged_policy_sums() {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    std::array<std::array<double, 2>, 3> p{};
    for (auto& pair : p) {
      pair[0] = uniform01(rng);
      pair[1] = 1.0 - pair[0];
    }
    const auto m = merge_policies(p[0], p[1], p[2]);
    double s = 0;
    for (double v : m) {
      if (v < 0) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) return false;
  }
  return true;
}

bool replay_fifo_and_uniform() {
  ReplayMemory fifo(4, Axis::Y);
  for (int i = 0; i < 10; ++i) fifo.push({0, {0, i, 0}, Action::YPlus, {0, i + 1, 0}, 1});
  for (std::size_t i = 0; i < 4; ++i) {
    if (fifo.at(i).q.y != static_cast<int>(6 + i)) return false;
  }
  ReplayMemory mem(10);
  for (int i = 0; i < 10; ++i) mem.push({i, {}, Action::XPlus, {}, 0});
  Rng rng(4);
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (const auto& t : mem.sample(n, rng)) ++counts[static_cast<std::size_t>(t.volume_id)];
  const double expect = n / 10.0;
  const double sd = std::sqrt(n * 0.1 * 0.9);
  return std::all_of(counts.begin(), counts.end(), [&](int c) { return std::abs(c - expect) <= 5 * sd; });
}

std::vector<Volume> small_set(int n, int size) {
  std::vector<Volume> out;
  SyntheticSpec spec;
  spec.dims = {size, size, size};
  spec.blobs = 1;
  spec.target_radius_min = 3;
  spec.target_radius_max = 4;
  spec.target_margin = 4;
  for (int i = 0; i < n; ++i) {
    spec.seed = static_cast<std::uint64_t>(500 + i);
    out.push_back(generate_synthetic(spec));
  }
  return out;
}

TrainConfig small_config() {
  TrainConfig c;
  c.window = 8;
  c.channels = {4, 8};
  c.hidden = 16;
  c.episodes_per_epoch = 4;
  c.steps_per_episode = 30;
  c.minibatch = 16;
  c.alpha = 1e-3;
  c.eval_steps = 30;
  c.eval_starts = 2;
  return c;
}

bool step_sequence_periodicity() {
  const auto vols = small_set(1, 20);
  const auto c = small_config();
  NetworkAgent agent(c.network_config(), 9);
  Rng rng(5);
  const auto trace = collect_episode(vols[0], 0, agent, c, {0.5, 0.0}, rng, {});
  if (trace.steps.size() % 3 != 0 || trace.steps.empty()) return false;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    if (index_of(axis_of(trace.steps[i].action)) != static_cast<int>(i % 3)) return false;
  }
  return true;
}

bool update_locality() {
  const auto vols = small_set(1, 20);
  const auto c = small_config();
  for (Axis axis : kAxes) {
    NetworkAgent agent(c.network_config(), 11);
    const auto& arch = agent.network().arch();
    const std::vector<float> before(agent.network().params().begin(), agent.network().params().end());
    std::vector<Transition> batch;
    Rng rng(6);
    for (int i = 0; i < 8; ++i) {
      const Vec3i q{uniform_int(rng, 2, 17), uniform_int(rng, 2, 17), uniform_int(rng, 2, 17)};
      const Action a = make_action(axis, i % 2);
      const Vec3i qn = transition(q, a, 2, vols[0].dims());
      batch.push_back({0, q, a, qn, reward(q, qn, vols[0].landmarks().front().position)});
    }
    agent.update(vols, batch, axis, 0.9, 0.05);
    const auto after = agent.network().params();
    const int own_policy = arch.policy_head(axis);
    const int own_value = arch.value_head(axis);
    bool own_changed = false;
    for (int h = 0; h < static_cast<int>(arch.heads().size()); ++h) {
      const auto [lo, hi] = arch.head_range(h);
      const bool same = std::equal(before.begin() + static_cast<std::ptrdiff_t>(lo), before.begin() + static_cast<std::ptrdiff_t>(hi),
                                   after.begin() + static_cast<std::ptrdiff_t>(lo));
      if (h == own_policy || h == own_value) own_changed = own_changed || !same;
      else if (!same) return false;
    }
    if (!own_changed) return false;
  }
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool seed_determinism() {
  const auto vols = small_set(3, 20);
  auto c = small_config();
  c.epochs = 3;
  const std::span<const Volume> training(vols.data(), 2);
  const std::span<const Volume> validation(vols.data() + 2, 1);
  const auto root = fs::temp_directory_path() / "ppac_acceptance_determinism";
  fs::remove_all(root);
  const TrainOutputs a{root / "a"}, b{root / "b"};
  fs::create_directories(a.directory);
  fs::create_directories(b.directory);
  train(c, training, validation, &a);
  train(c, training, validation, &b);
  const std::string ca = slurp(a.directory / "curves.csv");
  const bool same = !ca.empty() && ca == slurp(b.directory / "curves.csv");
  fs::remove_all(root);
  return same;
}

Verdict invariants() {
  const std::vector<Check> checks{
      {"reward codomain", reward_codomain},
      {"transition single-coordinate + involution", transition_structure},
      {"partial spaces partition actions", partition},
      {"merged policy sums to 1", merged_policy_sums},
      {"replay FIFO + uniform sampling", replay_fifo_and_uniform},
      {"step-sequence axis periodicity", step_sequence_periodicity},
      {"per-axis update locality", update_locality},
      {"seed determinism of curves", seed_determinism},
  };
  bool all = true;
  std::string detail;
  for (const auto& check : checks) {
    const auto t0 = Clock::now();
    const bool ok = check.run();
    all = all && ok;
    detail += fmt("%s %s (%.0fms); ", check.name.c_str(), ok ? "ok" : "VIOLATED", 1000 * seconds_since(t0));
  }
  detail.resize(detail.size() - 2);
  return {all, detail};
}

// ---------------------------------------------------------------------------
// 6. Oracle walk

Verdict oracle_walk() {
  const auto t0 = Clock::now();
  const Vec3i dims{17, 17, 17};
  const Volume v = blank_volume(dims, {8, 8, 8});
  const LocalizeConfig lc{300, 10, 1};
  double worst = 0.0;
  long walks = 0;
  for (int pz = 1; pz < 16; ++pz)
    for (int py = 1; py < 16; ++py)
      for (int px = 1; px < 16; ++px) {
        const Vec3d p{static_cast<double>(px), static_cast<double>(py), static_cast<double>(pz)};
        const OracleAgent oracle(p);
        for (int z = 0; z < 17; z += 4)
          for (int y = 0; y < 17; y += 4)
            for (int x = 0; x < 17; x += 4) {
              worst = std::max(worst, norm(localize(v, oracle, {x, y, z}, lc) - p));
              ++walks;
            }
      }
  const double t = seconds_since(t0);
  return {worst <= std::sqrt(3.0) && t < 60.0,
          fmt("%ld walks, worst error %.3f <= %.3f voxels, %.1fs < 60s", walks, worst, std::sqrt(3.0), t)};
}

} // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto want = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  if (want(1)) report(1, "gradient fidelity", gradient_fidelity());
  if (want(2)) report(2, "tabular oracle equivalence", tabular_equivalence());
  if (want(5)) report(5, "invariant suite", invariants());
  if (want(6)) report(6, "oracle-walk localization", oracle_walk());
  if (want(3) || want(4)) {
    const DeskTask task = desk_task();
    const DeskData data = desk_data(task);
    const DeskRun partial = run_desk(task, data, HeadLayout::Partial);
    if (want(3)) report(3, "desk-scale localization", desk_localization(task, data, partial));
    if (want(4)) {
      const DeskRun single = run_desk(task, data, HeadLayout::ActorCritic);
      report(4, "convergence speed vs single actor-critic", convergence_speed(task, partial, single));
    }
  }
  return failures == 0 ? 0 : 1;
}

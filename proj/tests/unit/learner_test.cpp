#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppac/checkpoint.hpp"
#include "ppac/error.hpp"
#include "ppac/learner.hpp"
#include "ppac/synthetic.hpp"

namespace ppac {
namespace {

namespace fs = std::filesystem;

Volume flat_volume(Vec3i dims, Vec3d target) {
  return Volume(dims, {1, 1, 1}, std::vector<float>(static_cast<std::size_t>(dims.x) * dims.y * dims.z), {{"t", target}});
}

std::vector<Volume> synthetic_set(int n, int size) {
  std::vector<Volume> out;
  SyntheticSpec spec;
  spec.dims = {size, size, size};
  spec.blobs = 1;
  spec.target_radius_min = 3;
  spec.target_radius_max = 4;
  spec.target_margin = 4;
  for (int i = 0; i < n; ++i) {
    spec.seed = static_cast<std::uint64_t>(100 + i);
    out.push_back(generate_synthetic(spec));
  }
  return out;
}

TrainConfig tiny_config(HeadLayout mode) {
  TrainConfig c;
  c.mode = mode;
  c.window = 8;
  c.channels = {4, 8};
  c.hidden = 16;
  c.episodes_per_epoch = 4;
  c.steps_per_episode = 30;
  c.minibatch = 16;
  c.alpha = 1e-3;
  c.eval_steps = 30;
  c.eval_starts = 2;
  c.exploration = mode == HeadLayout::QLearning ? ExplorationSchedule::epsilon_greedy() : ExplorationSchedule::dropout();
  return c;
}

TrainConfig tabular_config() {
  TrainConfig c;
  c.eta = 1;
  c.gamma = 0.9;
  c.alpha = 1.0;
  c.start_margin = 0;
  c.seed = 1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ppac_learner_" + name);
  fs::remove_all(dir);
  return dir;
}

TEST(Schedule, LinearAnneal) {
  const auto d = ExplorationSchedule::dropout();
  EXPECT_DOUBLE_EQ(d.at(0, 11).keep_prob, 0.1);
  EXPECT_NEAR(d.at(5, 11).keep_prob, 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(d.at(10, 11).keep_prob, 0.7);
  EXPECT_EQ(d.at(3, 11).epsilon, 0.0);
  const auto e = ExplorationSchedule::epsilon_greedy();
  EXPECT_DOUBLE_EQ(e.at(0, 4).epsilon, 1.0);
  EXPECT_NEAR(e.at(3, 4).epsilon, 0.1, 1e-12);
  EXPECT_EQ(e.at(2, 4).keep_prob, 1.0);
}

TEST(Validate, NamesTheField) {
  auto expect_field = [](TrainConfig c, const std::string& field) {
    try {
      validate(c);
      ADD_FAILURE() << "accepted invalid " << field;
    } catch (const ConfigError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(field + ":", 0), 0u) << e.what();
    }
  };
  TrainConfig c;
  c.gamma = 1.0;
  expect_field(c, "gamma");
  c = {};
  c.eta = 0;
  expect_field(c, "eta");
  c = {};
  c.minibatch = 0;
  expect_field(c, "minibatch");
  c = {};
  c.window = 4;
  expect_field(c, "window");
  EXPECT_NO_THROW(validate(TrainConfig{}));
}

TEST(CollectEpisode, PartialModeCyclesAxes) {
  const Vec3d p{10.0, 20.5, 14.0};
  const Volume v = flat_volume({32, 32, 32}, p);
  const OracleAgent oracle(p);
  TrainConfig c;
  c.steps_per_episode = 300;
  c.eta = 2;
  std::vector<ReplayMemory> memories;
  for (Axis a : kAxes) memories.emplace_back(1000, a);
  Rng rng(1);
  const auto trace = collect_episode(v, 0, oracle, c, {0.5, 0.0}, rng, memories);
  ASSERT_EQ(trace.steps.size(), 300u);
  for (const auto& m : memories) EXPECT_EQ(m.size(), 100u);

  Vec3i prev = trace.start;
  int recomputed = 0;
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    EXPECT_EQ(index_of(axis_of(s.action)), static_cast<int>(t % 3));
    int changed = 0;
    for (int i = 0; i < 3; ++i) {
      if (s.position[i] != prev[i]) {
        ++changed;
        EXPECT_LE(std::abs(s.position[i] - prev[i]), c.eta);
      }
    }
    EXPECT_LE(changed, 1);
    const double before = distance(Vec3d(prev), p);
    const double after = distance(Vec3d(s.position), p);
    const int r = after < before ? 1 : (after > before ? -1 : 0);
    EXPECT_EQ(s.reward, r);
    recomputed += r;
    prev = s.position;
  }
  EXPECT_EQ(trace.cumulative_reward, recomputed);
  // The oracle only ever moves toward p or oscillates around it.
  EXPECT_LE(distance(trace.centroid(10), p), c.eta * std::sqrt(3.0));
}

TEST(CollectEpisode, PartialStepsRoundUpToWholeSequences) {
  const Volume v = flat_volume({16, 16, 16}, {5, 5, 5});
  const OracleAgent oracle({5, 5, 5});
  TrainConfig c;
  c.steps_per_episode = 31;
  Rng rng(2);
  EXPECT_EQ(collect_episode(v, 0, oracle, c, {}, rng, {}).steps.size(), 33u);
}

TEST(CollectEpisode, FlatModeUsesSingleMemory) {
  const auto vols = synthetic_set(1, 20);
  NetworkAgent agent(tiny_config(HeadLayout::ActorCritic).network_config(), 1);
  auto c = tiny_config(HeadLayout::ActorCritic);
  c.steps_per_episode = 25;
  std::vector<ReplayMemory> memories;
  memories.emplace_back(100);
  Rng rng(3);
  const auto trace = collect_episode(vols[0], 0, agent, c, {0.5, 0.0}, rng, memories);
  EXPECT_EQ(trace.steps.size(), 25u);
  EXPECT_EQ(memories[0].size(), 25u);
  std::vector<ReplayMemory> wrong(3, ReplayMemory(10));
  EXPECT_THROW(collect_episode(vols[0], 0, agent, c, {}, rng, wrong), ContractViolation);
}

TEST(Trainer, EpochIsDeterministic) {
  const auto vols = synthetic_set(2, 20);
  for (auto mode : {HeadLayout::Partial, HeadLayout::ActorCritic, HeadLayout::QLearning}) {
    const auto c = tiny_config(mode);
    NetworkAgent a(c.network_config(), 5);
    NetworkAgent b(c.network_config(), 5);
    Trainer ta(c, a, vols);
    Trainer tb(c, b, vols);
    const auto sa = ta.train_epoch();
    const auto sb = tb.train_epoch();
    EXPECT_EQ(sa.mean_reward, sb.mean_reward);
    EXPECT_EQ(sa.actor_loss, sb.actor_loss);
    EXPECT_TRUE(std::equal(a.network().params().begin(), a.network().params().end(), b.network().params().begin()))
        << layout_name(mode);
    EXPECT_GT(sa.updates, 0u);
  }
}

TEST(Trainer, ZeroStepSizeKeepsParameters) {
  const auto vols = synthetic_set(2, 20);
  auto c = tiny_config(HeadLayout::Partial);
  c.alpha = 0.0;
  NetworkAgent agent(c.network_config(), 5);
  const std::vector<float> before(agent.network().params().begin(), agent.network().params().end());
  Trainer trainer(c, agent, vols);
  const auto stats = trainer.train_epoch();
  EXPECT_TRUE(std::equal(before.begin(), before.end(), agent.network().params().begin()));
  EXPECT_EQ(stats.traces.size(), 4u);
  // 4 episodes x 30 steps = 40 per axis; ceil(40 / 16) batches per axis.
  EXPECT_EQ(stats.updates, 9u);
  EXPECT_GT(stats.critic_loss, 0.0);
  EXPECT_GE(stats.train_error, 0.0);
}

TEST(Trainer, RejectsMismatchedAgent) {
  const auto vols = synthetic_set(1, 20);
  NetworkAgent agent(tiny_config(HeadLayout::QLearning).network_config(), 1);
  EXPECT_THROW(Trainer(tiny_config(HeadLayout::Partial), agent, vols), ConfigError);
  EXPECT_THROW(Trainer(tiny_config(HeadLayout::QLearning), agent, std::span<const Volume>{}), ConfigError);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto vols = synthetic_set(2, 20);
  auto c = tiny_config(HeadLayout::Partial);
  c.epochs = 0;
  const auto dir = scratch_dir("zero");
  const TrainOutputs out{dir};
  const auto result = train(c, vols, vols, &out);
  EXPECT_TRUE(result.curves.empty());
  const auto init = load_checkpoint(dir / "checkpoint_init.ckpt").network;
  for (const char* name : {"checkpoint_best.ckpt", "checkpoint_last.ckpt"}) {
    const auto ck = load_checkpoint(dir / name).network;
    EXPECT_TRUE(std::equal(ck.params().begin(), ck.params().end(), init.params().begin())) << name;
  }
  EXPECT_EQ(slurp(dir / "curves.csv"), "epoch,mean_reward,train_err,val_err\n");
  fs::remove_all(dir);
}

TEST(Train, IdenticalRunsWriteIdenticalCurves) {
  const auto vols = synthetic_set(3, 20);
  const std::span<const Volume> training(vols.data(), 2);
  const std::span<const Volume> validation(vols.data() + 2, 1);
  auto c = tiny_config(HeadLayout::Partial);
  c.epochs = 3;
  const auto a = scratch_dir("det_a");
  const auto b = scratch_dir("det_b");
  const TrainOutputs oa{a}, ob{b};
  const auto ra = train(c, training, validation, &oa);
  train(c, training, validation, &ob);
  const std::string curves = slurp(a / "curves.csv");
  EXPECT_EQ(curves, slurp(b / "curves.csv"));
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 4);
  EXPECT_EQ(slurp(a / "checkpoint_last.ckpt"), slurp(b / "checkpoint_last.ckpt"));
  ASSERT_EQ(ra.curves.size(), 3u);
  EXPECT_TRUE(ra.curves[0].val_err.has_value());

  c.seed = 2;
  const auto d = scratch_dir("det_c");
  const TrainOutputs od{d};
  train(c, training, validation, &od);
  EXPECT_NE(curves, slurp(d / "curves.csv"));
  for (const auto& p : {a, b, d}) fs::remove_all(p);
}

TEST(Train, QModeGradientCheck) {
  EXPECT_LE(gradient_check(CheckedHead::Q, 0).max_relative_error, 1e-4);
}

// Sign-policy agreement over positions at least one voxel off-target.
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

TEST(Tabular, ConvergesToSignPolicy) {
  const Vec3d p{2, 4, 5};
  const std::vector<Volume> vols{flat_volume({7, 7, 7}, p)};
  TabularAgent agent({7, 7, 7});
  Trainer trainer(tabular_config(), agent, vols);
  EXPECT_LT(sign_agreement(agent, {7, 7, 7}, p), 0.95);
  for (int e = 0; e < 60; ++e) trainer.train_epoch();
  EXPECT_GE(sign_agreement(agent, {7, 7, 7}, p), 0.95);
}

TEST(Tabular, RewardTrendIsNonDecreasing) {
  const Vec3d p{2, 6, 5};
  const std::vector<Volume> vols{flat_volume({9, 9, 9}, p)};
  TabularAgent agent({9, 9, 9});
  Trainer trainer(tabular_config(), agent, vols);
  std::vector<double> rewards;
  for (int e = 0; e < 20; ++e) rewards.push_back(trainer.train_epoch().mean_reward);
  std::vector<double> smooth;
  for (std::size_t k = 5; k <= rewards.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = k - 5; j < k; ++j) s += rewards[j];
    smooth.push_back(s / 5.0);
  }
  // Per-epoch rewards have SD around 1, so a 5-epoch mean wobbles by ~0.5.
  double best = smooth.front();
  for (double s : smooth) {
    EXPECT_GE(s, best - 1.0);
    best = std::max(best, s);
  }
  EXPECT_GT(smooth.back(), smooth.front());
}

TEST(Tabular, AdvantageVanishesUnderFrozenPolicy) {
  const Vec3d p{2, 6, 5};
  const Vec3i dims{9, 9, 9};
  const std::vector<Volume> vols{flat_volume(dims, p)};
  TabularAgent agent(dims);
  agent.freeze_policy(true);
  Trainer trainer(tabular_config(), agent, vols);

  // Expected TD error per (state, axis) under the frozen policy.
  auto expected_errors = [&] {
    std::vector<double> out;
    for (int z = 0; z < dims.z; ++z)
      for (int y = 0; y < dims.y; ++y)
        for (int x = 0; x < dims.x; ++x) {
          const Vec3i q{x, y, z};
          for (Axis a : kAxes) {
            const auto pi = agent.policy(q, a);
            double e = 0.0;
            for (int k = 0; k < 2; ++k) {
              const Vec3i next = transition(q, make_action(a, k), 1, dims);
              e += pi[static_cast<std::size_t>(k)] *
                   td_quantities(reward(q, next, p), agent.value(next, a), agent.value(q, a), 0.9).error;
            }
            out.push_back(e);
          }
        }
    return out;
  };
  auto mean_abs = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s / static_cast<double>(v.size());
  };

  for (int e = 0; e < 20; ++e) trainer.train_epoch();
  const double early = mean_abs(expected_errors());
  for (int e = 20; e < 200; ++e) trainer.train_epoch();
  const auto late = expected_errors();
  double mean = 0.0;
  for (double x : late) mean += x;
  mean /= static_cast<double>(late.size());
  EXPECT_LE(std::abs(mean), 0.05);
  EXPECT_LT(mean_abs(late), 0.5 * early);
}

} // namespace
} // namespace ppac

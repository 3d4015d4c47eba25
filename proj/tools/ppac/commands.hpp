#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppac/learner.hpp"
#include "ppac/synthetic.hpp"

namespace ppac::cli {

struct GenOptions {
  SyntheticSpec spec;
  std::array<int, 3> dims{64, 64, 64};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  int count = 5;
  std::uint64_t seed = 1;
};

struct TrainOptions {
  TrainConfig config;
  std::string mode = "partial";
  std::string train_dir;
  std::string val_dir;
  std::optional<double> explore_start;
  std::optional<double> explore_end;
};

struct EvalOptions {
  std::string checkpoint;
  bool oracle = false;
  std::string volumes_dir;
  std::string regions_dir;
  std::string landmark;
  EvalConfig eval;
};

struct TraceOptions {
  std::string checkpoint;
  bool oracle = false;
  std::string volume;
  std::string landmark;
  std::vector<int> start;
  LocalizeConfig localize;
  int margin = 8;
  std::uint64_t seed = 1;
};

struct GradcheckOptions {
  std::string head = "all";
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
};

CLI::App* add_gen(CLI::App& app, GenOptions& o);
CLI::App* add_train(CLI::App& app, TrainOptions& o);
CLI::App* add_eval(CLI::App& app, EvalOptions& o);
CLI::App* add_trace(CLI::App& app, TraceOptions& o);
CLI::App* add_gradcheck(CLI::App& app, GradcheckOptions& o);

// Each returns the process exit status; errors propagate as exceptions.
int run_gen(const CLI::App& cmd, GenOptions& o);
int run_train(const CLI::App& cmd, TrainOptions& o);
int run_eval(const CLI::App& cmd, EvalOptions& o);
int run_trace(const CLI::App& cmd, TraceOptions& o);
int run_gradcheck(const GradcheckOptions& o);

} // namespace ppac::cli

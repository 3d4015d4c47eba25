#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ppac/agent.hpp"
#include "ppac/geometry.hpp"
#include "ppac/mdp.hpp"
#include "ppac/volume.hpp"

namespace ppac {

struct TraceStep {
  Vec3i position; // after the action
  Action action;
  int reward; // 0 when the walk was not scored against a target
};

/// One agent walk: start position, then one entry per step.
struct EpisodeTrace {
  int volume_id = 0;
  Vec3i start{};
  std::vector<TraceStep> steps;
  int cumulative_reward = 0;

  /// Mean of the last `last` positions (the start counts when the walk is
  /// shorter than `last`).
  Vec3d centroid(int last) const;
};

/// Writes "t,x,y,z,action,reward"; row 0 is the start with an empty action.
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);

struct LocalizeConfig {
  int steps = 300;  // partial agents run ceil(steps / 3) step-sequences
  int last = 10;    // positions averaged for the oscillation centroid
  int eta = 2;
};

/// Greedy walk from `start` (argmax of each head, no dropout, no reward
/// signal) returning the mean of the last `last` visited positions. When
/// `trace` is given the walk is recorded; rewards are filled in only if
/// `score_against` is set.
Vec3d localize(const Volume& v, const Agent& agent, const Vec3i& start, const LocalizeConfig& config,
               EpisodeTrace* trace = nullptr, std::optional<Vec3d> score_against = std::nullopt);

/// Ground truth for one evaluated volume: a point (defaults to the volume's
/// first landmark) or a region mask of the same dims (non-zero = inside).
struct EvalCase {
  const Volume* volume = nullptr;
  std::optional<Landmark> point;
  const Volume* region = nullptr;
};

struct EvalConfig {
  LocalizeConfig localize;
  int starts = 5;
  int start_margin = 8; // starts are uniform over [margin, dims - 1 - margin]
  std::uint64_t seed = 1;
  int workers = 1;
};

struct EvalRow {
  int volume_id = 0;
  std::string landmark;
  std::vector<Vec3d> start_estimates;
  Vec3d estimate{}; // mean of start_estimates
  std::optional<double> error_mm;    // point targets
  std::vector<bool> inside_region;   // region targets, one flag per start
};

struct EvalSummary {
  int volumes = 0;
  int skipped = 0;
  double mean_mm = 0.0;
  double sd_mm = 0.0; // sample standard deviation; 0 for fewer than two volumes
  double median_mm = 0.0;
  std::optional<double> failure_pct;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalSummary summary;
};

/// Uniform start position with the given margin (clamped so the range is
/// never empty).
Vec3i sample_start(const Vec3i& dims, int margin, Rng& rng);

/// Localizes every case from `starts` seeded random positions. The
/// per-volume point error is the distance (mm) of the mean of the per-start
/// estimates from the ground truth. Region failure is the percentage of
/// starts whose estimate, rounded to the nearest voxel, falls outside the
/// mask. Cases without any ground truth are skipped and counted.
EvalReport evaluate(std::span<const EvalCase> cases, const Agent& agent, const EvalConfig& config);

/// Convenience overload: every volume's first landmark is its target.
EvalReport evaluate(std::span<const Volume> volumes, const Agent& agent, const EvalConfig& config);

/// Recomputes the summary from rows (used by evaluate and by tests).
EvalSummary summarize(std::span<const EvalRow> rows, int skipped);

/// Report CSV ("volume_id,landmark,err_mm,inside_region") and summary JSON.
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_summary_json(std::ostream& out, const EvalSummary& summary);

} // namespace ppac

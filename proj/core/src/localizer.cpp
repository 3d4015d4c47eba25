#include "ppac/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ppac/error.hpp"

namespace ppac {

Vec3d EpisodeTrace::centroid(int last) const {
  const int available = static_cast<int>(steps.size()) + 1;
  const int n = std::clamp(last, 1, available);
  Vec3d sum;
  for (int k = 0; k < n; ++k) {
    const int idx = static_cast<int>(steps.size()) - 1 - k;
    sum = sum + Vec3d(idx >= 0 ? steps[static_cast<std::size_t>(idx)].position : start);
  }
  return sum * (1.0 / n);
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "t,x,y,z,action,reward\n";
  out << 0 << ',' << trace.start.x << ',' << trace.start.y << ',' << trace.start.z << ",,0\n";
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const auto& s = trace.steps[t];
    out << t + 1 << ',' << s.position.x << ',' << s.position.y << ',' << s.position.z << ',' << action_token(s.action)
        << ',' << s.reward << '\n';
  }
}

Vec3d localize(const Volume& v, const Agent& agent, const Vec3i& start, const LocalizeConfig& config,
               EpisodeTrace* trace, std::optional<Vec3d> score_against) {
  if (config.steps < 1) throw ConfigError("steps: must be positive");
  if (config.last < 1) throw ConfigError("last: must be positive");
  if (!v.contains(start)) throw ContractViolation("localize: start position outside the volume");

  const bool partial = agent.layout() == HeadLayout::Partial;
  const int total_steps = partial ? 3 * ((config.steps + 2) / 3) : config.steps;

  EpisodeTrace local;
  EpisodeTrace& walk = trace != nullptr ? *trace : local;
  walk.start = start;
  walk.steps.clear();
  walk.steps.reserve(static_cast<std::size_t>(total_steps));
  walk.cumulative_reward = 0;

  Vec3i q = start;
  for (int t = 0; t < total_steps; ++t) {
    const Axis axis = kAxes[static_cast<std::size_t>(t % 3)];
    const Action a = greedy_action(agent, v, q, axis);
    const Vec3i next = transition(q, a, config.eta, v.dims());
    const int r = score_against ? reward(q, next, *score_against) : 0;
    walk.steps.push_back({next, a, r});
    walk.cumulative_reward += r;
    q = next;
  }
  return walk.centroid(config.last);
}

Vec3i sample_start(const Vec3i& dims, int margin, Rng& rng) {
  Vec3i q;
  for (int i = 0; i < 3; ++i) {
    const int m = std::clamp(margin, 0, (dims[i] - 1) / 2);
    q[i] = uniform_int(rng, m, dims[i] - 1 - m);
  }
  return q;
}

namespace {

bool inside(const Volume& mask, const Vec3d& p) {
  const Vec3i q{static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)), static_cast<int>(std::lround(p.z))};
  return mask.contains(q) && mask.at(q) != 0.0f;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

EvalSummary summarize(std::span<const EvalRow> rows, int skipped) {
  EvalSummary s;
  s.skipped = skipped;
  std::vector<double> errors;
  std::size_t region_starts = 0;
  std::size_t region_failures = 0;
  for (const auto& row : rows) {
    if (row.error_mm) errors.push_back(*row.error_mm);
    for (bool in : row.inside_region) {
      ++region_starts;
      if (!in) ++region_failures;
    }
  }
  s.volumes = static_cast<int>(rows.size());
  if (!errors.empty()) {
    const double n = static_cast<double>(errors.size());
    s.mean_mm = std::accumulate(errors.begin(), errors.end(), 0.0) / n;
    if (errors.size() > 1) {
      double ss = 0.0;
      for (double e : errors) ss += (e - s.mean_mm) * (e - s.mean_mm);
      s.sd_mm = std::sqrt(ss / (n - 1.0));
    }
    s.median_mm = median_of(errors);
  }
  if (region_starts > 0) s.failure_pct = 100.0 * static_cast<double>(region_failures) / static_cast<double>(region_starts);
  return s;
}

EvalReport evaluate(std::span<const EvalCase> cases, const Agent& agent, const EvalConfig& config) {
  if (config.starts < 1) throw ConfigError("starts: must be positive");

  // Starts are drawn up front in case order so that results do not depend
  // on the worker count.
  std::vector<std::vector<Vec3i>> starts(cases.size());
  std::vector<char> usable(cases.size(), 0);
  int skipped = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto& ec = cases[c];
    if (ec.volume == nullptr) throw ContractViolation("evaluate: case without a volume");
    const bool has_point = ec.point.has_value() || !ec.volume->landmarks().empty();
    if (!has_point && ec.region == nullptr) {
      ++skipped;
      continue;
    }
    usable[c] = 1;
    Rng rng(derive_seed(config.seed, 0xe7a1, c));
    for (int s = 0; s < config.starts; ++s) starts[c].push_back(sample_start(ec.volume->dims(), config.start_margin, rng));
  }

  std::vector<EvalRow> rows(cases.size());
  auto run_case = [&](std::size_t c) {
    const auto& ec = cases[c];
    EvalRow& row = rows[c];
    row.volume_id = static_cast<int>(c);
    for (const auto& start : starts[c]) row.start_estimates.push_back(localize(*ec.volume, agent, start, config.localize));
    Vec3d sum;
    for (const auto& e : row.start_estimates) sum = sum + e;
    row.estimate = sum * (1.0 / static_cast<double>(row.start_estimates.size()));
    if (ec.region != nullptr) {
      row.landmark = ec.point ? ec.point->name : "region";
      for (const auto& e : row.start_estimates) row.inside_region.push_back(inside(*ec.region, e));
    } else {
      const Landmark& gt = ec.point ? *ec.point : ec.volume->target();
      row.landmark = gt.name;
      row.error_mm = distance_mm(row.estimate, gt.position, ec.volume->spacing());
    }
  };

  std::vector<std::size_t> todo;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (usable[c]) todo.push_back(c);
  }
  const auto workers = static_cast<std::size_t>(std::max(1, config.workers));
  if (workers == 1 || todo.size() < 2) {
    for (std::size_t c : todo) run_case(c);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < todo.size(); i += workers) run_case(todo[i]);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }

  EvalReport report;
  for (std::size_t c : todo) report.rows.push_back(std::move(rows[c]));
  report.summary = summarize(report.rows, skipped);
  return report;
}

EvalReport evaluate(std::span<const Volume> volumes, const Agent& agent, const EvalConfig& config) {
  std::vector<EvalCase> cases;
  cases.reserve(volumes.size());
  for (const auto& v : volumes) cases.push_back({&v, std::nullopt, nullptr});
  return evaluate(cases, agent, config);
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "volume_id,landmark,err_mm,inside_region\n";
  for (const auto& row : report.rows) {
    if (row.error_mm) {
      out << row.volume_id << ',' << row.landmark << ',' << *row.error_mm << ",\n";
    }
    for (bool in : row.inside_region) out << row.volume_id << ',' << row.landmark << ",," << (in ? 1 : 0) << '\n';
  }
}

void write_summary_json(std::ostream& out, const EvalSummary& summary) {
  nlohmann::ordered_json j;
  j["volumes"] = summary.volumes;
  j["skipped"] = summary.skipped;
  j["mean_mm"] = summary.mean_mm;
  j["sd_mm"] = summary.sd_mm;
  j["median_mm"] = summary.median_mm;
  j["failure_pct"] = summary.failure_pct ? nlohmann::ordered_json(*summary.failure_pct) : nlohmann::ordered_json(nullptr);
  out << j.dump(2) << '\n';
}

} // namespace ppac

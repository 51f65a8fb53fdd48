#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "sleeptrack/filter.hpp"
#include "sleeptrack/model.hpp"
#include "sleeptrack/policy.hpp"
#include "sleeptrack/tdelta.hpp"

namespace sleeptrack {

inline constexpr long kMaxEpisodeSteps = 1'000'000;
inline constexpr int kLifetimeRuns = 100'000;

struct TraceStep {
  int step = 0;
  bool exited = false;
  double position = 0.0;  // true location (meaningless once exited)
  double estimate = 0.0;
  int awake = 0;
  double cost = 0.0;      // tracking + energy charged at this step
};

struct EpisodeResult {
  double tracking = 0.0;
  double energy = 0.0;
  int duration = 0;          // step at which the object left
  int degenerate_steps = 0;  // particle-filter weight collapses (kept, not repaired)
  std::vector<TraceStep> trace;

  double total() const { return tracking + energy; }
};

struct EpisodeOptions {
  bool trace = false;
  int particles = kDefaultParticles;
  long max_steps = kMaxEpisodeSteps;
};

/// Called after every exact filter update with (p_prev, p_now, s_now, r_now).
using LearningHook = std::function<void(const DenseBelief&, const DenseBelief&,
                                        const Observation&, const SleepState&)>;

/// One run from the model's start state with the location known and every
/// sensor awake. Costs are charged for steps 1..duration-1; the step on
/// which the object leaves costs nothing.
EpisodeResult run_episode(const NetworkModel& model, const SleepPolicy& policy, Rng& rng,
                          const EpisodeOptions& options = {},
                          const LearningHook* learn = nullptr);

struct Lifetime {
  double mean = 0.0;
  double se = 0.0;
  bool exact = false;
};

/// Exact absorption time from the start state for finite models, otherwise a
/// Monte-Carlo estimate over `runs` walks.
Lifetime expected_lifetime(const NetworkModel& model, int runs = kLifetimeRuns,
                           std::uint64_t seed = 1);

struct TradeoffPoint {
  std::string network;
  std::string policy;
  std::string tdelta_source;
  double c = 0.0;
  double tracking_per_time = 0.0;
  double tracking_se = 0.0;
  double energy_per_time = 0.0;
  double energy_se = 0.0;
  int runs = 0;
  std::uint64_t seed = 0;
  // not part of the CSV schema
  double total_se = 0.0;
  double mean_duration = 0.0;
  double duration_se = 0.0;

  double total_per_time() const { return tracking_per_time + energy_per_time; }
};

/// Per-unit-time averages (divided by the expected lifetime). A single run
/// gets infinite standard errors.
TradeoffPoint summarize(const std::vector<EpisodeResult>& episodes, double lifetime);

/// Stream for run `run` of any sweep point. Every point and policy reuses
/// the same streams, so comparisons across c are paired.
Rng episode_stream(std::uint64_t seed, std::uint64_t run);

struct LearningSchedule {
  int warmup = 100;
  int recorded = 50;
  int cadence = 5;
  double alpha = kDefaultLearningRate;
};

struct CampaignOptions {
  int u_max = 0;
  double lifetime = 0.0;
  std::uint64_t seed = 1;
};

struct CampaignResult {
  TDeltaTable table;
  TradeoffPoint point;
  std::vector<EpisodeResult> episodes;
};

/// Warm-up episodes that only learn, then recorded episodes that keep
/// learning. Q_MDP values are re-solved every `cadence` episodes. Recorded
/// run i uses the same stream as run i of a non-learning sweep point. With
/// no recorded runs the point is left empty.
CampaignResult run_learning_campaign(const NetworkModel& model, PolicyKind kind,
                                     TDeltaTable initial, const LearningSchedule& schedule,
                                     const CampaignOptions& options);

struct PolicySpec {
  PolicyKind kind = PolicyKind::AllAwake;
  TDeltaSource source = TDeltaSource::Asleep;

  /// "all-awake", "all-asleep", "qmdp-greedy", "fcr-learning", ...
  static PolicySpec parse(std::string_view text);
  std::string name() const;
  bool uses_table() const { return kind == PolicyKind::Qmdp || kind == PolicyKind::Fcr; }
};

struct SweepConfig {
  std::vector<PolicySpec> policies;
  std::vector<double> c_grid;
  int runs = 50;
  std::uint64_t seed = 1;
  int particles = kDefaultParticles;
  int mc_samples = kDefaultMonteCarloSamples;
  LearningSchedule schedule;
  const TDeltaTable* file_table = nullptr;
  int u_max = 0;  // 0: twice the expected lifetime
  int lifetime_runs = kLifetimeRuns;
  int workers = 1;
  int lookahead_particles = 128;
};

/// One tradeoff point per (policy, c), policies outermost.
std::vector<TradeoffPoint> sweep(const NetworkModel& model, const SweepConfig& config);

// --- output ------------------------------------------------------------------

inline constexpr const char* kCsvHeader =
    "network,policy,tdelta_source,c,tracking_per_time,tracking_se,energy_per_time,energy_se,runs,"
    "seed";

void write_csv(std::ostream& out, const std::vector<TradeoffPoint>& points);
std::vector<TradeoffPoint> read_csv(std::istream& in);
void write_trace(std::ostream& out, const EpisodeResult& result);

}  // namespace sleeptrack

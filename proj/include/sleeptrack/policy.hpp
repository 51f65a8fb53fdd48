#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sleeptrack/belief.hpp"
#include "sleeptrack/model.hpp"
#include "sleeptrack/tdelta.hpp"

namespace sleeptrack {

inline constexpr double kDefaultPolicyTolerance = 1e-9;
inline constexpr int kDefaultPolicyIterations = 1000;

/// Sleep-time cap derived from an expected lifetime: ceil(2 * lifetime).
int default_u_max(double lifetime);

/// Per-sensor sleep problems on a finite chain, one column per sensor. A
/// sensor asleep at a step spent in state b pays asleep_cost(b); waking it
/// for the step after one spent in b pays wake_cost(b), plus the energy price
/// for every in-network step it is awake.
struct SleepProblemSet {
  Eigen::MatrixXd asleep_cost;
  Eigen::MatrixXd wake_cost;
  double energy_price = 0.0;

  int sensors() const { return static_cast<int>(asleep_cost.cols()); }
};

struct PerSensorValue {
  Eigen::VectorXd value;           // J(delta_b) for every in-network b
  Eigen::VectorXd energy;          // energy part of `value`
  std::vector<int> sleep;          // optimal sleep input per b (kNeverWake allowed)
  Eigen::VectorXd tracking_to_go;  // expected asleep cost if the sensor never wakes
  int u_max = 0;
  int iterations = 0;
  double residual = 0.0;
};

struct SolveOptions {
  double tol = kDefaultPolicyTolerance;
  int max_iterations = kDefaultPolicyIterations;
  /// Optional starting policy per sensor (policy iteration warm start).
  const std::vector<PerSensorValue>* warm_start = nullptr;
};

/// Policy iteration over point-mass beliefs for every column of `problems`.
/// Candidate inputs are 0..u_max and kNeverWake; ties go to the smallest.
/// Throws ConvergenceError when the iteration cap is reached.
std::vector<PerSensorValue> solve_sleep_problems(const FiniteKernel& kernel,
                                                 const SleepProblemSet& problems, int u_max,
                                                 const SolveOptions& options = {});

/// Fundamental matrix (I - Q)^-1 of the in-network block.
Eigen::MatrixXd fundamental_matrix(const FiniteKernel& kernel);

std::vector<PerSensorValue> qmdp_solve_all(const NetworkModel& model, const TDeltaTable& table,
                                           int u_max, const SolveOptions& options = {});
PerSensorValue qmdp_solve(const NetworkModel& model, const TDeltaTable& table, int l, int u_max,
                          double tol = kDefaultPolicyTolerance);

/// Minimand of the Q_MDP equation at an arbitrary belief, minimised over
/// 0..u_max and kNeverWake (smallest on ties). All-terminal beliefs return
/// kNeverWake.
int qmdp_sleep_time(const PerSensorValue& value, const NetworkModel& model,
                    const TDeltaTable& table, const DenseBelief& p, int l);

/// First u with expected tracking >= expected energy (strictly positive
/// tracking); kNeverWake if none up to u_max. `flipped` swaps the comparison.
int fcr_sleep_time(const NetworkModel& model, const TDeltaTable& table, const DenseBelief& p,
                   int l, int u_max, bool flipped = false);

struct FcrValue {
  double value = 0.0;
  bool truncated = false;
  double residual_bound = 0.0;  // upper bound on the omitted tail
};

FcrValue fcr_value(const NetworkModel& model, const TDeltaTable& table, const DenseBelief& p,
                   int l, int horizon_cap = 1'000'000);

// --- combined policies -----------------------------------------------------

enum class PolicyKind { AllAwake, AllAsleep, Qmdp, Fcr };

std::string to_string(PolicyKind kind);

struct SleepPolicy {
  PolicyKind kind = PolicyKind::AllAwake;
  const TDeltaTable* table = nullptr;  // read at every decision (learning updates it)
  std::vector<PerSensorValue> qmdp;   // Q_MDP only
  Eigen::MatrixXd fundamental;        // Q_MDP only
  int u_max = 0;
  bool flipped_fcr = false;
  /// Particles used for the FCR lookahead on continuous models.
  int lookahead_particles = 128;
};

SleepPolicy make_all_awake();
SleepPolicy make_all_asleep();
SleepPolicy make_fcr(const TDeltaTable& table, int u_max, bool flipped = false);
SleepPolicy make_qmdp(const NetworkModel& model, const TDeltaTable& table, int u_max,
                      const SolveOptions& options = {});
/// Re-solves the Q_MDP values against the current table, warm-started.
void resolve_qmdp(SleepPolicy& policy, const NetworkModel& model);

/// Sleep inputs for every sensor: the per-sensor rule for awake sensors, 0
/// for sleeping ones.
std::vector<int> act(const NetworkModel& model, const SleepPolicy& policy, const Belief& p,
                     const SleepState& r, Rng& rng);

}  // namespace sleeptrack

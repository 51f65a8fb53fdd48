#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sleeptrack/belief.hpp"
#include "sleeptrack/model.hpp"

namespace sleeptrack {

inline constexpr int kDefaultMonteCarloSamples = 200;
inline constexpr double kDefaultLearningRate = 0.01;

enum class TDeltaSource { Asleep, Greedy, Learned, File };

std::string to_string(TDeltaSource source);
TDeltaSource parse_tdelta_source(std::string_view text);

/// Per-(location, sensor) tracking-cost increments. Rows are the states of a
/// finite model, or anchor points interpolated linearly on a continuum.
class TDeltaTable {
 public:
  TDeltaTable(Eigen::MatrixXd values, std::vector<double> anchors, bool interpolated,
              TDeltaSource provenance);
  /// All-zero table shaped for `model` (integer anchors for continuous spaces).
  static TDeltaTable zeros(const NetworkModel& model, TDeltaSource provenance);

  int rows() const { return static_cast<int>(values_.rows()); }
  int sensors() const { return static_cast<int>(values_.cols()); }
  double at(int row, int l) const { return values_(row, l); }
  double& at(int row, int l) { return values_(row, l); }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  auto column(int l) const { return values_.col(l); }
  const std::vector<double>& anchors() const { return anchors_; }
  bool interpolated() const { return interpolated_; }
  TDeltaSource provenance() const { return provenance_; }
  void set_provenance(TDeltaSource p) { provenance_ = p; }

  /// Finite tables: direct lookup by state index. Interpolated tables: linear
  /// between bracketing anchors, clamped outside the anchor range.
  double eval(const ObjectState& b, int l) const;
  double eval_at(double position, int l) const;

  /// Throws InvalidArgument if an entry is negative or not finite.
  void validate() const;

 private:
  Eigen::MatrixXd values_;
  std::vector<double> anchors_;
  bool interpolated_ = false;
  TDeltaSource provenance_ = TDeltaSource::Asleep;
};

inline double tdelta_eval(const TDeltaTable& table, const ObjectState& b, int l) {
  return table.eval(b, l);
}

/// Joint Monte-Carlo draws of one motion step from a known location and the
/// readings every sensor would produce; any awake set is scored on the same
/// draws.
class OneStepSampler {
 public:
  OneStepSampler(const NetworkModel& model, const ObjectState& from, int samples, Rng& rng);

  /// Mean posterior tracking cost at the next step when `awake` sensors report.
  double mean_cost(const std::vector<bool>& awake) const;
  int samples() const { return samples_; }

 private:
  const NetworkModel* model_;
  int samples_ = 0;
  int n_ = 0;
  std::vector<double> support_;     // candidate next locations
  Eigen::VectorXd log_prior_;       // over support_
  std::vector<bool> exited_;        // per sample
  // per sample, per sensor: log-likelihood of the drawn reading over support_
  std::vector<Eigen::MatrixXd> log_lik_;
};

double tdelta_asleep(const NetworkModel& model, const ObjectState& b, int l, int samples, Rng& rng);

struct GreedyRow {
  std::vector<int> baseline;  // sensors awake in the greedy baseline
  Eigen::VectorXd row;        // T(b, .)
};

GreedyRow tdelta_greedy(const NetworkModel& model, const ObjectState& b, int samples, Rng& rng);

/// Full asleep- or greedy-baseline table. Row r uses stream (seed, r).
TDeltaTable build_tdelta_table(const NetworkModel& model, TDeltaSource source, int samples,
                               std::uint64_t seed);

// --- learning --------------------------------------------------------------

/// Table-predicted expected increase for sensor l under p_prev.
double predicted_increase(const TDeltaTable& table, const DenseBelief& p_prev, int l);

/// Sampled increase in tracking cost attributed to sensor l at this step.
double observed_increase(const NetworkModel& model, const DenseBelief& p_prev,
                         const DenseBelief& p_now, const Observation& s_now,
                         const SleepState& r_now, int l, Rng& rng);

/// One stochastic-approximation step on every sensor column; entries are
/// clamped at zero.
void learn_step(TDeltaTable& table, const DenseBelief& p_prev, const DenseBelief& p_now,
                const Observation& s_now, const SleepState& r_now, const NetworkModel& model,
                double alpha, Rng& rng);

}  // namespace sleeptrack

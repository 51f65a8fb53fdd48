#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sleeptrack/model.hpp"
#include "sleeptrack/policy.hpp"

namespace sleeptrack {

/// Standard normal tail probability.
double normal_tail(double x);

/// Error probability of the pairwise likelihood-ratio test deciding between
/// hypotheses j (true) and k. At d = 0 the limit is 0.5 for equal priors and
/// 1{pi_k > pi_j} otherwise.
double pairwise_error(double d, double pi_j, double pi_k);

/// Noise-whitened mean readings of every Gaussian sensor at every location.
class HypothesisGeometry {
 public:
  /// Throws ModelError unless the model is finite with Gaussian sensors only.
  explicit HypothesisGeometry(const NetworkModel& model);

  int states() const { return static_cast<int>(means_.rows()); }
  int sensors() const { return static_cast<int>(means_.cols()); }
  const Eigen::MatrixXd& means() const { return means_; }
  /// Distance between the mean vectors of states k and j over awake sensors.
  double distance(int k, int j, const std::vector<bool>& awake) const;

 private:
  Eigen::MatrixXd means_;     // m x n, raw mean readings
  Eigen::VectorXd inv_sd_;    // 1 / sigma per sensor
};

struct BoundTables {
  Eigen::MatrixXd all_awake;   // T0(i, l): every sensor awake
  Eigen::MatrixXd one_asleep;  // T(i, l): sensor l asleep, the rest awake
};

BoundTables bound_tables(const NetworkModel& model);

/// Row-stochastic (state x sensor) weights splitting the tracking bound.
struct LambdaMatrix {
  Eigen::MatrixXd weights;

  static LambdaMatrix uniform(int m, int n);
  /// Rows drawn uniformly from the simplex.
  static LambdaMatrix random(int m, int n, Rng& rng);
  void validate() const;
};

/// Euclidean projection of every row onto the probability simplex.
void project_rows_to_simplex(Eigen::MatrixXd& rows);

struct BoundSolution {
  std::vector<PerSensorValue> sensors;
  Eigen::VectorXd value;     // sum over sensors of J^l(e_b)
  Eigen::VectorXd tracking;  // tracking part of `value`
  Eigen::VectorXd energy;    // energy part of `value`
};

BoundSolution lb_solve(const NetworkModel& model, const BoundTables& tables,
                       const LambdaMatrix& lambda, int u_max, const SolveOptions& options = {});

/// Supergradient of lambda -> sum_l J^l(e_start) under the solved policies
/// (the objective is a sum of minima of functions linear in lambda).
Eigen::MatrixXd bound_gradient(const NetworkModel& model, const BoundTables& tables,
                               const BoundSolution& solution, int start);

struct EnvelopeConfig {
  int restarts = 20;
  int steps = 100;
  /// Stop a restart after this many steps without improving the best value.
  int patience = 20;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  int u_max = 0;  // 0: derived from the expected lifetime
};

struct EnvelopePoint {
  double c = 0.0;
  double bound = 0.0;     // best total J(e_start) found
  double tracking = 0.0;  // its tracking part
  double energy = 0.0;    // its energy part
  double lifetime = 0.0;  // normalisation for per-unit-time figures
  LambdaMatrix lambda;
  std::vector<double> history;  // best value after each candidate
  int evaluations = 0;
};

std::vector<EnvelopePoint> lb_envelope(const NetworkModel& model, const std::vector<double>& c_grid,
                                       const EnvelopeConfig& config = {});

}  // namespace sleeptrack

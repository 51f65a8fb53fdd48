#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sleeptrack/belief.hpp"

namespace sleeptrack {

using Rng = std::mt19937_64;

/// Sleep input meaning "stay asleep until the object leaves".
inline constexpr int kNeverWake = std::numeric_limits<int>::max();

/// Independent stream for a (seed, a, b, c) tuple.
Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                std::uint64_t c = 0);

// ---------------------------------------------------------------------------
// State space
// ---------------------------------------------------------------------------

/// Object location: either an in-network point or the absorbing terminal
/// state. For finite spaces `index` is the state index and `position` its
/// coordinate; continuous spaces leave `index` at -1.
struct ObjectState {
  bool terminal = false;
  int index = -1;
  double position = 0.0;

  static ObjectState exited() { return {true, -1, 0.0}; }
  static ObjectState at(double x) { return {false, -1, x}; }
  static ObjectState at_index(int i, double x) { return {false, i, x}; }
};

class StateSpace {
 public:
  enum class Kind { Finite, Continuous };

  static StateSpace finite(std::vector<double> coordinates);
  /// Integer locations first, first+1, ..., first+m-1.
  static StateSpace integers(int first, int m);
  static StateSpace continuous(double lo, double hi);

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  /// Number of in-network states m (finite spaces only).
  int size() const { return static_cast<int>(coords_.size()); }
  int terminal_index() const { return size(); }
  double coordinate(int i) const { return coords_.at(i); }
  const std::vector<double>& coordinates() const { return coords_; }
  /// Index of the state at coordinate x, or -1.
  int index_of(double x) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool contains(double x) const { return x >= lo_ && x <= hi_; }
  ObjectState state(int i) const { return ObjectState::at_index(i, coords_.at(i)); }

 private:
  Kind kind_ = Kind::Finite;
  std::vector<double> coords_;
  double lo_ = 0.0, hi_ = 0.0;
};

// ---------------------------------------------------------------------------
// Motion
// ---------------------------------------------------------------------------

/// Row-stochastic (m+1)x(m+1) transition matrix with the terminal state last.
class FiniteKernel {
 public:
  /// Accepts (m+1)x(m+1), or mx(m+1) with the absorbing row implied.
  explicit FiniteKernel(const Eigen::MatrixXd& matrix);
  /// Random walk on m states with the given displacement distribution;
  /// moves that land outside 0..m-1 go to the terminal state.
  static FiniteKernel from_steps(int m, const std::map<int, double>& steps);

  int num_locations() const { return m_; }
  Eigen::MatrixXd dense() const;
  /// Row-major transpose of the transition matrix: next = transposed() * p.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& transposed() const { return pt_; }
  /// Transpose of the in-network block Q.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& in_network_transposed() const { return qt_; }
  const std::vector<std::pair<int, double>>& row(int i) const { return rows_.at(i); }
  double probability(int from, int to) const;

  int sample(int from, Rng& rng) const;
  /// p P^t on the full (m+1) vector.
  Eigen::VectorXd predict(const Eigen::VectorXd& p, int steps = 1) const;

 private:
  FiniteKernel() = default;
  void build();

  int m_ = 0;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> pt_, qt_;
};

/// Gaussian increments on [lo, hi]; leaving the interval absorbs.
struct GaussianWalk {
  double variance = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  std::optional<double> sample(double x, Rng& rng) const;
  double exit_probability(double x) const;
  double density(double x, double y) const;
};

using MotionKernel = std::variant<GaussianWalk, FiniteKernel>;

/// Expected number of steps until absorption from every in-network state,
/// the solution of (I - Q) t = 1. Throws ModelError when I - Q is singular.
Eigen::VectorXd absorption_times(const FiniteKernel& kernel);

// ---------------------------------------------------------------------------
// Sensors, observations, costs
// ---------------------------------------------------------------------------

struct Sensor {
  enum class Kind { PerfectBinary, GaussianRss };

  double location = 0.0;
  Kind kind = Kind::GaussianRss;
  double variance = 1.0;
  double peak = 10.0;

  static Sensor binary(double location) { return {location, Kind::PerfectBinary, 0.0, 1.0}; }
  static Sensor gaussian(double location, double variance = 1.0, double peak = 10.0) {
    return {location, Kind::GaussianRss, variance, peak};
  }

  /// Noise-free reading for an object at `position`.
  double mean(double position) const;
  /// Noise-free reading once the object has left (no signal).
  double mean_terminal() const { return 0.0; }
  double likelihood(double reading, double position) const;
  double likelihood_terminal(double reading) const;
  double sample(const ObjectState& b, Rng& rng) const;
};

/// Readings of the n real sensors (nullopt = erasure) plus the virtual
/// sensor's exact exit report.
struct Observation {
  std::vector<std::optional<double>> readings;
  bool exited = false;
};

class DistanceMeasure {
 public:
  enum class Kind { Hamming, SquaredEuclidean };

  static DistanceMeasure hamming() { return {Kind::Hamming, 1.0}; }
  static DistanceMeasure squared_euclidean(double bound) { return {Kind::SquaredEuclidean, bound}; }

  Kind kind() const { return kind_; }
  double bound() const { return bound_; }
  /// d(b, estimate). Throws InvalidArgument when b is terminal.
  double operator()(const ObjectState& b, double estimate) const;
  double between(double b, double estimate) const;

 private:
  DistanceMeasure(Kind k, double bound) : kind_(k), bound_(bound) {}
  Kind kind_;
  double bound_;
};

// ---------------------------------------------------------------------------
// Sleep timers
// ---------------------------------------------------------------------------

struct SleepState {
  std::vector<int> timers;

  static SleepState all_awake(int n) { return {std::vector<int>(n, 0)}; }
  int size() const { return static_cast<int>(timers.size()); }
  bool awake(int l) const { return timers[l] == 0; }
  int awake_count() const;
};

/// One step of the residual-timer recursion: sleeping sensors count down,
/// awake sensors adopt their input. kNeverWake is absorbing.
SleepState residual_step(const SleepState& r, std::span<const int> u);

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

struct NetworkModel {
  std::string name;
  StateSpace space;
  MotionKernel motion;
  std::vector<Sensor> sensors;
  DistanceMeasure distance = DistanceMeasure::hamming();
  double energy_price = 0.1;
  ObjectState start;

  int num_sensors() const { return static_cast<int>(sensors.size()); }
  bool is_finite() const { return space.is_finite(); }
  const FiniteKernel& finite_kernel() const;
  const GaussianWalk& walk() const;
  NetworkModel with_energy_price(double c) const;
  /// Checks every documented invariant; throws ModelError/ConfigError.
  void validate() const;

  ObjectState sample_next(const ObjectState& b, Rng& rng) const;
};

/// p P^t for a finite model.
DenseBelief kernel_predict(const NetworkModel& model, const DenseBelief& p, int steps);

Observation observe(const NetworkModel& model, const ObjectState& b, const SleepState& r_next,
                    Rng& rng);

/// Builtin networks "A", "B" and "C".
NetworkModel make_network(std::string_view name);
NetworkModel network_a();
NetworkModel network_b();
NetworkModel network_c();

/// Network B's displacement distribution (renormalized).
std::map<int, double> network_b_steps();

}  // namespace sleeptrack

#include "sleeptrack/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

namespace {

constexpr double kRowTolerance = 1e-12;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c),    static_cast<std::uint32_t>(c >> 32)};
  return Rng(seq);
}

// ---------------------------------------------------------------------------

StateSpace StateSpace::finite(std::vector<double> coordinates) {
  if (coordinates.empty()) throw ConfigError("finite state space needs at least one location");
  StateSpace s;
  s.kind_ = Kind::Finite;
  s.coords_ = std::move(coordinates);
  auto [lo, hi] = std::minmax_element(s.coords_.begin(), s.coords_.end());
  s.lo_ = *lo;
  s.hi_ = *hi;
  return s;
}

StateSpace StateSpace::integers(int first, int m) {
  std::vector<double> c(m);
  for (int i = 0; i < m; ++i) c[i] = first + i;
  return finite(std::move(c));
}

StateSpace StateSpace::continuous(double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("continuous state space needs lo < hi");
  StateSpace s;
  s.kind_ = Kind::Continuous;
  s.lo_ = lo;
  s.hi_ = hi;
  return s;
}

int StateSpace::index_of(double x) const {
  for (int i = 0; i < size(); ++i)
    if (std::abs(coords_[i] - x) < 1e-9) return i;
  return -1;
}

// ---------------------------------------------------------------------------

FiniteKernel::FiniteKernel(const Eigen::MatrixXd& matrix) {
  const auto rows = matrix.rows();
  const auto cols = matrix.cols();
  if (cols < 2 || (rows != cols && rows != cols - 1))
    throw ModelError("kernel must be (m+1)x(m+1) or mx(m+1)");
  m_ = static_cast<int>(cols) - 1;
  rows_.assign(m_ + 1, {});
  for (int i = 0; i < m_; ++i) {
    double sum = 0.0;
    for (int j = 0; j <= m_; ++j) {
      const double v = matrix(i, j);
      if (v < 0.0 || !std::isfinite(v)) throw ModelError("kernel entries must be non-negative");
      if (v > 0.0) rows_[i].emplace_back(j, v);
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      std::ostringstream os;
      os << "kernel row " << i << " sums to " << sum;
      throw ModelError(os.str());
    }
  }
  if (rows == cols) {
    for (int j = 0; j < m_; ++j)
      if (matrix(m_, j) != 0.0) throw ModelError("terminal row must be absorbing");
    if (matrix(m_, m_) != 1.0) throw ModelError("terminal row must be absorbing");
  }
  rows_[m_].emplace_back(m_, 1.0);
  build();
}

FiniteKernel FiniteKernel::from_steps(int m, const std::map<int, double>& steps) {
  if (m < 1) throw ConfigError("random walk needs m >= 1");
  double total = 0.0;
  for (auto [d, p] : steps) {
    if (p < 0.0) throw ConfigError("negative step probability");
    total += p;
  }
  if (total <= 0.0) throw ConfigError("empty step distribution");
  FiniteKernel k;
  k.m_ = m;
  k.rows_.assign(m + 1, {});
  for (int i = 0; i < m; ++i) {
    std::map<int, double> row;
    for (auto [d, p] : steps) {
      if (p == 0.0) continue;
      const int j = i + d;
      row[(j < 0 || j >= m) ? m : j] += p / total;
    }
    for (auto [j, p] : row) k.rows_[i].emplace_back(j, p);
  }
  k.rows_[m].emplace_back(m, 1.0);
  k.build();
  return k;
}

void FiniteKernel::build() {
  std::vector<Eigen::Triplet<double>> full, inner;
  for (int i = 0; i <= m_; ++i)
    for (auto [j, p] : rows_[i]) {
      full.emplace_back(j, i, p);
      if (i < m_ && j < m_) inner.emplace_back(j, i, p);
    }
  pt_.resize(m_ + 1, m_ + 1);
  pt_.setFromTriplets(full.begin(), full.end());
  qt_.resize(m_, m_);
  qt_.setFromTriplets(inner.begin(), inner.end());
}

Eigen::MatrixXd FiniteKernel::dense() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m_ + 1, m_ + 1);
  for (int i = 0; i <= m_; ++i)
    for (auto [j, v] : rows_[i]) p(i, j) = v;
  return p;
}

double FiniteKernel::probability(int from, int to) const {
  for (auto [j, p] : rows_.at(from))
    if (j == to) return p;
  return 0.0;
}

int FiniteKernel::sample(int from, Rng& rng) const {
  const auto& row = rows_.at(from);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (auto [j, p] : row) {
    if (u < p) return j;
    u -= p;
  }
  return row.back().first;
}

Eigen::VectorXd FiniteKernel::predict(const Eigen::VectorXd& p, int steps) const {
  if (steps < 0) throw InvalidArgument("prediction horizon must be non-negative");
  if (p.size() != m_ + 1) throw InvalidArgument("belief dimension does not match kernel");
  Eigen::VectorXd q = p;
  for (int t = 0; t < steps; ++t) q = pt_ * q;
  return q;
}

Eigen::VectorXd absorption_times(const FiniteKernel& kernel) {
  const int m = kernel.num_locations();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  a -= Eigen::MatrixXd(kernel.in_network_transposed()).transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) throw ModelError("kernel is not absorbing: I - Q is singular");
  Eigen::VectorXd t = lu.solve(Eigen::VectorXd::Ones(m));
  for (int i = 0; i < m; ++i)
    if (!std::isfinite(t[i]) || t[i] < 1.0 - 1e-9)
      throw ModelError("kernel is not absorbing: lifetime is not finite");
  return t;
}

// ---------------------------------------------------------------------------

std::optional<double> GaussianWalk::sample(double x, Rng& rng) const {
  const double y = x + std::sqrt(variance) * std::normal_distribution<double>(0.0, 1.0)(rng);
  if (y < lo || y > hi) return std::nullopt;
  return y;
}

double GaussianWalk::exit_probability(double x) const {
  const double s = std::sqrt(variance);
  return normal_cdf((lo - x) / s) + 1.0 - normal_cdf((hi - x) / s);
}

double GaussianWalk::density(double x, double y) const {
  if (y < lo || y > hi) return 0.0;
  const double s = std::sqrt(variance);
  return normal_pdf((y - x) / s) / s;
}

// ---------------------------------------------------------------------------

double Sensor::mean(double position) const {
  if (kind == Kind::PerfectBinary) return std::abs(position - location) < 1e-9 ? 1.0 : 0.0;
  const double d = location - position;
  return peak / (d * d + 1.0);
}

double Sensor::likelihood(double reading, double position) const {
  const double mu = mean(position);
  if (kind == Kind::PerfectBinary) return reading == mu ? 1.0 : 0.0;
  const double s = std::sqrt(variance);
  return normal_pdf((reading - mu) / s) / s;
}

double Sensor::likelihood_terminal(double reading) const {
  if (kind == Kind::PerfectBinary) return reading == 0.0 ? 1.0 : 0.0;
  const double s = std::sqrt(variance);
  return normal_pdf(reading / s) / s;
}

double Sensor::sample(const ObjectState& b, Rng& rng) const {
  const double mu = b.terminal ? mean_terminal() : mean(b.position);
  if (kind == Kind::PerfectBinary) return mu;
  return mu + std::sqrt(variance) * std::normal_distribution<double>(0.0, 1.0)(rng);
}

double DistanceMeasure::between(double b, double estimate) const {
  if (kind_ == Kind::Hamming) return std::abs(b - estimate) < 1e-9 ? 0.0 : 1.0;
  const double d = estimate - b;
  return d * d;
}

double DistanceMeasure::operator()(const ObjectState& b, double estimate) const {
  if (b.terminal) throw InvalidArgument("distance is undefined for the terminal state");
  return between(b.position, estimate);
}

// ---------------------------------------------------------------------------

int SleepState::awake_count() const {
  return static_cast<int>(std::count(timers.begin(), timers.end(), 0));
}

SleepState residual_step(const SleepState& r, std::span<const int> u) {
  if (static_cast<int>(u.size()) != r.size())
    throw InvalidArgument("sleep input has the wrong dimension");
  SleepState next = r;
  for (int l = 0; l < r.size(); ++l) {
    if (r.timers[l] < 0) throw InvalidArgument("negative residual sleep time");
    if (u[l] < 0) throw InvalidArgument("negative sleep input");
    if (r.timers[l] == kNeverWake)
      next.timers[l] = kNeverWake;
    else if (r.timers[l] > 0)
      next.timers[l] = r.timers[l] - 1;
    else
      next.timers[l] = u[l];
  }
  return next;
}

// ---------------------------------------------------------------------------

const FiniteKernel& NetworkModel::finite_kernel() const {
  if (const auto* k = std::get_if<FiniteKernel>(&motion)) return *k;
  throw InvalidArgument("network '" + name + "' has no finite kernel");
}

const GaussianWalk& NetworkModel::walk() const {
  if (const auto* w = std::get_if<GaussianWalk>(&motion)) return *w;
  throw InvalidArgument("network '" + name + "' has no continuous motion model");
}

NetworkModel NetworkModel::with_energy_price(double c) const {
  if (!(c > 0.0)) throw InvalidArgument("energy price must be positive");
  NetworkModel copy = *this;
  copy.energy_price = c;
  return copy;
}

void NetworkModel::validate() const {
  if (!(energy_price > 0.0)) throw ConfigError("energy price must be positive");
  if (space.is_finite() != std::holds_alternative<FiniteKernel>(motion))
    throw ConfigError("motion model does not match the state space");
  if (space.is_finite()) {
    const auto& k = finite_kernel();
    if (k.num_locations() != space.size())
      throw ConfigError("kernel size does not match the number of locations");
    absorption_times(k);
    if (start.terminal || start.index < 0 || start.index >= space.size())
      throw ConfigError("start state must be an in-network location");
  } else {
    const auto& w = walk();
    if (!(w.variance > 0.0)) throw ConfigError("walk variance must be positive");
    if (!space.contains(start.position)) throw ConfigError("start state outside the network");
  }
  if (sensors.empty()) throw ConfigError("network has no sensors");
  const double slack = space.is_finite() ? 1.0 : 0.0;
  for (const auto& s : sensors) {
    if (s.kind == Sensor::Kind::GaussianRss && !(s.variance > 0.0))
      throw ConfigError("gaussian sensor variance must be positive");
    if (s.location < space.lo() - slack || s.location > space.hi() + slack)
      throw ConfigError("sensor location outside the network");
  }
  if (!(distance.bound() > 0.0)) throw ConfigError("distance bound must be positive");
}

ObjectState NetworkModel::sample_next(const ObjectState& b, Rng& rng) const {
  if (b.terminal) return b;
  if (space.is_finite()) {
    const int j = finite_kernel().sample(b.index, rng);
    return j == space.terminal_index() ? ObjectState::exited() : space.state(j);
  }
  const auto y = walk().sample(b.position, rng);
  return y ? ObjectState::at(*y) : ObjectState::exited();
}

DenseBelief kernel_predict(const NetworkModel& model, const DenseBelief& p, int steps) {
  return {model.finite_kernel().predict(p.mass, steps)};
}

Observation observe(const NetworkModel& model, const ObjectState& b, const SleepState& r_next,
                    Rng& rng) {
  Observation s;
  s.readings.resize(model.num_sensors());
  for (int l = 0; l < model.num_sensors(); ++l)
    if (r_next.awake(l)) s.readings[l] = model.sensors[l].sample(b, rng);
  s.exited = b.terminal;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

const std::vector<double> kSensorLocations{1.36,  1.61,  3.91,  8.09,  11.96,
                                           13.39, 13.52, 13.66, 16.60, 18.68};

}  // namespace

std::map<int, double> network_b_steps() {
  const double p0 = 0.3125, p1 = 0.2344, p2 = 0.0938, p3 = 0.0156;
  std::map<int, double> steps{{-3, p3}, {-2, p2}, {-1, p1}, {0, p0}, {1, p1}, {2, p2}, {3, p3}};
  double total = 0.0;
  for (auto& [d, p] : steps) total += p;
  for (auto& [d, p] : steps) p /= total;
  return steps;
}

NetworkModel network_a() {
  NetworkModel net{.name = "A",
                   .space = StateSpace::integers(1, 41),
                   .motion = FiniteKernel::from_steps(41, {{-1, 0.5}, {1, 0.5}}),
                   .sensors = {},
                   .distance = DistanceMeasure::hamming(),
                   .energy_price = 0.1,
                   .start = {}};
  for (int i = 1; i <= 41; ++i) net.sensors.push_back(Sensor::binary(i));
  net.start = net.space.state(20);
  return net;
}

NetworkModel network_b() {
  NetworkModel net{.name = "B",
                   .space = StateSpace::integers(1, 21),
                   .motion = FiniteKernel::from_steps(21, network_b_steps()),
                   .sensors = {},
                   .distance = DistanceMeasure::hamming(),
                   .energy_price = 0.1,
                   .start = {}};
  for (double x : kSensorLocations) net.sensors.push_back(Sensor::gaussian(x));
  net.start = net.space.state(10);
  return net;
}

NetworkModel network_c() {
  NetworkModel net{.name = "C",
                   .space = StateSpace::continuous(1.0, 21.0),
                   .motion = GaussianWalk{1.0, 1.0, 21.0},
                   .sensors = {},
                   .distance = DistanceMeasure::squared_euclidean(400.0),
                   .energy_price = 0.1,
                   .start = {}};
  for (double x : kSensorLocations) net.sensors.push_back(Sensor::gaussian(x));
  net.start = ObjectState::at(11.0);
  return net;
}

NetworkModel make_network(std::string_view name) {
  if (name == "A" || name == "a") return network_a();
  if (name == "B" || name == "b") return network_b();
  if (name == "C" || name == "c") return network_c();
  throw ConfigError("unknown builtin network '" + std::string(name) + "' (expected A, B or C)");
}

}  // namespace sleeptrack

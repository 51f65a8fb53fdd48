#include "sleeptrack/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_likelihood(const Sensor& sensor, double reading, double position) {
  const double mu = sensor.mean(position);
  if (sensor.kind == Sensor::Kind::PerfectBinary) return reading == mu ? 0.0 : kNegInf;
  const double z = reading - mu;
  return -0.5 * z * z / sensor.variance;
}

void check_erasures(const NetworkModel& model, const Observation& s, const SleepState& r_next) {
  if (static_cast<int>(s.readings.size()) != model.num_sensors() ||
      r_next.size() != model.num_sensors())
    throw InvalidArgument("observation/sleep state dimension mismatch");
  for (int l = 0; l < model.num_sensors(); ++l)
    if (s.readings[l].has_value() != r_next.awake(l))
      throw InvalidArgument("erasures must appear exactly where timers are positive");
}

bool all_neg_inf(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] > kNegInf) return false;
  return true;
}

}  // namespace

DenseBelief condition(const Eigen::VectorXd& predicted, const NetworkModel& model,
                      const Observation& s, int skip) {
  const int m = model.space.size();
  if (predicted.size() != m + 1) throw InvalidArgument("belief dimension mismatch");
  const int n = model.num_sensors();
  if (s.exited) {
    if (!(predicted[m] > 0.0))
      throw InconsistentObservation("exit reported but the object cannot have left", n);
    return DenseBelief::terminal(m);
  }
  Eigen::VectorXd logw(m);
  for (int i = 0; i < m; ++i) logw[i] = predicted[i] > 0.0 ? std::log(predicted[i]) : kNegInf;
  if (all_neg_inf(logw))
    throw InconsistentObservation("object reported in network but it must have left", n);
  for (int l = 0; l < n; ++l) {
    if (l == skip || !s.readings[l]) continue;
    const double reading = *s.readings[l];
    for (int i = 0; i < m; ++i)
      if (logw[i] > kNegInf)
        logw[i] += log_likelihood(model.sensors[l], reading, model.space.coordinate(i));
    if (all_neg_inf(logw))
      throw InconsistentObservation("reading of sensor " + std::to_string(l) +
                                        " has zero likelihood",
                                    l);
  }
  const double top = logw.maxCoeff();
  DenseBelief post{Eigen::VectorXd::Zero(m + 1)};
  for (int i = 0; i < m; ++i) post.mass[i] = logw[i] > kNegInf ? std::exp(logw[i] - top) : 0.0;
  post.mass /= post.mass.sum();
  return post;
}

DenseBelief belief_update(const DenseBelief& p, const NetworkModel& model, const Observation& s,
                          const SleepState& r_next) {
  check_erasures(model, s, r_next);
  return condition(model.finite_kernel().predict(p.mass, 1), model, s);
}

DenseBelief condition_on_reading(const DenseBelief& p, const NetworkModel& model, int l,
                                 double reading) {
  const int m = model.space.size();
  Eigen::VectorXd logw(m);
  for (int i = 0; i < m; ++i)
    logw[i] = p.mass[i] > 0.0 ? std::log(p.mass[i]) + log_likelihood(model.sensors[l], reading,
                                                                      model.space.coordinate(i))
                              : kNegInf;
  if (all_neg_inf(logw))
    throw InconsistentObservation("reading of sensor " + std::to_string(l) + " is impossible", l);
  const double top = logw.maxCoeff();
  DenseBelief post{Eigen::VectorXd::Zero(m + 1)};
  for (int i = 0; i < m; ++i) post.mass[i] = logw[i] > kNegInf ? std::exp(logw[i] - top) : 0.0;
  post.mass /= post.mass.sum();
  return post;
}

// ---------------------------------------------------------------------------

ParticleBelief systematic_resample(const ParticleBelief& p, int count, Rng& rng) {
  const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  ParticleBelief out;
  out.positions.reserve(count);
  out.weights.assign(count, 1.0 / count);
  const double step = total / count;
  double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = 0.0;
  std::size_t i = 0;
  for (int k = 0; k < count; ++k) {
    while (i + 1 < p.weights.size() && cumulative + p.weights[i] <= u) {
      cumulative += p.weights[i];
      ++i;
    }
    out.positions.push_back(p.positions[i]);
    u += step;
  }
  return out;
}

ParticleUpdate particle_update(const ParticleBelief& p, const NetworkModel& model,
                               const Observation& s, const SleepState& r_next, Rng& rng) {
  check_erasures(model, s, r_next);
  const auto& walk = model.walk();
  const int count = p.size();
  if (count < 2) throw InvalidArgument("particle filter needs at least two particles");

  ParticleBelief moved;
  moved.positions.resize(count);
  std::vector<bool> alive(count);
  for (int i = 0; i < count; ++i) {
    const auto y = walk.sample(p.positions[i], rng);
    alive[i] = y.has_value();
    moved.positions[i] = y.value_or(p.positions[i]);
  }
  if (s.exited) {
    moved.weights.assign(count, 0.0);
    moved.terminal_mass = 1.0;
    return {std::move(moved), false};
  }

  std::vector<double> logw(count, kNegInf);
  for (int i = 0; i < count; ++i) {
    if (!alive[i] || !(p.weights[i] > 0.0)) continue;
    double lw = std::log(p.weights[i]);
    for (int l = 0; l < model.num_sensors(); ++l)
      if (s.readings[l]) lw += log_likelihood(model.sensors[l], *s.readings[l], moved.positions[i]);
    logw[i] = lw;
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  bool degenerate = !(top > kNegInf) || !std::isfinite(top);
  moved.weights.assign(count, 0.0);
  if (!degenerate) {
    for (int i = 0; i < count; ++i)
      moved.weights[i] = logw[i] > kNegInf ? std::exp(logw[i] - top) : 0.0;
  } else {
    // Prediction-only fallback: keep surviving particles, or re-draw moves
    // that stay inside when every particle left.
    bool any_alive = false;
    for (int i = 0; i < count; ++i)
      if (alive[i]) {
        moved.weights[i] = 1.0;
        any_alive = true;
      }
    if (!any_alive) {
      for (int i = 0; i < count; ++i) {
        std::optional<double> y;
        for (int tries = 0; tries < 1000 && !y; ++tries) y = walk.sample(p.positions[i], rng);
        moved.positions[i] = y.value_or(std::clamp(p.positions[i], walk.lo, walk.hi));
        moved.weights[i] = 1.0;
      }
    }
  }
  const double total = std::accumulate(moved.weights.begin(), moved.weights.end(), 0.0);
  for (double& w : moved.weights) w /= total;
  return {systematic_resample(moved, count, rng), degenerate};
}

// ---------------------------------------------------------------------------

double estimate(const DenseBelief& p, const StateSpace& space, const DistanceMeasure& dm) {
  const int m = space.size();
  const double mass = p.in_network_mass();
  if (!(mass > 0.0)) throw EstimatorUndefined("belief has no in-network mass");
  if (dm.kind() == DistanceMeasure::Kind::Hamming) {
    int best = -1;
    for (int i = 0; i < m; ++i) {
      if (best < 0 || p.mass[i] > p.mass[best] ||
          (p.mass[i] == p.mass[best] && space.coordinate(i) < space.coordinate(best)))
        best = i;
    }
    return space.coordinate(best);
  }
  double mean = 0.0;
  for (int i = 0; i < m; ++i) mean += p.mass[i] * space.coordinate(i);
  return mean / mass;
}

double estimate(const ParticleBelief& p, const DistanceMeasure& dm) {
  if (dm.kind() != DistanceMeasure::Kind::SquaredEuclidean)
    throw InvalidArgument("particle beliefs support squared-Euclidean cost only");
  double total = 0.0, mean = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    total += p.weights[i];
    mean += p.weights[i] * p.positions[i];
  }
  if (!(total > 0.0)) throw EstimatorUndefined("belief has no in-network mass");
  return mean / total;
}

double estimate(const Belief& p, const NetworkModel& model) {
  if (const auto* d = std::get_if<DenseBelief>(&p)) return estimate(*d, model.space, model.distance);
  return estimate(std::get<ParticleBelief>(p), model.distance);
}

double bayes_risk(const DenseBelief& p, const StateSpace& space, const DistanceMeasure& dm,
                  double estimate) {
  double risk = 0.0;
  for (int i = 0; i < space.size(); ++i)
    if (p.mass[i] > 0.0) risk += p.mass[i] * dm.between(space.coordinate(i), estimate);
  return risk;
}

double expected_tracking_cost(const DenseBelief& p, const StateSpace& space,
                              const DistanceMeasure& dm) {
  const double mass = p.in_network_mass();
  if (!(mass > 0.0)) return 0.0;
  if (dm.kind() == DistanceMeasure::Kind::Hamming)
    return std::max(0.0, 1.0 - p.in_network().maxCoeff() / mass);
  const int m = space.size();
  double mean = 0.0, second = 0.0;
  for (int i = 0; i < m; ++i) {
    mean += p.mass[i] * space.coordinate(i);
    second += p.mass[i] * space.coordinate(i) * space.coordinate(i);
  }
  mean /= mass;
  return std::max(0.0, second / mass - mean * mean);
}

double expected_tracking_cost(const ParticleBelief& p, const DistanceMeasure& dm) {
  if (dm.kind() != DistanceMeasure::Kind::SquaredEuclidean)
    throw InvalidArgument("particle beliefs support squared-Euclidean cost only");
  double total = 0.0, mean = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    total += p.weights[i];
    mean += p.weights[i] * p.positions[i];
  }
  if (!(total > 0.0)) return 0.0;
  mean /= total;
  double var = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double d = p.positions[i] - mean;
    var += p.weights[i] * d * d;
  }
  return var / total;
}

}  // namespace sleeptrack

#pragma once

// Reference computations used by the unit and acceptance tests. Everything
// here is written from the model definitions with plain loops, sharing no
// code path with the library routines it checks.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sleeptrack/model.hpp"

namespace oracle {

using sleeptrack::NetworkModel;
using sleeptrack::Observation;
using sleeptrack::Rng;

inline constexpr int kNever = std::numeric_limits<int>::max();

/// Random absorbing chain on m in-network states (terminal last). Each row
/// leaves the network with probability in [min_exit, (1 + min_exit) / 2].
inline Eigen::MatrixXd random_kernel(int m, double min_exit, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (int i = 0; i < m; ++i) {
    const double exit = min_exit + 0.5 * (1.0 - min_exit) * unit(rng);
    Eigen::VectorXd g(m);
    for (int j = 0; j < m; ++j) g[j] = -std::log(1.0 - unit(rng));
    g /= g.sum();
    p.row(i).head(m) = (1.0 - exit) * g.transpose();
    p(i, m) = exit;
  }
  p(m, m) = 1.0;
  return p;
}

/// Finite model on locations 1..m with Gaussian sensors at random places.
inline NetworkModel random_model(const Eigen::MatrixXd& kernel, int sensors, double c, Rng& rng) {
  using namespace sleeptrack;
  const int m = static_cast<int>(kernel.rows()) - 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NetworkModel net{.name = "random",
                   .space = StateSpace::integers(1, m),
                   .motion = FiniteKernel(kernel),
                   .sensors = {},
                   .distance = DistanceMeasure::hamming(),
                   .energy_price = c,
                   .start = {}};
  for (int l = 0; l < sensors; ++l)
    net.sensors.push_back(Sensor::gaussian(1.0 + (m - 1) * unit(rng), 0.5 + 1.5 * unit(rng),
                                           2.0 + 8.0 * unit(rng)));
  net.start = net.space.state(0);
  return net;
}

inline double rss_mean(double peak, double location, double x) {
  const double d = location - x;
  return peak / (1.0 + d * d);
}

inline double normal_density(double y, double mu, double var) {
  return std::exp(-(y - mu) * (y - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Likelihood of one observation given the object is in state i (terminal
/// is i == m). Gaussian sensors only.
inline double observation_likelihood(const NetworkModel& model, const Observation& s, int i) {
  const int m = model.space.size();
  const bool gone = i == m;
  if (gone != s.exited) return 0.0;
  double lik = 1.0;
  for (std::size_t l = 0; l < s.readings.size(); ++l) {
    if (!s.readings[l]) continue;
    const auto& sen = model.sensors[l];
    const double mu = gone ? 0.0 : rss_mean(sen.peak, sen.location, model.space.coordinate(i));
    lik *= normal_density(*s.readings[l], mu, sen.variance);
  }
  return lik;
}

/// Posterior after the given observations, summing the joint probability of
/// every state path b_0..b_K.
inline Eigen::VectorXd enumerate_posterior(const Eigen::MatrixXd& kernel, const NetworkModel& model,
                                           const Eigen::VectorXd& prior,
                                           const std::vector<Observation>& obs) {
  const int states = static_cast<int>(kernel.rows());
  const int steps = static_cast<int>(obs.size());
  Eigen::VectorXd post = Eigen::VectorXd::Zero(states);
  std::vector<int> path(steps + 1, 0);
  for (;;) {
    double w = prior[path[0]];
    for (int k = 1; k <= steps && w > 0.0; ++k)
      w *= kernel(path[k - 1], path[k]) * observation_likelihood(model, obs[k - 1], path[k]);
    post[path[steps]] += w;
    int pos = steps;
    while (pos >= 0 && ++path[pos] == states) path[pos--] = 0;
    if (pos < 0) break;
  }
  return post / post.sum();
}

/// Expected per-step sleeping costs a_j = (x Q^j) . w and survivals
/// S_j = sum(x Q^j), until the surviving mass drops below 1e-16.
struct Series {
  std::vector<double> a, survive;
};

inline Series series(const Eigen::MatrixXd& q, const Eigen::VectorXd& w, Eigen::RowVectorXd x,
                     int max_len = 100000) {
  Series s;
  for (int j = 0; j < max_len; ++j) {
    double mass = 0.0, cost = 0.0;
    for (Eigen::Index b = 0; b < x.size(); ++b) {
      mass += x[b];
      cost += x[b] * w[b];
    }
    s.a.push_back(cost);
    s.survive.push_back(mass);
    if (mass < 1e-16) break;
    Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      for (Eigen::Index k = 0; k < x.size(); ++k) next[k] += x[i] * q(i, k);
    x = next;
  }
  s.a.push_back(0.0);
  s.survive.push_back(0.0);
  return s;
}

struct OpenLoopSolution {
  double value = 0.0;
  int first_choice = kNever;  // smallest minimising u at offset 0
  std::vector<double> first_costs;  // cost of each finite u at offset 0
  double never_cost = 0.0;
};

/// Finite-horizon backward induction for a sensor that never sees new
/// observations: at offset j it sleeps u more steps (paying a_j..a_{j+u-1}),
/// then wakes for one step (paying c S_{j+u+1}) and decides again.
inline OpenLoopSolution open_loop_backward(const Series& s, double c) {
  const int h = static_cast<int>(s.a.size()) - 1;
  std::vector<double> v(h + 1, 0.0), tail(h + 1, 0.0);
  for (int j = h - 1; j >= 0; --j) tail[j] = tail[j + 1] + s.a[j];
  OpenLoopSolution out;
  for (int j = h - 1; j >= 0; --j) {
    double best = 0.0;
    int arg = kNever;
    double cum = 0.0;
    for (int u = 0; j + u + 1 <= h; ++u) {
      const double cand = cum + c * s.survive[j + u + 1] + v[j + u + 1];
      if (j == 0) out.first_costs.push_back(cand);
      if (u == 0 || cand < best - 1e-12 * (1.0 + std::abs(best))) {
        best = cand;
        arg = u;
      }
      cum += s.a[j + u];
    }
    if (tail[j] < best - 1e-12 * (1.0 + std::abs(best))) {
      best = tail[j];
      arg = kNever;
    }
    v[j] = best;
    if (j == 0) out.first_choice = arg;
  }
  out.value = v[0];
  out.never_cost = tail[0];
  return out;
}

struct SleepValues {
  Eigen::VectorXd value;
  Eigen::MatrixXd by_input;  // m x (u_max + 2): inputs 0..u_max, then never
  int iterations = 0;
};

/// Value iteration on the chain expanded with the sensor's timer. With the
/// object at b and the timer set to r for the coming step: r = 0 pays
/// wake(b) + c on survival and decides afresh at the next state; r >= 1 pays
/// asleep(b) and counts down; "never" keeps paying asleep(b) forever.
inline SleepValues timer_value_iteration(const Eigen::MatrixXd& q, const Eigen::VectorXd& asleep,
                                         const Eigen::VectorXd& wake, double c, int u_max,
                                         double tol = 1e-15, int max_iter = 1'000'000) {
  const auto m = q.rows();
  const int cols = u_max + 2;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, cols);
  SleepValues out;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd j(m);
    for (Eigen::Index b = 0; b < m; ++b) j[b] = w.row(b).minCoeff();
    Eigen::MatrixXd next(m, cols);
    for (Eigen::Index b = 0; b < m; ++b) {
      double wake_next = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) wake_next += q(b, k) * (c + j[k]);
      next(b, 0) = wake[b] + wake_next;
      for (int r = 1; r <= u_max; ++r) {
        double cont = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) cont += q(b, k) * w(k, r - 1);
        next(b, r) = asleep[b] + cont;
      }
      double cont = 0.0;
      for (Eigen::Index k = 0; k < m; ++k) cont += q(b, k) * w(k, cols - 1);
      next(b, cols - 1) = asleep[b] + cont;
    }
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = next;
    out.iterations = it;
    if (change < tol) break;
  }
  out.by_input = w;
  out.value.resize(m);
  for (Eigen::Index b = 0; b < m; ++b) out.value[b] = w.row(b).minCoeff();
  return out;
}

/// Expected total Hamming error of the prediction-only MAP estimate from a
/// known start, over steps 1..exit-1.
inline double prediction_only_error(const Eigen::MatrixXd& kernel, int start) {
  const auto m = kernel.rows() - 1;
  Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(m);
  x[start] = 1.0;
  double total = 0.0;
  for (int k = 0; k < 10'000'000; ++k) {
    Eigen::RowVectorXd next = Eigen::RowVectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i)
      if (x[i] != 0.0)
        for (Eigen::Index j = 0; j < m; ++j) next[j] += x[i] * kernel(i, j);
    x = next;
    const double mass = x.sum();
    if (mass < 1e-16) break;
    total += mass - x.maxCoeff();
  }
  return total;
}

/// Symmetric +-1 walk on 1..n exiting past either end: expected exit time
/// from location i is i (n + 1 - i).
inline double gamblers_ruin_time(int n, int i) { return static_cast<double>(i) * (n + 1 - i); }

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

/// Exact mean and per-sample standard deviation of the one-step cost
/// reduction from waking sensor l alone, for a finite model with Hamming
/// cost and Gaussian sensors, by quadrature over the reading.
inline MeanSd one_sensor_reduction(const NetworkModel& model, const Eigen::MatrixXd& kernel,
                                   int from, int l, int nodes = 4001) {
  const int m = model.space.size();
  const auto& sen = model.sensors[l];
  std::vector<double> prior(m), mu(m);
  double survive = 0.0;
  for (int i = 0; i < m; ++i) {
    prior[i] = kernel(from, i);
    survive += prior[i];
    mu[i] = rss_mean(sen.peak, sen.location, model.space.coordinate(i));
  }
  double pmax = 0.0;
  for (double p : prior) pmax = std::max(pmax, p / survive);
  const double risk_asleep = 1.0 - pmax;
  const double sd = std::sqrt(sen.variance);
  const double lo = *std::min_element(mu.begin(), mu.end()) - 12.0 * sd;
  const double hi = *std::max_element(mu.begin(), mu.end()) + 12.0 * sd;
  const double h = (hi - lo) / (nodes - 1);
  double first = 0.0, second = 0.0;
  for (int t = 0; t < nodes; ++t) {
    const double y = lo + h * t;
    const double weight = (t == 0 || t == nodes - 1) ? 0.5 * h : h;
    double total = 0.0, best = 0.0;
    std::vector<double> joint(m);
    for (int i = 0; i < m; ++i) {
      joint[i] = prior[i] * normal_density(y, mu[i], sen.variance);
      total += joint[i];
      best = std::max(best, joint[i]);
    }
    if (!(total > 0.0)) continue;
    const double diff = risk_asleep - (1.0 - best / total);
    // total is the density of y jointly with "still in the network"
    first += weight * total * diff;
    second += weight * total * diff * diff;
  }
  return {first, std::sqrt(std::max(0.0, second - first * first))};
}

}  // namespace oracle

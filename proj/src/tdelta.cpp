#include "sleeptrack/tdelta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sleeptrack/errors.hpp"
#include "sleeptrack/filter.hpp"

namespace sleeptrack {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kQuadratureNodes = 241;

double reading_log_likelihood(const Sensor& sensor, double reading, double position) {
  const double mu = sensor.mean(position);
  if (sensor.kind == Sensor::Kind::PerfectBinary) return reading == mu ? 0.0 : kNegInf;
  const double z = reading - mu;
  return -0.5 * z * z / sensor.variance;
}

/// Posterior risk of the optimal estimator for weights exp(logw) on points.
double weighted_cost(const Eigen::VectorXd& logw, const std::vector<double>& points,
                     const DistanceMeasure& dm) {
  const double top = logw.maxCoeff();
  if (!(top > kNegInf)) return 0.0;
  double total = 0.0, best = 0.0, mean = 0.0, second = 0.0;
  for (Eigen::Index i = 0; i < logw.size(); ++i) {
    if (!(logw[i] > kNegInf)) continue;
    const double w = std::exp(logw[i] - top);
    total += w;
    best = std::max(best, w);
    mean += w * points[i];
    second += w * points[i] * points[i];
  }
  if (dm.kind() == DistanceMeasure::Kind::Hamming) return std::max(0.0, 1.0 - best / total);
  mean /= total;
  return std::max(0.0, second / total - mean * mean);
}

std::vector<double> default_anchors(const StateSpace& space) {
  std::vector<double> anchors;
  for (double x = std::ceil(space.lo()); x <= space.hi() + 1e-12; x += 1.0) anchors.push_back(x);
  if (anchors.size() < 2) anchors = {space.lo(), space.hi()};
  return anchors;
}

ObjectState row_state(const NetworkModel& model, const TDeltaTable& table, int row) {
  if (model.is_finite()) return model.space.state(row);
  return ObjectState::at(table.anchors()[row]);
}

}  // namespace

std::string to_string(TDeltaSource source) {
  switch (source) {
    case TDeltaSource::Asleep: return "asleep";
    case TDeltaSource::Greedy: return "greedy";
    case TDeltaSource::Learned: return "learned";
    case TDeltaSource::File: return "file";
  }
  return "unknown";
}

TDeltaSource parse_tdelta_source(std::string_view text) {
  if (text == "asleep") return TDeltaSource::Asleep;
  if (text == "greedy") return TDeltaSource::Greedy;
  if (text == "learned" || text == "learning") return TDeltaSource::Learned;
  if (text == "file") return TDeltaSource::File;
  throw ConfigError("unknown tdelta source '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

TDeltaTable::TDeltaTable(Eigen::MatrixXd values, std::vector<double> anchors, bool interpolated,
                         TDeltaSource provenance)
    : values_(std::move(values)),
      anchors_(std::move(anchors)),
      interpolated_(interpolated),
      provenance_(provenance) {
  if (static_cast<Eigen::Index>(anchors_.size()) != values_.rows())
    throw InvalidArgument("one anchor per table row is required");
  for (std::size_t i = 1; i < anchors_.size(); ++i)
    if (interpolated_ && !(anchors_[i] > anchors_[i - 1]))
      throw InvalidArgument("anchor coordinates must be strictly increasing");
}

TDeltaTable TDeltaTable::zeros(const NetworkModel& model, TDeltaSource provenance) {
  const int n = model.num_sensors();
  if (model.is_finite())
    return {Eigen::MatrixXd::Zero(model.space.size(), n), model.space.coordinates(), false,
            provenance};
  auto anchors = default_anchors(model.space);
  return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(anchors.size()), n), anchors, true,
          provenance};
}

double TDeltaTable::eval(const ObjectState& b, int l) const {
  if (b.terminal) throw InvalidArgument("T-delta is undefined at the terminal state");
  if (!interpolated_) {
    if (b.index < 0 || b.index >= rows()) throw InvalidArgument("state index outside the table");
    return values_(b.index, l);
  }
  return eval_at(b.position, l);
}

double TDeltaTable::eval_at(double x, int l) const {
  if (x <= anchors_.front()) return values_(0, l);
  if (x >= anchors_.back()) return values_(rows() - 1, l);
  const auto hi = std::upper_bound(anchors_.begin(), anchors_.end(), x) - anchors_.begin();
  const auto lo = hi - 1;
  const double t = (x - anchors_[lo]) / (anchors_[hi] - anchors_[lo]);
  return (1.0 - t) * values_(lo, l) + t * values_(hi, l);
}

void TDeltaTable::validate() const {
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (!std::isfinite(values_(i, j)) || values_(i, j) < 0.0)
        throw InvalidArgument("T-delta entries must be finite and non-negative");
}

// ---------------------------------------------------------------------------

OneStepSampler::OneStepSampler(const NetworkModel& model, const ObjectState& from, int samples,
                               Rng& rng)
    : model_(&model), samples_(samples), n_(model.num_sensors()) {
  if (samples < 1) throw InvalidArgument("need at least one Monte-Carlo sample");
  if (from.terminal) throw InvalidArgument("cannot simulate from the terminal state");
  if (model.is_finite()) {
    const int m = model.space.size();
    support_ = model.space.coordinates();
    const Eigen::VectorXd pred =
        model.finite_kernel().predict(DenseBelief::point(m, from.index).mass, 1);
    log_prior_.resize(m);
    for (int i = 0; i < m; ++i) log_prior_[i] = pred[i] > 0.0 ? std::log(pred[i]) : kNegInf;
  } else {
    const auto& walk = model.walk();
    const double s = std::sqrt(walk.variance);
    const double lo = std::max(walk.lo, from.position - 8.0 * s);
    const double hi = std::min(walk.hi, from.position + 8.0 * s);
    const double h = (hi - lo) / (kQuadratureNodes - 1);
    support_.resize(kQuadratureNodes);
    log_prior_.resize(kQuadratureNodes);
    for (int i = 0; i < kQuadratureNodes; ++i) {
      support_[i] = lo + h * i;
      const double w = (i == 0 || i == kQuadratureNodes - 1) ? 0.5 * h : h;
      const double dens = w * walk.density(from.position, support_[i]);
      log_prior_[i] = dens > 0.0 ? std::log(dens) : kNegInf;
    }
  }
  const auto k = static_cast<Eigen::Index>(support_.size());
  exited_.resize(samples);
  log_lik_.resize(samples);
  for (int s = 0; s < samples; ++s) {
    const ObjectState next = model.sample_next(from, rng);
    exited_[s] = next.terminal;
    if (next.terminal) continue;
    auto& ll = log_lik_[s];
    ll.resize(k, n_);
    for (int l = 0; l < n_; ++l) {
      const double reading = model.sensors[l].sample(next, rng);
      for (Eigen::Index i = 0; i < k; ++i)
        ll(i, l) = reading_log_likelihood(model.sensors[l], reading, support_[i]);
    }
  }
}

double OneStepSampler::mean_cost(const std::vector<bool>& awake) const {
  double total = 0.0;
  Eigen::VectorXd logw(log_prior_.size());
  for (int s = 0; s < samples_; ++s) {
    if (exited_[s]) continue;
    logw = log_prior_;
    for (int l = 0; l < n_; ++l)
      if (awake[l]) logw += log_lik_[s].col(l);
    total += weighted_cost(logw, support_, model_->distance);
  }
  return total / samples_;
}

double tdelta_asleep(const NetworkModel& model, const ObjectState& b, int l, int samples,
                     Rng& rng) {
  OneStepSampler sampler(model, b, samples, rng);
  std::vector<bool> awake(model.num_sensors(), false);
  const double asleep = sampler.mean_cost(awake);
  awake[l] = true;
  return std::abs(sampler.mean_cost(awake) - asleep);
}

namespace {

GreedyRow greedy_from_sampler(const NetworkModel& model, const OneStepSampler& sampler) {
  const int n = model.num_sensors();
  std::vector<bool> awake(n, false);
  double base = sampler.mean_cost(awake);
  GreedyRow out;
  while (static_cast<int>(out.baseline.size()) < n) {
    int best = -1;
    double best_reduction = -std::numeric_limits<double>::infinity();
    double best_cost = base;
    for (int l = 0; l < n; ++l) {
      if (awake[l]) continue;
      awake[l] = true;
      const double cost = sampler.mean_cost(awake);
      awake[l] = false;
      if (base - cost > best_reduction) {
        best_reduction = base - cost;
        best = l;
        best_cost = cost;
      }
    }
    if (best < 0 || best_reduction < model.energy_price) break;
    awake[best] = true;
    out.baseline.push_back(best);
    base = best_cost;
  }
  out.row.resize(n);
  for (int l = 0; l < n; ++l) {
    awake[l] = !awake[l];
    out.row[l] = std::abs(sampler.mean_cost(awake) - base);
    awake[l] = !awake[l];
  }
  return out;
}

}  // namespace

GreedyRow tdelta_greedy(const NetworkModel& model, const ObjectState& b, int samples, Rng& rng) {
  OneStepSampler sampler(model, b, samples, rng);
  return greedy_from_sampler(model, sampler);
}

TDeltaTable build_tdelta_table(const NetworkModel& model, TDeltaSource source, int samples,
                               std::uint64_t seed) {
  if (source != TDeltaSource::Asleep && source != TDeltaSource::Greedy)
    throw InvalidArgument("only asleep and greedy baselines are built directly");
  TDeltaTable table = TDeltaTable::zeros(model, source);
  const int n = model.num_sensors();
  for (int row = 0; row < table.rows(); ++row) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(row), static_cast<std::uint64_t>(source));
    OneStepSampler sampler(model, row_state(model, table, row), samples, rng);
    if (source == TDeltaSource::Greedy) {
      table.values().row(row) = greedy_from_sampler(model, sampler).row.transpose();
      continue;
    }
    std::vector<bool> awake(n, false);
    const double asleep = sampler.mean_cost(awake);
    for (int l = 0; l < n; ++l) {
      awake[l] = true;
      table.at(row, l) = std::abs(sampler.mean_cost(awake) - asleep);
      awake[l] = false;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------

double predicted_increase(const TDeltaTable& table, const DenseBelief& p_prev, int l) {
  return p_prev.in_network().dot(table.column(l));
}

double observed_increase(const NetworkModel& model, const DenseBelief& p_prev,
                         const DenseBelief& p_now, const Observation& s_now,
                         const SleepState& r_now, int l, Rng& rng) {
  const auto& space = model.space;
  const auto& dm = model.distance;
  if (r_now.awake(l)) {
    const Eigen::VectorXd predicted = model.finite_kernel().predict(p_prev.mass, 1);
    const DenseBelief without = condition(predicted, model, s_now, l);
    return expected_tracking_cost(without, space, dm) - expected_tracking_cost(p_now, space, dm);
  }
  const double mass = p_now.in_network_mass();
  if (!(mass > 0.0)) return 0.0;
  double u = std::uniform_real_distribution<double>(0.0, mass)(rng);
  int b = 0;
  for (; b < space.size() - 1; ++b) {
    if (u < p_now.mass[b]) break;
    u -= p_now.mass[b];
  }
  while (b > 0 && !(p_now.mass[b] > 0.0)) --b;
  const double reading = model.sensors[l].sample(space.state(b), rng);
  const DenseBelief with = condition_on_reading(p_now, model, l, reading);
  return expected_tracking_cost(p_now, space, dm) - expected_tracking_cost(with, space, dm);
}

void learn_step(TDeltaTable& table, const DenseBelief& p_prev, const DenseBelief& p_now,
                const Observation& s_now, const SleepState& r_now, const NetworkModel& model,
                double alpha, Rng& rng) {
  if (!model.is_finite() || table.interpolated())
    throw InvalidArgument("learning is implemented for finite state spaces");
  if (!(alpha >= 0.0)) throw InvalidArgument("step size must be non-negative");
  const int m = table.rows();
  for (int l = 0; l < table.sensors(); ++l) {
    const double predicted = predicted_increase(table, p_prev, l);
    const double observed = observed_increase(model, p_prev, p_now, s_now, r_now, l, rng);
    const double error = predicted - observed;
    for (int b = 0; b < m; ++b) {
      if (!(p_prev.mass[b] > 0.0)) continue;
      table.at(b, l) = std::max(0.0, table.at(b, l) - 2.0 * alpha * p_prev.mass[b] * error);
    }
  }
}

}  // namespace sleeptrack

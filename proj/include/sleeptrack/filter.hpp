#pragma once

#include "sleeptrack/belief.hpp"
#include "sleeptrack/model.hpp"

namespace sleeptrack {

inline constexpr int kDefaultParticles = 512;

/// Exact Bayes step: predicts p through the kernel and conditions on s.
/// Throws InconsistentObservation when the posterior would be all zero.
DenseBelief belief_update(const DenseBelief& p, const NetworkModel& model, const Observation& s,
                          const SleepState& r_next);

/// Conditions an already predicted distribution on s. Sensor `skip` (if
/// >= 0) contributes likelihood 1.
DenseBelief condition(const Eigen::VectorXd& predicted, const NetworkModel& model,
                      const Observation& s, int skip = -1);

/// Folds one extra reading of sensor l into a belief (no prediction step).
DenseBelief condition_on_reading(const DenseBelief& p, const NetworkModel& model, int l,
                                 double reading);

struct ParticleUpdate {
  ParticleBelief belief;
  /// Every particle had zero weight; the belief fell back to the prediction.
  bool degenerate = false;
};

/// Bootstrap step: move, weight, systematic resample back to the same count.
ParticleUpdate particle_update(const ParticleBelief& p, const NetworkModel& model,
                               const Observation& s, const SleepState& r_next, Rng& rng);

/// Resamples `count` equally weighted particles (in-network weights only).
ParticleBelief systematic_resample(const ParticleBelief& p, int count, Rng& rng);

/// Optimal estimator: MAP location for Hamming cost (ties to the smallest
/// coordinate), posterior mean for squared-Euclidean cost.
double estimate(const DenseBelief& p, const StateSpace& space, const DistanceMeasure& dm);
double estimate(const ParticleBelief& p, const DistanceMeasure& dm);
double estimate(const Belief& p, const NetworkModel& model);

/// Posterior risk of the optimal estimator, conditioned on the object being
/// in the network (0 when it certainly is not).
double expected_tracking_cost(const DenseBelief& p, const StateSpace& space,
                              const DistanceMeasure& dm);
double expected_tracking_cost(const ParticleBelief& p, const DistanceMeasure& dm);

/// sum_b p(b) d(b, estimate) over in-network states.
double bayes_risk(const DenseBelief& p, const StateSpace& space, const DistanceMeasure& dm,
                  double estimate);

}  // namespace sleeptrack

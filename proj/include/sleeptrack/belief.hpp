#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace sleeptrack {

/// Probability mass over the m in-network states plus the terminal state
/// (stored last, at index m).
struct DenseBelief {
  Eigen::VectorXd mass;

  static DenseBelief point(int m, int index) {
    DenseBelief p{Eigen::VectorXd::Zero(m + 1)};
    p.mass[index] = 1.0;
    return p;
  }
  static DenseBelief terminal(int m) { return point(m, m); }

  int num_locations() const { return static_cast<int>(mass.size()) - 1; }
  double terminal_mass() const { return mass[mass.size() - 1]; }
  double in_network_mass() const { return mass.head(mass.size() - 1).sum(); }
  auto in_network() const { return mass.head(mass.size() - 1); }
};

/// Weighted particle cloud over a continuous interval. Particles that have
/// left the network are folded into `terminal_mass`.
struct ParticleBelief {
  std::vector<double> positions;
  std::vector<double> weights;  // sum to 1 - terminal_mass
  double terminal_mass = 0.0;

  static ParticleBelief point(double x, int count) {
    return ParticleBelief{std::vector<double>(count, x),
                          std::vector<double>(count, 1.0 / count), 0.0};
  }
  int size() const { return static_cast<int>(positions.size()); }
  double in_network_mass() const { return 1.0 - terminal_mass; }
};

using Belief = std::variant<DenseBelief, ParticleBelief>;

}  // namespace sleeptrack

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "billspec/geometry.hpp"

namespace billspec {

// theta in (0, pi), measured from the positive tangent.
struct PhasePoint {
  double s = 0.0;
  double theta = 0.0;
};

struct Bounce {
  PhasePoint next;
  double advance = 0.0;  // s' - s on the lift, in (0, length)
};

Bounce billiard_step(const Domain& domain, const PhasePoint& p);
inline PhasePoint billiard_map(const Domain& domain, const PhasePoint& p) {
  return billiard_step(domain, p).next;
}

struct Trajectory {
  std::vector<PhasePoint> points;  // n + 1 entries, starting point first
  std::vector<double> lift;        // unwrapped s
  int winding = 0;
};

Trajectory iterate(const Domain& domain, const PhasePoint& start, int n);

// First and second derivatives of |x(b) - x(a)| in a and b.
struct Chord {
  double length = 0.0;
  Vec2 direction;  // (x(b) - x(a)) / length
  double cos_a = 0.0, cos_b = 0.0;
  double d_a = 0.0, d_b = 0.0;
  double d_aa = 0.0, d_bb = 0.0, d_ab = 0.0;
};

Chord chord(const Domain& domain, double a, double b);

// Differential of (s, sigma) -> (s', sigma'), sigma = -cos theta.
Eigen::Matrix2d bounce_differential(const Domain& domain, double s, double s_next);

Eigen::Matrix2d linearized_poincare(const Domain& domain, const std::vector<double>& config);

}  // namespace billspec

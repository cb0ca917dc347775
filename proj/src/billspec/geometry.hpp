#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "billspec/series.hpp"

namespace billspec {

using Vec2 = Eigen::Vector2d;

// Support function h(phi) = a_0 + sum_n (a_n cos n phi + b_n sin n phi).
// support_cos[n] is a_n (index 0 is the mean radius), support_sin[n] is b_n
// (index 0 ignored).
struct DomainSpec {
  std::vector<double> support_cos;
  std::vector<double> support_sin;
  int resolution = 0;  // 0 selects max(2048, 64 * max mode)

  static DomainSpec circle(double radius = 1.0);
  int max_mode() const;
  double radius_of_curvature(double phi) const;  // h + h''
  double support(double phi, int derivative = 0) const;
};

// A closed, positively oriented, strictly convex curve c(t), t in [0, period).
class Curve {
 public:
  virtual ~Curve() = default;
  virtual double period() const = 0;
  // Taylor coefficients of c(t + d) in d up to `order`.
  virtual Jet2 jet(double t, int order) const = 0;
  virtual double speed(double t) const;
  // Closed-form arclength from t = 0, when available.
  virtual std::optional<double> arclength(double) const { return std::nullopt; }
};

struct BoundarySample {
  Vec2 position;
  Vec2 tangent;
  Vec2 normal;  // inward: tangent rotated by +90 degrees
  double curvature = 0.0;
};

// Arclength-parametrized boundary. x(0) = (0,0) and x'(0) = (1,0).
class Domain {
 public:
  struct Tables {
    std::vector<double> s;
    std::vector<double> parameter;
    std::vector<Vec2> position;
    std::vector<double> tangent_angle;  // unwrapped, starts at 0
    std::vector<double> curvature;
  };

  Domain(std::shared_ptr<const Curve> curve, int resolution);

  double total_length() const { return length_; }
  int resolution() const { return resolution_; }
  const Tables& tables() const { return tables_; }
  const Curve& curve() const { return *curve_; }

  double wrap(double s) const;
  BoundarySample sample(double s) const;
  Vec2 position(double s) const;
  // Taylor coefficients of x(s + d) in d, arclength parametrization.
  Jet2 jet(double s, int order) const;
  double tangent_angle(double s) const;
  // m-th arclength derivative of the curvature, m <= 4.
  double curvature_derivative(double s, int m) const;

  double parameter_to_arclength(double t) const;
  double arclength_to_parameter(double s) const;

 private:
  double raw_arclength(double t) const;
  Jet2 raw_jet(double s, int order) const;

  std::shared_ptr<const Curve> curve_;
  int resolution_;
  double length_ = 0.0;
  std::vector<double> panel_t_;
  std::vector<double> panel_s_;
  Eigen::Matrix2d rotation_;
  Vec2 offset_;
  Tables tables_;
};

using DomainPtr = std::shared_ptr<const Domain>;

DomainPtr build_domain(const DomainSpec& spec);

// Compactly supported bump with value and slope zero at its center and
// second derivative -mu1 there, so the curvature shifts by +eps * mu1.
struct Bump {
  double center_s = 0.0;
  double mu1 = 0.0;
  double half_width = 0.0;
};

// Global profile sum_j C_j (1 - cos(j m (s - phase_s))), m = 2 pi order / length:
// first order contact at `order` equally spaced points. The curvature rate is
// mu1 sum_j w_j cos(j m (s - phase_s)) / sum_j w_j, so mu1 at contact.
struct HarmonicProfile {
  int order = 0;
  double phase_s = 0.0;
  double mu1 = 0.0;
  std::vector<double> overtones{1.0};  // w_1, w_2, ... for orders m, 2m, ...
};

// Normal graph over `base` with profile preload + eps * (bumps + harmonic).
// The preload is a fixed deformation that defines the reference domain
// Omega_0 = deform(family, 0); bump centers are base arclengths.
struct DeformationFamily {
  DomainPtr base;
  std::vector<Bump> preload;
  std::vector<Bump> bumps;
  std::optional<HarmonicProfile> harmonic;
  double epsilon_max = 0.05;

  // eps-independent part of the displacement.
  Series preload_jet(double s, int order) const;
  // Normal displacement rate d mu / d eps as a jet in base arclength.
  Series profile_jet(double s, int order) const;
  double profile(double s) const { return profile_jet(s, 0)[0]; }
  // d kappa / d eps at base point s; exact where the profile has contact.
  double curvature_rate(double s) const { return -profile_jet(s, 2)[2] * 2.0; }
  void validate() const;
  // The family traversed in the opposite eps direction (preload kept).
  DeformationFamily flipped() const;

  // Omega_0, built once and shared by copies of the family.
  DomainPtr reference() const;
  // Base arclength of a point given in reference arclength.
  double reference_to_base(double s) const;

 private:
  mutable std::shared_ptr<DomainPtr> reference_cache_ = std::make_shared<DomainPtr>();
};

DomainPtr deform(const DeformationFamily& family, double eps);

// Arclength coordinates in `deformed` of the base-domain points `base_s`.
std::vector<double> transport(const Domain& deformed, const std::vector<double>& base_s);
// Arclength coordinates in deform(family, eps) of reference-domain points.
std::vector<double> transport_from_reference(const DeformationFamily& family, const Domain& deformed,
                                             const std::vector<double>& reference_s);

}  // namespace billspec

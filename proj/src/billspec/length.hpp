#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "billspec/geometry.hpp"
#include "billspec/multipoly.hpp"

namespace billspec {

// Reflection points s_1..s_q on the lift: s_{i+1} - s_i in (0, length) and
// s_1 + p * length closes the polygon.
struct OrbitConfiguration {
  std::vector<double> s;
  int p = 1;
};

double length_functional(const Domain& domain, const std::vector<double>& s);
Eigen::VectorXd grad_length(const Domain& domain, const std::vector<double>& s);
Eigen::MatrixXd hessian_length(const Domain& domain, const std::vector<double>& s);

// Taylor polynomial of L(s + d) in d (q variables) up to `degree` <= 6.
RealPoly length_taylor(const Domain& domain, const std::vector<double>& s, int degree);

struct PeriodicOrbit {
  int p = 1;
  int q = 0;
  std::vector<double> s;
  double length = 0.0;
  double gradient_norm = 0.0;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;
  int rank = 0;
  int signature = 0;
  double degeneracy_tol = 1e-8;
  std::vector<double> theta;      // angle from the tangent at s_i
  std::vector<double> links;      // |x(s_{i+1}) - x(s_i)|
  std::vector<double> curvature;  // kappa(s_i)
  Eigen::Matrix2d poincare = Eigen::Matrix2d::Identity();
  double closure_error = 0.0;  // phase-space distance after q traced bounces
  int traced_winding = 0;

  double cos_normal(int i) const;  // cosine of the angle to the normal
};

// Derived data for a configuration; no criticality requirement except for
// the Poincare map, which is left as identity when the gradient is large.
PeriodicOrbit analyze_orbit(const Domain& domain, const OrbitConfiguration& config,
                            double degeneracy_tol = 1e-8);

enum class SearchMode { Critical, Maximize };

struct SearchOptions {
  SearchMode mode = SearchMode::Critical;
  int starts = 8;
  std::uint64_t seed = 1;
  double jitter = 0.05;  // relative to the mean gap
  int max_iterations = 200;
  double degeneracy_tol = 1e-8;
  std::optional<std::vector<double>> seed_config;
};

PeriodicOrbit find_periodic_orbit(const Domain& domain, int p, int q, const SearchOptions& options = {});
// Distinct orbits reached from all starts, sorted by s_1 of the canonical shift.
std::vector<PeriodicOrbit> find_periodic_orbits(const Domain& domain, int p, int q,
                                                const SearchOptions& options = {});

// Nondegenerate iff min |lambda| > tol * max |lambda|.
struct Classification {
  bool degenerate = false;
  int rank = 0;
  int signature = 0;          // full signature (meaningful when nondegenerate)
  int nonzero_signature = 0;  // signature of the eigenvalues above threshold
};

Classification classify_hessian(const Eigen::MatrixXd& h, double tol = 1e-8);
Classification classify_orbit(const PeriodicOrbit& orbit, double tol = 1e-8);

struct ProdIdentity {
  double det_hessian = 0.0;
  double det_one_minus_p = 0.0;  // signed det(Id - P)
  double offdiag_product = 0.0;  // prod of cos cos / link
  double residual = 0.0;         // with the signed determinant
  double residual_abs = 0.0;     // with |det(Id - P)|
};

ProdIdentity verify_prod_identity(const PeriodicOrbit& orbit);

struct AdjugateFactorization {
  int sign = 1;
  Eigen::VectorXd h;
  Eigen::MatrixXd adjugate;  // cofactor adjugate
  double residual = 0.0;
};

Eigen::MatrixXd adjugate(const Eigen::MatrixXd& m);
AdjugateFactorization adjugate_factorization(const Eigen::MatrixXd& hessian, double tol = 1e-8);
AdjugateFactorization adjugate_factorization(const PeriodicOrbit& orbit);

struct LoopResult {
  double length = 0.0;
  std::vector<double> s;
  double derivative = 0.0;  // d/ds of the loop function
};

LoopResult loop_function(const Domain& domain, int p, int q, double s,
                         const std::optional<std::vector<double>>& guess = std::nullopt);

struct DesignOptions {
  std::vector<double> weights;  // relative mu1 per reflection point, default all 1
  double width_fraction = 0.4;  // bump half width relative to the smallest gap
  bool harmonic = false;        // global profile with contact at q equally spaced points
  std::vector<double> overtones{1.0};  // harmonic weights for orders q, 2q, ...
  double epsilon_max = 0.05;
};

struct DesignedFamily {
  DeformationFamily family;
  std::vector<double> mu1;
  double predicted_c = 0.0;
};

DesignedFamily design_perturbation(const DomainPtr& base, const PeriodicOrbit& orbit, double target_c,
                                   const DesignOptions& options = {});
// Orbit on reference.reference(); the result keeps the reference preload.
DesignedFamily design_perturbation(const DeformationFamily& reference, const PeriodicOrbit& orbit,
                                   double target_c, const DesignOptions& options = {});

struct PreloadedFamily {
  DeformationFamily family;  // preload only; reference() is the degenerate domain
  PeriodicOrbit orbit;       // on family.reference()
  double lambda = 0.0;       // curvature shift at each reflection point
};

// Preload bumps shifting the curvature at every point of a nondegenerate
// orbit by the same lambda, chosen so the orbit becomes degenerate.
PreloadedFamily degenerate_preload(const DomainPtr& base, const PeriodicOrbit& orbit, double width_fraction = 0.45);

// Tr(adj(H_0) dH/deps) with dH_ii/deps = -2 cos(angle to normal) * curvature rate.
double predicted_c_gamma(const PeriodicOrbit& orbit, const DeformationFamily& family);

struct CFit {
  double slope = 0.0;
  double intercept = 0.0;
  double quadratic = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
  double predicted = 0.0;
  std::vector<double> eps;
  std::vector<double> det;
};

// Hessian of L at the transported base orbit in deform(family, eps).
Eigen::MatrixXd deformed_hessian(const DeformationFamily& family, const PeriodicOrbit& orbit, double eps);
CFit fit_c_gamma(const DeformationFamily& family, const PeriodicOrbit& orbit,
                 const std::vector<double>& eps_grid);

}  // namespace billspec

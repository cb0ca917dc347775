#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "billspec/feynman.hpp"
#include "billspec/geometry.hpp"
#include "billspec/length.hpp"

namespace billspec {

// c_m = (4 - 1^2)(4 - 3^2)...(4 - (2m-1)^2) / (m! 8^m sqrt(2 pi)).
double hankel_coeff(int m);
// sqrt(2 pi) c_m from the closed product.
Rational hankel_coeff_rational(int m);
// sqrt(2 pi) c_m from a_m = a_{m-1} (4 - (2m-1)^2) / (8m), a_0 = 1.
Rational hankel_coeff_recursive(int m);

struct HankelAmplitude {
  std::vector<double> c;  // c_0..c_M
  explicit HankelAmplitude(int m_max);
  int order() const { return static_cast<int>(c.size()) - 1; }
  // sum_m i^m c_m z^{-m}
  Complex series(double z) const;
  Complex series_derivative(double z) const;
};

// Cosine of the angle between the link x(s) - x(s_next) and the interior
// normal at x(s_next).
double link_cosine(const Domain& domain, double s, double s_next);

// k^{1/2} e^{i k r + 3 pi i / 4} r^{-1/2} cos(theta) sum_{m <= M} i^m c_m (k r)^{-m}.
Complex kernel_amplitude(const Domain& domain, double s, double s_next, double k, int truncation);
// -(i k / 2) cos(theta) H_1^(1)(k r).
Complex kernel_exact(const Domain& domain, double s, double s_next, double k);

enum class LinkPower { Full, Half };

struct AmplitudeOptions {
  LinkPower link_power = LinkPower::Full;
  int hankel_terms = 0;  // extra Hankel orders beyond c_0
  bool k_derivative = false;
  double cutoff = 0.0;  // minimum chord
};

double link_product(const Domain& domain, const std::vector<double>& s, LinkPower power = LinkPower::Full);
// (k / 2 pi)^{q/2} L(S) prod cos(theta_i) / l_i^p, optionally with Hankel
// corrections and the -(1/i) d/dk term.
Complex trace_amplitude_a0(const Domain& domain, const std::vector<double>& s, double k,
                           const AmplitudeOptions& options = {});

// e^{i k L} e^{i pi sgn / 4} / sqrt|det| for a nondegenerate orbit.
Complex symplectic_prefactor(const PeriodicOrbit& orbit, double k);

// Taylor data of L and L * prod cos/l at the orbit, for the stationary phase engine.
PhaseModel billiard_phase_model(const Domain& domain, const std::vector<double>& s, int degree);
ComplexPoly link_amplitude_taylor(const Domain& domain, const std::vector<double>& s, int degree);

// sum h_a h_b h_c d^3 L / ds_a ds_b ds_c
double cubic_contraction(const Domain& domain, const std::vector<double>& s, const Eigen::VectorXd& h);

struct InvariantReport {
  int p = 1;
  int q = 0;
  std::vector<double> s;  // reference-domain orbit
  double eps = 0.0;
  double c_gamma = 0.0;
  double length = 0.0;
  double link_product = 0.0;
  Eigen::VectorXd h;
  int adjugate_sign = 0;
  double cubic_contraction = 0.0;
  bool generic = false;
  // Orbit in the deformed domain
  double det_hessian = 0.0;
  int signature = 0;
  double small_eigenvalue = 0.0;
  int sign = 0;  // sign of small_eigenvalue
  std::vector<Rational> w;
  std::vector<Complex> b;           // leading B_j with (c eps)^{-3j}
  std::vector<Complex> b_measured;  // same with |det| and h of the deformed orbit
  double measured_contraction = 0.0;

  Complex prefactor(double k) const;
};

// Leading-in-eps Balian-Bloch coefficients B_0..B_J. The orbit lives on
// family.reference() and must have rank q - 1.
InvariantReport balian_bloch_leading(const DeformationFamily& family, const PeriodicOrbit& base_orbit,
                                     double eps, int max_j, double c_gamma);

// e^{-i pi q / 4} / (2q) L prod cos/l (C (eps))^{-3j} T^{2j} (sign i)^j w(j)
Complex balian_bloch_term(int q, double length, double link_product, double contraction,
                          double det_scale, int sign, int j);

struct Mollifier {
  double center = 0.0;
  double delta = 1.0;
  double operator()(double t) const;
};

Mollifier make_mollifier(double center, double delta);

struct OracleOptions {
  double points_per_oscillation = 16.0;
  int coarse = 0;  // coarse scan nodes per axis, 0 = automatic
  double cutoff_factor = 10.0;  // chords below cutoff_factor / k are dropped
  std::int64_t max_points = 4'000'000'000;
  int threads = 1;
  bool use_symmetry = true;
};

struct OracleComponent {
  std::vector<double> lo, hi;
  std::vector<int> nodes;  // fine nodes per axis
  int multiplicity = 1;
  std::int64_t evaluated = 0;
  Complex value;
};

struct OracleResult {
  Complex value;         // Richardson combination
  Complex fine;          // finest trapezoid sum
  Complex coarse;        // every other node
  double error_estimate = 0.0;
  double min_points_per_oscillation = 0.0;
  std::int64_t evaluated = 0;
  int components = 0;
  std::vector<OracleComponent> integrated;
};

// (1/2) e^{-i q pi / 4} / q int_{T^q} e^{i k L} rho(L) a_0 dS with the
// leading amplitude, on graded trapezoid grids over each window component.
OracleResult trace_oracle(const Domain& domain, int q, double k, const Mollifier& mollifier,
                          const OracleOptions& options = {});

}  // namespace billspec

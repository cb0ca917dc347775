#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "billspec/error.hpp"
#include "billspec/invariants.hpp"

using namespace billspec;
namespace {

constexpr double kPi = std::numbers::pi;

DomainPtr circle() {
  static DomainPtr d = build_domain(DomainSpec::circle());
  return d;
}

DomainPtr asymmetric() {
  static DomainPtr d = [] {
    DomainSpec spec;
    spec.support_cos = {1.0, 0.0, 0.01, 0.0, 0.0025, 0.0025};
    spec.support_sin = {0.0, 0.0, 0.0, 0.0075};
    return build_domain(spec);
  }();
  return d;
}

std::vector<double> equal(int q, double s0 = 0.3) {
  std::vector<double> s(q);
  for (int i = 0; i < q; ++i) s[i] = s0 + 2 * kPi * i / q;
  return s;
}

DesignedFamily circle_family(int q, double c) {
  const PeriodicOrbit o = analyze_orbit(*circle(), {equal(q), 1});
  DesignOptions opt;
  opt.harmonic = true;
  return design_perturbation(circle(), o, c, opt);
}

struct Generic {
  DesignedFamily designed;
  PeriodicOrbit orbit;
};

const Generic& generic_family() {
  static Generic g = [] {
    SearchOptions so;
    so.mode = SearchMode::Maximize;
    const PeriodicOrbit o = find_periodic_orbit(*asymmetric(), 1, 3, so);
    PreloadedFamily pre = degenerate_preload(asymmetric(), o);
    Generic out;
    out.orbit = pre.orbit;
    out.designed = design_perturbation(pre.family, pre.orbit, -0.005);
    return out;
  }();
  return g;
}

// H_1^(1) from the libstdc++ Bessel functions.
std::complex<double> hankel1(double z) { return {std::cyl_bessel_j(1.0, z), std::cyl_neumann(1.0, z)}; }

}  // namespace

TEST_CASE("Hankel coefficients") {
  CHECK(hankel_coeff(0) == doctest::Approx(1.0 / std::sqrt(2 * kPi)).epsilon(1e-15));
  CHECK(hankel_coeff(0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
  CHECK(hankel_coeff(1) == doctest::Approx(3.0 / (8.0 * std::sqrt(2 * kPi))).epsilon(1e-15));
  CHECK(hankel_coeff(1) == doctest::Approx(0.14960).epsilon(1e-4));
  CHECK(hankel_coeff(2) == doctest::Approx(-15.0 / (128.0 * std::sqrt(2 * kPi))).epsilon(1e-15));
  CHECK(hankel_coeff(2) == doctest::Approx(-0.046750).epsilon(1e-4));
  for (int m = 0; m <= 12; ++m) CHECK(hankel_coeff_rational(m) == hankel_coeff_recursive(m));
  CHECK(hankel_coeff_rational(3) == Rational(3 * -5 * -21, 1 * 2 * 3 * 512));
  const HankelAmplitude h(6);
  CHECK(h.order() == 6);
  CHECK(h.c[0] == doctest::Approx(1.0 / std::sqrt(2 * kPi)));
  CHECK_THROWS_AS(hankel_coeff(-1), Error);
}

TEST_CASE("kernel amplitude against Bessel functions") {
  // chord between s = 0 and s = 2 on the unit circle is 2 sin(1)
  const double r = 2.0 * std::sin(1.0);
  const double k = 50.0 / r;
  const Complex approx = kernel_amplitude(*circle(), 2.0, 0.0, k, 5);
  const Complex exact = kernel_exact(*circle(), 2.0, 0.0, k);
  const double cos_theta = link_cosine(*circle(), 2.0, 0.0);
  const Complex oracle = -0.5 * Complex(0, 1) * k * cos_theta * hankel1(k * r);
  CHECK(std::abs(exact - oracle) / std::abs(oracle) < 1e-12);
  CHECK(std::abs(approx - oracle) / std::abs(oracle) < 1e-6);
  // higher truncation helps, lower hurts
  const double e0 = std::abs(kernel_amplitude(*circle(), 2.0, 0.0, k, 0) - oracle);
  const double e2 = std::abs(kernel_amplitude(*circle(), 2.0, 0.0, k, 2) - oracle);
  CHECK(e2 < e0);
  // the circle chord meets the normal at angle (pi - 2) / 2
  CHECK(cos_theta == doctest::Approx(std::sin(1.0)).epsilon(1e-13));
}

TEST_CASE("kernel phase and tangential links") {
  const double k = 80.0;
  const double r = 2.0 * std::sin(1.0);
  const Complex a = kernel_amplitude(*circle(), 2.0, 0.0, k, 0);
  const Complex reduced = a * std::polar(1.0, -k * r);
  CHECK(std::arg(reduced) == doctest::Approx(0.75 * kPi).epsilon(1e-12));
  CHECK(std::abs(link_cosine(*circle(), 1e-4, 0.0)) < 1e-4);
  CHECK(std::abs(link_cosine(*circle(), 1e-4, 0.0)) == doctest::Approx(0.5e-4).epsilon(1e-6));
  CHECK_THROWS_AS(kernel_amplitude(*circle(), 0.5, 0.5, k, 2), Error);
}

TEST_CASE("leading trace amplitude") {
  const Complex a = trace_amplitude_a0(*circle(), equal(3), 1.0);
  CHECK(a.real() == doctest::Approx(3 * std::sqrt(3.0) / (8 * std::pow(2 * kPi, 1.5))).epsilon(1e-12));
  CHECK(std::abs(a.imag()) < 1e-15);
  CHECK(link_product(*circle(), equal(3)) == doctest::Approx(0.125).epsilon(1e-13));
  CHECK(link_product(*circle(), equal(4)) == doctest::Approx(0.0625).epsilon(1e-13));

  const std::vector<double> s = {0.2, 2.3, 4.4, 5.3};
  const std::vector<double> r = {2.3, 4.4, 5.3, 0.2};
  for (int terms : {0, 3}) {
    AmplitudeOptions opt;
    opt.hankel_terms = terms;
    opt.k_derivative = terms > 0;
    const Complex x = trace_amplitude_a0(*asymmetric(), s, 40.0, opt);
    const Complex y = trace_amplitude_a0(*asymmetric(), r, 40.0, opt);
    CHECK(std::abs(x - y) < 1e-13 * std::abs(x));
  }
  // Hankel corrections are O(1/(k chord))
  AmplitudeOptions opt;
  opt.hankel_terms = 4;
  const double rel = std::abs(trace_amplitude_a0(*circle(), equal(3), 200.0, opt) /
                              trace_amplitude_a0(*circle(), equal(3), 200.0) - 1.0);
  CHECK(rel < 3 * 0.375 / (200.0 * std::sqrt(3.0)) * 1.1);
  CHECK(rel > 3 * 0.375 / (200.0 * std::sqrt(3.0)) * 0.9);
  AmplitudeOptions cut;
  cut.cutoff = 2.0;
  CHECK_THROWS_AS(trace_amplitude_a0(*circle(), equal(3), 10.0, cut), Error);
}

TEST_CASE("link product identity on nondegenerate orbits") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 3; ++trial) {
    DomainSpec spec;
    spec.support_cos = {1.0, 0.0};
    spec.support_sin = {0.0, 0.0};
    for (int n = 2; n <= 5; ++n) {
      spec.support_cos.push_back(0.15 * u(rng) / (n * n));
      spec.support_sin.push_back(0.15 * u(rng) / (n * n));
    }
    const DomainPtr d = build_domain(spec);
    for (int q = 3; q <= 5; ++q) {
      SearchOptions so;
      so.mode = SearchMode::Maximize;
      const PeriodicOrbit o = find_periodic_orbit(*d, 1, q, so);
      const double half = link_product(*d, o.s, LinkPower::Half);
      const double lhs = half * half * std::abs((Eigen::Matrix2d::Identity() - o.poincare).determinant());
      const double rhs = std::abs(o.hessian.determinant());
      CHECK(lhs / rhs == doctest::Approx(1.0).epsilon(1e-6));
      ++checked;
    }
  }
  CHECK(checked == 9);
}

TEST_CASE("symplectic prefactor") {
  const DesignedFamily fam = circle_family(3, -100.0);
  const DomainPtr d = deform(fam.family, 1e-2);
  const PeriodicOrbit o = analyze_orbit(*d, {transport(*d, equal(3)), 1});
  for (double k : {1.0, 37.0, 500.0}) {
    CHECK(std::abs(symplectic_prefactor(o, k)) ==
          doctest::Approx(1.0 / std::sqrt(std::abs(o.hessian.determinant()))).epsilon(1e-13));
  }
  // all eigenvalues negative: phase e^{i k L} e^{-3 i pi / 4}
  CHECK(o.signature == -3);
  const Complex z = symplectic_prefactor(o, 10.0) * std::polar(1.0, -10.0 * o.length);
  CHECK(std::arg(z) == doctest::Approx(-0.75 * kPi).epsilon(1e-12));
  const PeriodicOrbit flat = analyze_orbit(*circle(), {equal(3), 1});
  CHECK_THROWS_AS(symplectic_prefactor(flat, 10.0), Error);
  try {
    symplectic_prefactor(flat, 10.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateOrbit);
  }
}

TEST_CASE("perturbed circle determinant continuation") {
  const DesignedFamily fam = circle_family(3, -1.0);
  const PeriodicOrbit o = analyze_orbit(*circle(), {equal(3), 1});
  const InvariantReport r = balian_bloch_leading(fam.family, o, 1e-3, 0, fam.predicted_c);
  CHECK(r.det_hessian / (fam.predicted_c * 1e-3) == doctest::Approx(1.0).epsilon(1e-2));
  // det = small eigenvalue times (3 sqrt3 / 4)^2 to leading order
  CHECK(r.det_hessian / (r.small_eigenvalue * 27.0 / 16.0) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("leading Balian-Bloch coefficient on circle-limit families") {
  const DesignedFamily f3 = circle_family(3, -100.0);
  const PeriodicOrbit o3 = analyze_orbit(*circle(), {equal(3), 1});
  const Complex expected3 = std::polar(std::sqrt(3.0) / 16.0, -0.75 * kPi);
  for (double eps : {0.0, 1e-3, 1e-2}) {
    const InvariantReport r = balian_bloch_leading(f3.family, o3, eps, 0, f3.predicted_c);
    CHECK(std::abs(r.b[0] - expected3) < 1e-13);
  }
  CHECK(std::abs(expected3) == doctest::Approx(0.10825).epsilon(1e-4));

  const DesignedFamily f4 = circle_family(4, -100.0);
  const PeriodicOrbit o4 = analyze_orbit(*circle(), {equal(4), 1});
  const InvariantReport r4 = balian_bloch_leading(f4.family, o4, 1e-3, 0, f4.predicted_c);
  CHECK(r4.b[0].real() == doctest::Approx(-std::sqrt(2.0) / 32.0).epsilon(1e-12));
  CHECK(std::abs(r4.b[0].imag()) < 1e-14);

  // rotation invariance kills the cubic contraction
  const InvariantReport r1 = balian_bloch_leading(f3.family, o3, 1e-3, 1, f3.predicted_c);
  CHECK(std::abs(r1.cubic_contraction) < 1e-8);
  CHECK_FALSE(r1.generic);
  CHECK(std::abs(r1.b[1]) < 1e-20);
  CHECK(r1.w.size() == 2);
  CHECK(r1.w[1] == Rational(5, 24));
}

TEST_CASE("Balian-Bloch errors") {
  const DesignedFamily f3 = circle_family(3, -100.0);
  const PeriodicOrbit o3 = analyze_orbit(*circle(), {equal(3), 1});
  auto code = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code([&] { balian_bloch_leading(f3.family, o3, 1e-3, 1, 0.0); }) == ErrorCode::DegenerateFit);
  CHECK(code([&] { balian_bloch_leading(f3.family, o3, 1e-3, 5, -100.0); }) == ErrorCode::ResourceLimit);
  const DomainPtr d = deform(f3.family, 1e-2);
  const PeriodicOrbit nondeg = analyze_orbit(*d, {transport(*d, equal(3)), 1});
  CHECK(code([&] { balian_bloch_leading(f3.family, nondeg, 1e-3, 0, -100.0); }) == ErrorCode::RankMismatch);
}

TEST_CASE("two routes to the leading coefficient") {
  const Generic& g = generic_family();
  const DomainPtr d = deform(g.designed.family, 1e-2);
  const std::vector<double> s = transport_from_reference(g.designed.family, *d, g.orbit.s);
  const PeriodicOrbit o = analyze_orbit(*d, {s, 1});
  const Expansion ex = stationary_phase_expand(billiard_phase_model(*d, o.s, 4), 0);
  const Complex b0 = balian_bloch_term(3, o.length, link_product(*d, o.s), 0.0, 1.0, 1, 0);
  const Complex route2 = std::polar(1.0, -0.75 * kPi) / 6.0 * ex.coefficients[0];
  CHECK(std::abs(b0 - route2) / std::abs(b0) < 1e-8);
}

TEST_CASE("maximal diagrams reproduce the j = 1 term") {
  const Generic& g = generic_family();
  for (double dir : {1.0, -1.0}) {
    const DeformationFamily fam = dir > 0 ? g.designed.family : g.designed.family.flipped();
    const InvariantReport r = balian_bloch_leading(fam, g.orbit, 1e-3, 1, dir * g.designed.predicted_c);
    CHECK(r.generic);
    const DomainPtr d = deform(fam, 1e-3);
    const PeriodicOrbit o = analyze_orbit(*d, {transport_from_reference(fam, *d, g.orbit.s), 1});
    const PhaseModel pm = billiard_phase_model(*d, o.s, 4);
    Complex maximal = 0.0;
    for (const FeynmanDiagram& dg : enumerate_diagrams(1)) {
      maximal += diagram_value(dg, pm) / static_cast<double>(aut_order(dg));
    }
    const Complex c0 = stationary_phase_expand(pm, 0).coefficients[0];
    const Complex ratio = maximal / (c0 * r.b_measured[1] / r.b_measured[0]);
    CHECK(std::abs(ratio - 1.0) < 2e-2);
  }
}

TEST_CASE("sign rule under a flipped family") {
  const Generic& g = generic_family();
  const double c = g.designed.predicted_c;
  const InvariantReport plus = balian_bloch_leading(g.designed.family, g.orbit, 2e-3, 2, c);
  const InvariantReport minus = balian_bloch_leading(g.designed.family.flipped(), g.orbit, 2e-3, 2, -c);
  CHECK(plus.sign == -minus.sign);
  CHECK(plus.small_eigenvalue * minus.small_eigenvalue < 0.0);
  CHECK(std::abs(minus.b[1] + plus.b[1]) < 1e-12 * std::abs(plus.b[1]));
  CHECK(std::abs(minus.b[2] - plus.b[2]) < 1e-12 * std::abs(plus.b[2]));
  // (+i) when the small eigenvalue is positive
  const InvariantReport& pos = plus.sign > 0 ? plus : minus;
  CHECK(std::arg(pos.b[1] / pos.b[0]) == doctest::Approx(0.5 * kPi).epsilon(1e-12));
}

TEST_CASE("j = 1 term scales as eps^-3") {
  const Generic& g = generic_family();
  const double c = g.designed.predicted_c;
  const double e1 = 1e-3, e2 = 1e-2;
  const InvariantReport a = balian_bloch_leading(g.designed.family, g.orbit, e1, 1, c);
  const InvariantReport b = balian_bloch_leading(g.designed.family, g.orbit, e2, 1, c);
  const double slope = std::log(std::abs(b.b_measured[1]) / std::abs(a.b_measured[1])) / std::log(e2 / e1);
  CHECK(slope == doctest::Approx(-3.0).epsilon(0.05 / 3.0));
  CHECK(std::abs(a.b[1]) / std::abs(b.b[1]) == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("mollifier") {
  const Mollifier m = make_mollifier(5.0, 0.4);
  CHECK(m(5.0) == 1.0);
  CHECK(m(5.4) == 0.0);
  CHECK(m(4.6) == 0.0);
  CHECK(m(5.1) == 1.0);
  CHECK(m(4.9) == 1.0);
  CHECK(m(5.3) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = m(5.2 + 0.2 * i / 100.0);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  CHECK(m(5.0 + 0.25) == doctest::Approx(m(5.0 - 0.25)));
  CHECK_THROWS_AS(make_mollifier(1.0, 0.0), Error);
}

TEST_CASE("oracle guards and nonstationary decay") {
  OracleOptions coarse;
  coarse.points_per_oscillation = 4.0;
  try {
    trace_oracle(*circle(), 2, 50.0, make_mollifier(2.0, 0.5), coarse);
    FAIL("expected ResolutionTooLow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResolutionTooLow);
  }
  CHECK_THROWS_AS(trace_oracle(*circle(), 5, 50.0, make_mollifier(2.0, 0.5)), Error);

  // q = 2 on the circle: critical lengths are 0 and 4 only
  const Mollifier window = make_mollifier(2.0, 0.5);
  const double a = std::abs(trace_oracle(*circle(), 2, 50.0, window).value);
  const double b = std::abs(trace_oracle(*circle(), 2, 150.0, window).value);
  CHECK(b < a * std::pow(50.0 / 150.0, 3));
}

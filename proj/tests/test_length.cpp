#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "billspec/billiard.hpp"
#include "billspec/error.hpp"
#include "billspec/length.hpp"

using namespace billspec;
namespace {

constexpr double kPi = std::numbers::pi;

DomainPtr circle() {
  static DomainPtr d = build_domain(DomainSpec::circle());
  return d;
}

DomainPtr near_circle() {
  static DomainPtr d = [] {
    DomainSpec spec;
    spec.support_cos = {1.0, 0.0, 0.05};
    return build_domain(spec);
  }();
  return d;
}

DomainPtr random_domain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0};
  spec.support_sin = {0.0, 0.0};
  for (int n = 2; n <= 5; ++n) {
    spec.support_cos.push_back(0.2 * u(rng) / (n * n));
    spec.support_sin.push_back(0.2 * u(rng) / (n * n));
  }
  return build_domain(spec);
}

std::vector<double> equal(int p, int q, double s0 = 0.0) {
  std::vector<double> s(q);
  for (int i = 0; i < q; ++i) s[i] = s0 + 2 * kPi * p * i / q;
  return s;
}

std::vector<double> shifted(std::vector<double> s, int i, double h) {
  s[i] += h;
  return s;
}

}  // namespace

TEST_CASE("length functional values") {
  CHECK(length_functional(*circle(), equal(1, 3)) == doctest::Approx(3 * std::sqrt(3.0)).epsilon(1e-13));
  CHECK(length_functional(*circle(), {0.0, kPi}) == doctest::Approx(4.0).epsilon(1e-13));
  const std::vector<double> s = {0.1, 1.7, 2.9, 4.4};
  const std::vector<double> r = {1.7, 2.9, 4.4, 0.1};
  CHECK(length_functional(*near_circle(), s) == doctest::Approx(length_functional(*near_circle(), r)).epsilon(1e-14));
  CHECK_THROWS_AS(length_functional(*circle(), {0.5, 0.5, 2.0}), Error);
  CHECK_THROWS_AS(hessian_length(*circle(), {0.0, kPi}), Error);
}

TEST_CASE("gradient and Hessian agree with finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_g = 0.0, worst_h = 0.0;
  for (int dom = 0; dom < 5; ++dom) {
    auto d = random_domain(rng);
    const double ell = d->total_length();
    for (int k = 0; k < 20; ++k) {
      const int q = 3 + k % 4;
      std::vector<double> s(q);
      double t = ell * u(rng);
      for (int i = 0; i < q; ++i) {
        s[i] = t;
        t += ell / q * (0.5 + u(rng));
      }
      const Eigen::VectorXd g = grad_length(*d, s);
      const Eigen::MatrixXd h = hessian_length(*d, s);
      const double e = 1e-5;
      for (int i = 0; i < q; ++i) {
        const double fd = (length_functional(*d, shifted(s, i, e)) - length_functional(*d, shifted(s, i, -e))) / (2 * e);
        worst_g = std::max(worst_g, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
        const Eigen::VectorXd col = (grad_length(*d, shifted(s, i, e)) - grad_length(*d, shifted(s, i, -e))) / (2 * e);
        worst_h = std::max(worst_h, (col - h.col(i)).cwiseAbs().maxCoeff() / (1.0 + h.cwiseAbs().maxCoeff()));
      }
      CHECK((h - h.transpose()).norm() == 0.0);
      if (q >= 4) {
        for (int i = 0; i < q; ++i)
          for (int j = 0; j < q; ++j) {
            const int dist = std::min((i - j + q) % q, (j - i + q) % q);
            if (dist > 1) CHECK(h(i, j) == 0.0);
          }
      }
    }
  }
  CHECK(worst_g < 1e-7);
  CHECK(worst_h < 1e-6);
}

TEST_CASE("Taylor polynomial of L reproduces gradient, Hessian and third derivatives") {
  auto d = near_circle();
  const std::vector<double> s = {0.2, 2.3, 4.1, 5.0};
  const RealPoly p = length_taylor(*d, s, 4);
  const Eigen::VectorXd g = grad_length(*d, s);
  const Eigen::MatrixXd h = hessian_length(*d, s);
  CHECK(p.value() == doctest::Approx(length_functional(*d, s)).epsilon(1e-13));
  for (int i = 0; i < 4; ++i) {
    CHECK(p.derivative({i}) == doctest::Approx(g[i]).epsilon(1e-11));
    for (int j = 0; j < 4; ++j) CHECK(std::abs(p.derivative({i, j}) - h(i, j)) < 1e-10);
  }
  const double e = 1e-4;
  for (int i = 0; i < 4; ++i) {
    const Eigen::MatrixXd dh = (hessian_length(*d, shifted(s, i, e)) - hessian_length(*d, shifted(s, i, -e))) / (2 * e);
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) CHECK(std::abs(p.derivative({i, j, k}) - dh(j, k)) < 1e-6);
  }
  const RealPoly p3 = length_taylor(*d, s, 3);
  const double d3 = p3.derivative({0, 0, 1});
  const double e4 = 1e-3;
  const double fd4 = (length_taylor(*d, shifted(s, 1, e4), 3).derivative({0, 0, 1}) -
                      length_taylor(*d, shifted(s, 1, -e4), 3).derivative({0, 0, 1})) / (2 * e4);
  CHECK(std::abs(p.derivative({0, 0, 1, 1}) - fd4) < 1e-5);
  CHECK(std::abs(p.derivative({0, 0, 1}) - d3) < 1e-12);
}

TEST_CASE("circle Hessian entries and spectrum") {
  const Eigen::MatrixXd h = hessian_length(*circle(), equal(1, 3, 0.4));
  for (int i = 0; i < 3; ++i) {
    CHECK(h(i, i) == doctest::Approx(-std::sqrt(3.0) / 2).epsilon(1e-12));
    CHECK(h(i, (i + 1) % 3) == doctest::Approx(std::sqrt(3.0) / 4).epsilon(1e-12));
  }
  for (int q = 3; q <= 8; ++q) {
    for (int p = 1; p < q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      const PeriodicOrbit o = analyze_orbit(*circle(), {equal(p, q, 0.3), p});
      const double delta = -std::sin(kPi * p / q), alpha = std::sin(kPi * p / q) / 2;
      std::vector<double> expect;
      for (int m = 0; m < q; ++m) expect.push_back(delta + 2 * alpha * std::cos(2 * kPi * m / q));
      std::sort(expect.begin(), expect.end());
      for (int m = 0; m < q; ++m) CHECK(std::abs(o.eigenvalues[m] - expect[m]) < 1e-10);
      CHECK(o.rank == q - 1);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(q) / std::sqrt(double(q));
      CHECK((o.hessian * ones).norm() < 1e-8);
      const Classification c = classify_orbit(o);
      CHECK(c.degenerate);
      CHECK(c.nonzero_signature == -(q - 1));
      const AdjugateFactorization f = adjugate_factorization(o);
      CHECK(f.residual < 1e-6);
      for (int i = 1; i < q; ++i) CHECK(f.h[i] == doctest::Approx(f.h[0]).epsilon(1e-8));
    }
  }
  const PeriodicOrbit o3 = analyze_orbit(*circle(), {equal(1, 3), 1});
  const AdjugateFactorization f = adjugate_factorization(o3);
  CHECK(f.sign == 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(f.h[i] == doctest::Approx(0.75).epsilon(1e-10));
    for (int j = 0; j < 3; ++j) CHECK(f.adjugate(i, j) == doctest::Approx(9.0 / 16).epsilon(1e-10));
  }
  const ProdIdentity pi = verify_prod_identity(o3);
  CHECK(std::abs(pi.det_hessian) < 1e-8);
  CHECK(std::abs(pi.det_one_minus_p * pi.offdiag_product) < 1e-8);
}

TEST_CASE("classification of an injected positive definite matrix") {
  const Classification c = classify_hessian(Eigen::MatrixXd::Identity(5, 5) * 2.0);
  CHECK_FALSE(c.degenerate);
  CHECK(c.signature == 5);
  CHECK(c.rank == 5);
  CHECK_THROWS_AS(adjugate_factorization(Eigen::MatrixXd::Identity(3, 3)), Error);
}

TEST_CASE("orbit search") {
  SearchOptions opt;
  opt.seed_config = std::vector<double>{0.1, 2.2, 4.05};
  const PeriodicOrbit c = find_periodic_orbit(*circle(), 1, 3, opt);
  CHECK(c.gradient_norm < 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(c.links[i] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-10));

  const auto orbits = find_periodic_orbits(*near_circle(), 1, 3, SearchOptions{});
  CHECK(orbits.size() >= 2);
  for (const auto& o : orbits) {
    CHECK(o.gradient_norm < 1e-9 * o.length);
    CHECK(o.closure_error < 1e-9);
    CHECK(o.traced_winding == 1);
  }
  SearchOptions bad;
  bad.seed_config = std::vector<double>{0.0, 4.0, 2.0};
  try {
    find_periodic_orbit(*near_circle(), 1, 3, bad);
    FAIL("expected WrongWinding");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongWinding);
  }
  SearchOptions mx;
  mx.mode = SearchMode::Maximize;
  const PeriodicOrbit m = find_periodic_orbit(*near_circle(), 2, 5, mx);
  CHECK(m.traced_winding == 2);
  CHECK(m.signature == -5);
}

TEST_CASE("gradient decays linearly towards a critical point") {
  const auto orbits = find_periodic_orbits(*near_circle(), 1, 4, SearchOptions{});
  REQUIRE(!orbits.empty());
  const PeriodicOrbit& o = orbits[0];
  const std::vector<double> dir = {0.3, -0.5, 0.2, 0.7};
  double prev = 0.0;
  for (double t : {1e-3, 1e-4, 1e-5}) {
    std::vector<double> s = o.s;
    for (int i = 0; i < 4; ++i) s[i] += t * dir[i];
    const double g = grad_length(*near_circle(), s).norm();
    if (prev > 0) CHECK(prev / g == doctest::Approx(10.0).epsilon(1e-2));
    prev = g;
  }
}

TEST_CASE("Hessian determinant and Poincare map") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int dom = 0; dom < 3; ++dom) {
    auto d = random_domain(rng);
    for (int q = 3; q <= 5; ++q) {
      for (const auto& o : find_periodic_orbits(*d, 1, q, SearchOptions{})) {
        if (classify_orbit(o).degenerate) continue;
        const ProdIdentity r = verify_prod_identity(o);
        CHECK(r.residual < 1e-6);
        CHECK(std::abs(o.poincare.determinant() - 1.0) < 1e-8);
        ++checked;
      }
    }
  }
  CHECK(checked >= 6);
}

TEST_CASE("loop function") {
  for (double s : {0.0, 1.0, 3.5}) {
    const LoopResult r = loop_function(*circle(), 1, 3, s);
    CHECK(r.length == doctest::Approx(3 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK(std::abs(r.derivative) < 1e-10);
  }
  auto d = near_circle();
  const auto orbits = find_periodic_orbits(*d, 1, 3, SearchOptions{});
  REQUIRE(!orbits.empty());
  for (const auto& o : orbits) {
    // secant iteration on the loop function derivative from a displaced start
    double a = o.s[0] + 0.05, b = o.s[0] - 0.04;
    double fa = loop_function(*d, 1, 3, a).derivative, fb = loop_function(*d, 1, 3, b).derivative;
    for (int it = 0; it < 30 && std::abs(b - a) > 1e-13; ++it) {
      const double c = b - fb * (b - a) / (fb - fa);
      a = b;
      fa = fb;
      b = c;
      fb = loop_function(*d, 1, 3, b).derivative;
    }
    CHECK(std::abs(b - o.s[0]) < 1e-6);
  }
}

TEST_CASE("perturbation design and c_gamma fit on the circle triangle") {
  const PeriodicOrbit o = analyze_orbit(*circle(), {equal(1, 3, 0.5), 1});
  const DesignedFamily fam = design_perturbation(circle(), o, 1.0);
  CHECK(fam.predicted_c == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fam.mu1[0] == doctest::Approx(-16.0 / (9.0 * 3 * std::sqrt(3.0))).epsilon(1e-10));
  const CFit fit = fit_c_gamma(fam.family, o, {1e-4, 2e-4, 4e-4, 7e-4, 1e-3});
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-2));
  CHECK(std::abs(fit.intercept) < 1e-10);
  CHECK(std::abs(deformed_hessian(fam.family, o, 0.0).determinant()) < 1e-10);

  const DesignedFamily neg = design_perturbation(circle(), o, -1.0);
  const CFit fneg = fit_c_gamma(neg.family, o, {1e-4, 5e-4, 1e-3});
  CHECK(fneg.slope < 0);

  DesignOptions orth;
  orth.weights = {1.0, -1.0, 0.0};
  try {
    design_perturbation(circle(), o, 1.0, orth);
    FAIL("expected DegenerateConstraint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateConstraint);
  }
  DesignOptions zero;
  zero.weights = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(design_perturbation(circle(), o, 1.0, zero), Error);

  // nondegenerate perturbed orbit: prod identity, RankMismatch, small positive eigenvalue
  const DomainPtr d = deform(fam.family, 1e-3);
  const PeriodicOrbit pert = analyze_orbit(*d, {transport(*d, o.s), 1});
  CHECK(pert.gradient_norm < 1e-12);
  const Classification cls = classify_orbit(pert);
  CHECK_FALSE(cls.degenerate);
  CHECK(cls.signature == -(3 - 1) + 1);
  CHECK(verify_prod_identity(pert).residual < 1e-6);
  CHECK_THROWS_AS(adjugate_factorization(pert), Error);
}

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "billspec/billiard.hpp"
#include "billspec/error.hpp"

using namespace billspec;
namespace {

constexpr double kPi = std::numbers::pi;

DomainPtr ellipse_like() {
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0, 0.15, 0.0, 0.01};
  spec.support_sin = {0.0, 0.0, 0.0, 0.02};
  return build_domain(spec);
}

// Ray/boundary intersection by dense sampling and bisection on positions.
double brute_force_hit(const Domain& d, double s, double theta) {
  const BoundarySample b = d.sample(s);
  const Vec2 dir = std::cos(theta) * b.tangent + std::sin(theta) * b.normal;
  auto g = [&](double u) {
    const Vec2 v = d.position(s + u) - b.position;
    return dir.x() * v.y() - dir.y() * v.x();
  };
  const int m = 20000;
  const double ell = d.total_length();
  double lo = ell / m, hi = ell - ell / m;
  for (int k = 1; k < m; ++k) {
    const double u = ell * k / m;
    if (g(u) > 0) {
      hi = u;
      lo = ell * (k - 1) / m;
      break;
    }
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// (s, sigma) after n bounces on the lift.
Eigen::Vector2d power_map(const Domain& d, double s, double sigma, int n) {
  const Trajectory tr = iterate(d, {s, std::acos(-sigma)}, n);
  return {tr.lift.back(), -std::cos(tr.points.back().theta)};
}

}  // namespace

TEST_CASE("circle billiard map advances by 2 theta") {
  auto d = build_domain(DomainSpec::circle());
  for (double s : {0.0, 1.3, 5.0}) {
    for (double th : {0.2, 1.0, 2.5}) {
      const Bounce b = billiard_step(*d, {s, th});
      CHECK(b.advance == doctest::Approx(2 * th).epsilon(1e-12));
      CHECK(b.next.theta == doctest::Approx(th).epsilon(1e-12));
    }
  }
  const Bounce small = billiard_step(*d, {0.7, 1e-6});
  CHECK(small.advance == doctest::Approx(2e-6).epsilon(1e-6));
  CHECK_THROWS_AS(billiard_step(*d, {0.7, 0.0}), Error);
  try {
    billiard_step(*d, {0.7, kPi});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GlancingRay);
  }
}

TEST_CASE("circle periodic orbits and winding") {
  auto d = build_domain(DomainSpec::circle());
  const Trajectory t3 = iterate(*d, {0.4, kPi / 3}, 3);
  CHECK(t3.winding == 1);
  CHECK(std::abs(t3.points.back().s - 0.4) < 1e-11);
  const Trajectory t5 = iterate(*d, {0.4, 2 * kPi / 5}, 5);
  CHECK(t5.winding == 2);
  CHECK(std::abs(t5.points.back().s - 0.4) < 1e-11);
  const Trajectory tg = iterate(*d, {0.4, 1.0}, 50);
  for (const PhasePoint& p : tg.points) {
    CHECK(p.theta > 0.0);
    CHECK(p.theta < kPi);
  }
  CHECK(std::abs(tg.points.back().s - 0.4) > 1e-6);
}

TEST_CASE("ellipse-like map matches bisection ray tracer") {
  auto d = ellipse_like();
  const double ell = d->total_length();
  for (double s : {0.1, 1.9, 4.4}) {
    for (double th : {0.05, 0.9, 1.6, 2.8}) {
      const Bounce b = billiard_step(*d, {s, th});
      CHECK(std::abs(b.advance - brute_force_hit(*d, s, th)) < 1e-10 * ell);
    }
  }
}

TEST_CASE("symplecticity, twist, time reversal, generating function") {
  auto d = ellipse_like();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> us(0.0, d->total_length()), ut(0.2, kPi - 0.2);
  for (int k = 0; k < 10; ++k) {
    const double s = us(rng), th = ut(rng), sigma = -std::cos(th);
    const double h = 1e-6;
    Eigen::Matrix2d jac;
    jac.col(0) = (power_map(*d, s + h, sigma, 1) - power_map(*d, s - h, sigma, 1)) / (2 * h);
    jac.col(1) = (power_map(*d, s, sigma + h, 1) - power_map(*d, s, sigma - h, 1)) / (2 * h);
    CHECK(std::abs(jac.determinant() - 1.0) < 1e-6);

    const Bounce b = billiard_step(*d, {s, th});
    const Eigen::Matrix2d an = bounce_differential(*d, s, s + b.advance);
    CHECK((an - jac).norm() < 1e-6 * (1 + an.norm()));
    CHECK(an(0, 1) > 0.0);  // twist: ds'/dsigma > 0, and dsigma/dtheta > 0

    const Bounce back = billiard_step(*d, {b.next.s, kPi - b.next.theta});
    CHECK(std::abs(d->wrap(back.next.s - s + 0.5 * d->total_length()) - 0.5 * d->total_length()) < 1e-10);
    CHECK(std::abs(back.next.theta - (kPi - th)) < 1e-10);

    auto chord_len = [&](double a, double c) { return -(d->position(c) - d->position(a)).norm(); };
    const double sp = s + b.advance, e = 1e-6;
    const double dh_ds = (chord_len(s + e, sp) - chord_len(s - e, sp)) / (2 * e);
    const double dh_dsp = (chord_len(s, sp + e) - chord_len(s, sp - e)) / (2 * e);
    CHECK(std::abs(-dh_ds - sigma) < 1e-8);
    CHECK(std::abs(dh_dsp + std::cos(b.next.theta)) < 1e-8);
  }
}

TEST_CASE("Poincare product matches finite differences of the q-th power") {
  auto d = ellipse_like();
  const double s = 0.8, th = 1.1, sigma = -std::cos(th);
  const Trajectory tr = iterate(*d, {s, th}, 4);
  Eigen::Matrix2d prod = Eigen::Matrix2d::Identity();
  for (int i = 0; i < 4; ++i) prod = bounce_differential(*d, tr.lift[i], tr.lift[i + 1]) * prod;
  const double h = 1e-6;
  Eigen::Matrix2d jac;
  jac.col(0) = (power_map(*d, s + h, sigma, 4) - power_map(*d, s - h, sigma, 4)) / (2 * h);
  jac.col(1) = (power_map(*d, s, sigma + h, 4) - power_map(*d, s, sigma - h, 4)) / (2 * h);
  CHECK((prod - jac).norm() < 1e-5 * prod.norm());
  CHECK(prod.determinant() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("circle triangle Poincare map") {
  auto d = build_domain(DomainSpec::circle());
  const std::vector<double> cfg = {0.3, 0.3 + 2 * kPi / 3, 0.3 + 4 * kPi / 3};
  const Eigen::Matrix2d p = linearized_poincare(*d, cfg);
  CHECK(std::abs(p.determinant() - 1.0) < 1e-8);
  CHECK(std::abs((Eigen::Matrix2d::Identity() - p).determinant()) < 1e-8);
  try {
    linearized_poincare(*d, {0.3, 2.0, 4.0});
    FAIL("expected NotPeriodic");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPeriodic);
  }
}

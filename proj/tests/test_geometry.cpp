#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "billspec/error.hpp"
#include "billspec/geometry.hpp"

using namespace billspec;
namespace {

constexpr double kPi = std::numbers::pi;

DomainSpec near_circle() {
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0, 0.05};
  spec.support_sin = {0.0};
  return spec;
}

DomainSpec lopsided() {
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0, 0.08, 0.0, 0.01};
  spec.support_sin = {0.0, 0.0, 0.0, 0.03};
  return spec;
}

}  // namespace

TEST_CASE("unit circle") {
  auto d = build_domain(DomainSpec::circle());
  CHECK(d->total_length() == doctest::Approx(2 * kPi).epsilon(1e-14));
  for (double s : {0.0, 0.4, 1.7, 3.9, 6.0}) {
    const BoundarySample b = d->sample(s);
    CHECK(b.position.x() == doctest::Approx(std::sin(s)).epsilon(1e-12));
    CHECK(b.position.y() == doctest::Approx(1 - std::cos(s)).epsilon(1e-12));
    CHECK(b.curvature == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Vec2 p = d->position(kPi / 2);
  CHECK(p.x() == doctest::Approx(1.0));
  CHECK(p.y() == doctest::Approx(1.0));
  const BoundarySample a = d->sample(0.3), b = d->sample(d->total_length() + 0.3);
  CHECK((a.position - b.position).norm() < 1e-13);
  CHECK((a.tangent - b.tangent).norm() < 1e-13);
  CHECK(a.curvature == doctest::Approx(b.curvature));
  CHECK(a.normal.x() == doctest::Approx(-a.tangent.y()));
}

TEST_CASE("near-circular length matches adaptive quadrature") {
  const DomainSpec spec = near_circle();
  auto d = build_domain(spec);
  auto speed = [&](double phi) {
    const double h = spec.support(phi, 0), h1 = spec.support(phi, 1), h2 = spec.support(phi, 2);
    const double x = h1 * std::cos(phi) - h * std::sin(phi) - h2 * std::sin(phi) - h1 * std::cos(phi);
    const double y = h1 * std::sin(phi) + h * std::cos(phi) + h2 * std::cos(phi) - h1 * std::sin(phi);
    return std::hypot(x, y);
  };
  const double length =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(speed, 0.0, 2 * kPi, 15, 1e-14);
  CHECK(std::abs(d->total_length() - length) < 1e-9);
}

TEST_CASE("nonconvex and invalid specs are rejected") {
  DomainSpec bad;
  bad.support_cos = {1.0, 0.0, 0.9};
  try {
    build_domain(bad);
    FAIL("expected Nonconvex");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Nonconvex);
  }
  DomainSpec nan;
  nan.support_cos = {1.0, std::nan("")};
  try {
    build_domain(nan);
    FAIL("expected InvalidSpec");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
  DomainSpec empty;
  CHECK_THROWS_AS(build_domain(empty), Error);
}

TEST_CASE("table invariants and curvature") {
  auto d = build_domain(lopsided());
  const auto& tab = d->tables();
  const double ell = d->total_length();
  double turning = 0.0;
  for (int i = 0; i < d->resolution(); i += 7) {
    const Jet2 j = d->jet(tab.s[i], 1);
    CHECK(std::hypot(j.x[1], j.y[1]) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(tab.curvature[i] > 0.0);
  }
  // periodic trapezoid rule is spectrally accurate
  for (int i = 0; i < d->resolution(); ++i) turning += tab.curvature[i] * ell / d->resolution();
  CHECK(turning == doctest::Approx(2 * kPi).epsilon(1e-10));
  CHECK((d->position(ell) - d->position(0.0)).norm() < 1e-10);
  CHECK(d->position(0.0).norm() < 1e-12);
  CHECK(d->sample(0.0).tangent.x() == doctest::Approx(1.0));

  const double hstep = 1e-4;
  for (double s : {0.2, 1.1, 2.5, 4.0, 5.9}) {
    const double fd = (d->tangent_angle(s + hstep) - d->tangent_angle(s - hstep)) / (2 * hstep);
    CHECK(std::abs(fd - d->sample(s).curvature) < 1e-8);
    const double k1 = (d->sample(s + hstep).curvature - d->sample(s - hstep).curvature) / (2 * hstep);
    CHECK(std::abs(k1 - d->curvature_derivative(s, 1)) < 1e-7);
    const double k3 = (d->curvature_derivative(s + hstep, 2) - d->curvature_derivative(s - hstep, 2)) / (2 * hstep);
    CHECK(std::abs(k3 - d->curvature_derivative(s, 3)) < 1e-5);
  }
  for (double s1 : {0.1, 2.0}) {
    for (double s2 : {0.5, 3.0, 5.5}) {
      CHECK((d->position(s2) - d->position(s1)).norm() <= std::abs(s2 - s1) + 1e-14);
    }
  }
}

TEST_CASE("deformation: identity, contact, curvature shift") {
  auto base = build_domain(lopsided());
  DeformationFamily fam;
  fam.base = base;
  fam.bumps = {{1.0, 2.0, 0.4}, {3.0, -1.5, 0.3}};
  auto d0 = deform(fam, 0.0);
  for (int i = 0; i < base->resolution(); i += 37) {
    const double s = base->tables().s[i];
    CHECK((d0->position(s) - base->position(s)).norm() < 1e-12);
  }
  auto d1 = deform(fam, 1e-3);
  for (const Bump& b : fam.bumps) {
    const double s_new = transport(*d1, {b.center_s})[0];
    const BoundarySample x = d1->sample(s_new), y = base->sample(b.center_s);
    CHECK((x.position - y.position).norm() < 1e-12);
    CHECK((x.tangent - y.tangent).norm() < 1e-12);
  }
  auto d2 = deform(fam, 1e-4);
  for (const Bump& b : fam.bumps) {
    const double s_new = transport(*d2, {b.center_s})[0];
    const double hstep = 1e-3;
    const double fd = (d2->tangent_angle(s_new + hstep) - d2->tangent_angle(s_new - hstep)) / (2 * hstep) -
                      hstep * hstep / 6 * d2->curvature_derivative(s_new, 2);
    const double shift = fd - base->sample(b.center_s).curvature;
    CHECK(shift == doctest::Approx(1e-4 * b.mu1).epsilon(1e-4));
  }
  // C0 distance to base scales linearly
  double dist1 = 0.0, dist2 = 0.0;
  for (int i = 0; i < base->resolution(); i += 11) {
    const double s = base->tables().s[i];
    dist1 = std::max(dist1, (d1->position(transport(*d1, {s})[0]) - base->position(s)).norm());
    dist2 = std::max(dist2, (d2->position(transport(*d2, {s})[0]) - base->position(s)).norm());
  }
  CHECK(dist1 / dist2 == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("deformation errors") {
  auto base = build_domain(DomainSpec::circle());
  DeformationFamily fam;
  fam.base = base;
  fam.bumps = {{1.0, -200.0, 0.2}};
  fam.epsilon_max = 1.0;
  try {
    deform(fam, 1.0);
    FAIL("expected ConvexityLost");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConvexityLost);
  }
  fam.bumps = {{1.0, 1.0, 0.5}, {1.6, 1.0, 0.5}};
  CHECK_THROWS_AS(deform(fam, 0.01), Error);
  fam.bumps = {{1.0, 1.0, 0.5}};
  CHECK_THROWS_AS(deform(fam, 2.0), Error);
}

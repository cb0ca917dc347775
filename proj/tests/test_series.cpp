#include <doctest.h>

#include <cmath>

#include "billspec/series.hpp"

using billspec::Series;

TEST_CASE("series elementary functions match Taylor coefficients") {
  const double x0 = 0.3;
  const Series x = Series::variable(x0, 6);
  const Series e = exp(x), s = sin(x), c = cos(x);
  double fact = 1.0;
  for (int k = 0; k <= 6; ++k) {
    if (k > 0) fact *= k;
    CHECK(e[k] == doctest::Approx(std::exp(x0) / fact).epsilon(1e-14));
    CHECK(s[k] == doctest::Approx(std::sin(x0 + 0.5 * M_PI * k) / fact).epsilon(1e-13));
    CHECK(c[k] == doctest::Approx(std::cos(x0 + 0.5 * M_PI * k) / fact).epsilon(1e-13));
  }
  const Series r = sqrt(x) * sqrt(x);
  CHECK(r[0] == doctest::Approx(x0));
  CHECK(r[1] == doctest::Approx(1.0));
  for (int k = 2; k <= 6; ++k) CHECK(std::abs(r[k]) < 1e-12);
  const Series one = x * reciprocal(x);
  CHECK(one[0] == doctest::Approx(1.0));
  for (int k = 1; k <= 6; ++k) CHECK(std::abs(one[k]) < 1e-12);
}

TEST_CASE("series reversion inverts composition") {
  Series f(7);
  f[1] = 1.3;
  f[2] = -0.4;
  f[3] = 0.25;
  f[5] = 0.1;
  const Series g = f.revert();
  const Series id = f.compose(g);
  CHECK(std::abs(id[0]) < 1e-15);
  CHECK(id[1] == doctest::Approx(1.0));
  for (int k = 2; k <= 7; ++k) CHECK(std::abs(id[k]) < 1e-12);
}

#include "billspec/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "billspec/error.hpp"

namespace billspec::oracle {

namespace {

using C = std::complex<double>;

C horner(const std::vector<double>& c, C z) {
  C r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * z + *it;
  return r;
}

C horner(const std::vector<C>& c, C z) {
  C r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * z + *it;
  return r;
}

std::vector<double> derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t m = 1; m < c.size(); ++m) d.push_back(m * c[m]);
  return d;
}

}  // namespace

std::complex<double> thimble_integral(const std::vector<double>& phi, const std::vector<C>& u, double k) {
  if (phi.size() < 3 || phi[2] == 0.0) throw Error(ErrorCode::SingularHessian, "degenerate critical point");
  const std::vector<double> dphi = derivative(phi);
  const double hess = 2.0 * phi[2];
  const double sgn = hess > 0 ? 1.0 : -1.0;
  // phi(z) = i t^2 / 2 along the contour
  const C target_unit(0.0, 1.0);
  const C slope0 = std::exp(C(0.0, sgn * M_PI / 4)) / std::sqrt(std::abs(hess));
  const double tmax = std::sqrt(2.0 * 40.0 / k);
  const int half = 4000;
  const double h = tmax / half;
  auto dz = [&](C z, double t) { return t == 0.0 ? slope0 : target_unit * t / horner(dphi, z); };
  C total = slope0 * horner(u, 0.0);
  for (double dir : {1.0, -1.0}) {
    C z = 0.0;
    for (int i = 1; i <= half; ++i) {
      const double t = dir * i * h;
      C guess = z + dz(z, t - dir * h) * (dir * h);
      for (int it = 0; it < 50; ++it) {
        const C f = horner(phi, guess) - target_unit * (0.5 * t * t);
        const C step = f / horner(dphi, guess);
        guess -= step;
        if (std::abs(step) < 1e-16 * (1.0 + std::abs(guess))) break;
      }
      z = guess;
      total += std::exp(-0.5 * k * t * t) * horner(u, z) * dz(z, t);
    }
  }
  return total * h;
}

std::map<std::vector<int>, std::int64_t> pairing_classes(int j) {
  const int v = 2 * j;
  const int halves = 3 * v;
  std::map<std::vector<int>, std::int64_t> classes;
  std::vector<int> mate(halves, -1);
  std::vector<int> perm(v);
  std::function<void()> rec = [&]() {
    int first = -1;
    for (int h = 0; h < halves; ++h) {
      if (mate[h] < 0) {
        first = h;
        break;
      }
    }
    if (first < 0) {
      std::vector<int> a(v * v, 0);
      for (int h = 0; h < halves; ++h) {
        if (h < mate[h]) {
          const int x = h / 3, y = mate[h] / 3;
          a[x * v + y] += 1;
          if (x != y) a[y * v + x] += 1;
        }
      }
      std::iota(perm.begin(), perm.end(), 0);
      std::vector<int> best;
      do {
        std::vector<int> b(v * v);
        for (int x = 0; x < v; ++x)
          for (int y = 0; y < v; ++y) b[x * v + y] = a[perm[x] * v + perm[y]];
        if (best.empty() || b < best) best = b;
      } while (std::next_permutation(perm.begin(), perm.end()));
      ++classes[best];
      return;
    }
    for (int h = first + 1; h < halves; ++h) {
      if (mate[h] >= 0) continue;
      mate[first] = h;
      mate[h] = first;
      rec();
      mate[first] = mate[h] = -1;
    }
  };
  rec();
  return classes;
}

}  // namespace billspec::oracle

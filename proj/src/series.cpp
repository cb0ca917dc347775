#include "billspec/series.hpp"

#include <algorithm>
#include <stdexcept>

namespace billspec {

namespace {

int common_order(const Series& a, const Series& b) {
  return std::min(a.order(), b.order());
}

}  // namespace

double Series::derivative_value(int k) const {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f * (*this)[k];
}

Series Series::truncated(int order) const {
  Series r(order);
  for (int k = 0; k <= order && k <= this->order(); ++k) r.c_[k] = c_[k];
  return r;
}

Series Series::derivative() const {
  Series r(std::max(order() - 1, 0));
  for (int k = 1; k <= order(); ++k) r.c_[k - 1] = k * c_[k];
  return r;
}

Series Series::integral() const {
  Series r(order() + 1);
  for (int k = 0; k <= order(); ++k) r.c_[k + 1] = c_[k] / (k + 1);
  return r;
}

double Series::evaluate(double d) const {
  double v = 0.0;
  for (int k = order(); k >= 0; --k) v = v * d + c_[k];
  return v;
}

Series& Series::operator+=(const Series& o) {
  if (o.order() < order()) c_.resize(o.c_.size());
  for (int k = 0; k <= order(); ++k) c_[k] += o.c_[k];
  return *this;
}

Series& Series::operator-=(const Series& o) {
  if (o.order() < order()) c_.resize(o.c_.size());
  for (int k = 0; k <= order(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Series& Series::operator*=(double a) {
  for (double& v : c_) v *= a;
  return *this;
}

Series Series::compose(const Series& inner) const {
  const int n = common_order(*this, inner);
  Series g = inner.truncated(n);
  g.c_[0] = 0.0;
  Series r = Series::constant(c_[n], n);
  for (int k = n - 1; k >= 0; --k) {
    r = r * g;
    r.c_[0] += c_[k];
  }
  return r;
}

Series Series::revert() const {
  const int n = order();
  if (n < 1 || c_[1] == 0.0) {
    throw std::domain_error("series reversion needs a nonzero linear term");
  }
  Series b(n);
  b.c_[1] = 1.0 / c_[1];
  for (int m = 2; m <= n; ++m) {
    Series probe = b.truncated(m);
    Series self = truncated(m);
    self.c_[0] = 0.0;
    const double residual = self.compose(probe)[m];
    b.c_[m] = -residual / c_[1];
  }
  return b;
}

Series operator+(Series a, const Series& b) { return a += b; }
Series operator-(Series a, const Series& b) { return a -= b; }
Series operator-(const Series& a) { return a * -1.0; }
Series operator*(Series a, double s) { return a *= s; }
Series operator*(double s, Series a) { return a *= s; }
Series operator+(Series a, double s) {
  a[0] += s;
  return a;
}

Series operator*(const Series& a, const Series& b) {
  const int n = common_order(a, b);
  Series r(n);
  for (int i = 0; i <= n; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; i + j <= n; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

Series reciprocal(const Series& a) {
  const int n = a.order();
  Series r(n);
  r[0] = 1.0 / a[0];
  for (int m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (int k = 1; k <= m; ++k) acc += a[k] * r[m - k];
    r[m] = -acc * r[0];
  }
  return r;
}

Series sqrt(const Series& a) {
  const int n = a.order();
  Series r(n);
  r[0] = std::sqrt(a[0]);
  for (int m = 1; m <= n; ++m) {
    double acc = a[m];
    for (int k = 1; k < m; ++k) acc -= r[k] * r[m - k];
    r[m] = acc / (2.0 * r[0]);
  }
  return r;
}

Series exp(const Series& a) {
  const int n = a.order();
  Series r(n);
  r[0] = std::exp(a[0]);
  for (int m = 1; m <= n; ++m) {
    double acc = 0.0;
    for (int k = 1; k <= m; ++k) acc += k * a[k] * r[m - k];
    r[m] = acc / m;
  }
  return r;
}

namespace {

void sin_cos(const Series& a, Series& s, Series& c) {
  const int n = a.order();
  s = Series(n);
  c = Series(n);
  s[0] = std::sin(a[0]);
  c[0] = std::cos(a[0]);
  for (int m = 1; m <= n; ++m) {
    double as = 0.0, ac = 0.0;
    for (int k = 1; k <= m; ++k) {
      as += k * a[k] * c[m - k];
      ac += k * a[k] * s[m - k];
    }
    s[m] = as / m;
    c[m] = -ac / m;
  }
}

}  // namespace

Series sin(const Series& a) {
  Series s, c;
  sin_cos(a, s, c);
  return s;
}

Series cos(const Series& a) {
  Series s, c;
  sin_cos(a, s, c);
  return c;
}

}  // namespace billspec

#pragma once

#include <cmath>
#include <vector>

namespace billspec {

// Truncated univariate Taylor series c[0] + c[1] d + ... + c[order] d^order.
// All arithmetic truncates at the common order of the operands.
class Series {
 public:
  Series() : c_(1, 0.0) {}
  explicit Series(int order) : c_(static_cast<std::size_t>(order) + 1, 0.0) {}

  static Series constant(double value, int order) {
    Series s(order);
    s.c_[0] = value;
    return s;
  }
  // The series of the identity map at x0: x0 + d.
  static Series variable(double x0, int order) {
    Series s(order);
    s.c_[0] = x0;
    if (order >= 1) s.c_[1] = 1.0;
    return s;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double operator[](int k) const { return k <= order() ? c_[k] : 0.0; }
  double& operator[](int k) { return c_[k]; }
  const std::vector<double>& coefficients() const { return c_; }

  // k-th derivative at the expansion point, k! c[k].
  double derivative_value(int k) const;

  Series truncated(int order) const;
  Series derivative() const;  // order drops by one
  Series integral() const;    // zero constant term, order grows by one
  double evaluate(double d) const;

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double a);

  // f(inner) for inner with zero constant term.
  Series compose(const Series& inner) const;
  // Compositional inverse of a series with c[0] = 0 and c[1] != 0.
  Series revert() const;

 private:
  std::vector<double> c_;
};

Series operator+(Series a, const Series& b);
Series operator-(Series a, const Series& b);
Series operator-(const Series& a);
Series operator*(const Series& a, const Series& b);
Series operator*(Series a, double s);
Series operator*(double s, Series a);
Series operator+(Series a, double s);

Series reciprocal(const Series& a);
Series sqrt(const Series& a);
Series exp(const Series& a);
Series sin(const Series& a);
Series cos(const Series& a);

// A planar curve jet: Taylor coefficients of both coordinates.
struct Jet2 {
  Series x;
  Series y;
  int order() const { return x.order(); }
};

}  // namespace billspec

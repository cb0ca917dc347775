#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "billspec/series.hpp"

namespace billspec {

using Exponent = std::vector<std::uint8_t>;

// Graded monomial basis in `vars` variables up to total degree `degree`,
// with a precomputed product table. Shared between polynomials.
class MonomialBasis {
 public:
  static std::shared_ptr<const MonomialBasis> get(int vars, int degree);

  MonomialBasis(int vars, int degree);

  int vars() const { return vars_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const Exponent& exponent(int i) const { return exps_[i]; }
  int total_degree(int i) const { return degs_[i]; }
  int index_of(const Exponent& e) const;  // -1 if degree too high
  // First index of monomials with total degree d (monomials are graded).
  int degree_begin(int d) const { return begin_[d]; }

  struct Product {
    int a, b, out;
  };
  const std::vector<Product>& products() const { return products_; }
  // For each monomial i and variable v: index of x_v * m_i (or -1).
  int shift(int i, int v) const { return shift_[i * vars_ + v]; }

 private:
  int vars_;
  int degree_;
  std::vector<Exponent> exps_;
  std::vector<int> degs_;
  std::vector<int> begin_;
  std::map<Exponent, int> index_;
  std::vector<Product> products_;
  std::vector<int> shift_;
};

// Truncated multivariate Taylor polynomial sum_a c_a x^a, |a| <= degree.
template <class T>
class MultiPoly {
 public:
  MultiPoly() = default;
  MultiPoly(int vars, int degree)
      : basis_(MonomialBasis::get(vars, degree)), c_(basis_->size(), T{}) {}
  explicit MultiPoly(std::shared_ptr<const MonomialBasis> basis)
      : basis_(std::move(basis)), c_(basis_->size(), T{}) {}

  static MultiPoly constant(T value, int vars, int degree) {
    MultiPoly p(vars, degree);
    p.c_[0] = value;
    return p;
  }
  // x_v around zero.
  static MultiPoly variable(int v, int vars, int degree) {
    MultiPoly p(vars, degree);
    if (degree >= 1) {
      Exponent e(vars, 0);
      e[v] = 1;
      p.c_[p.basis_->index_of(e)] = T(1);
    }
    return p;
  }

  const MonomialBasis& basis() const { return *basis_; }
  const std::shared_ptr<const MonomialBasis>& basis_ptr() const { return basis_; }
  int vars() const { return basis_->vars(); }
  int degree() const { return basis_->degree(); }
  T& operator[](int i) { return c_[i]; }
  const T& operator[](int i) const { return c_[i]; }
  T coefficient(const Exponent& e) const {
    const int i = basis_->index_of(e);
    return i < 0 ? T{} : c_[i];
  }
  T value() const { return c_[0]; }

  // Mixed partial derivative at zero for the multi-index `indices`
  // (variable labels, repetition allowed): alpha! * c_alpha.
  T derivative(const std::vector<int>& indices) const {
    Exponent e(vars(), 0);
    for (int i : indices) ++e[i];
    double factor = 1.0;
    for (auto k : e) {
      for (int m = 2; m <= k; ++m) factor *= m;
    }
    return coefficient(e) * factor;
  }

  MultiPoly& operator+=(const MultiPoly& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  MultiPoly& operator-=(const MultiPoly& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  MultiPoly& operator*=(T s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
  friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
  friend MultiPoly operator*(MultiPoly a, T s) { return a *= s; }
  friend MultiPoly operator*(T s, MultiPoly a) { return a *= s; }
  friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    MultiPoly r(a.basis_);
    for (const auto& p : a.basis_->products()) {
      r.c_[p.out] += a.c_[p.a] * b.c_[p.b];
    }
    return r;
  }
  MultiPoly operator+(T s) const {
    MultiPoly r = *this;
    r.c_[0] += s;
    return r;
  }

  // d/dx_v, keeping the same basis (top degree becomes zero).
  MultiPoly partial(int v) const {
    MultiPoly r(basis_);
    for (int i = 0; i < basis_->size(); ++i) {
      const int j = basis_->shift(i, v);
      if (j < 0) continue;
      r.c_[i] = c_[j] * static_cast<double>(basis_->exponent(j)[v]);
    }
    return r;
  }

  // f(p) for a univariate series f expanded at p.value().
  MultiPoly apply(const Series& f) const {
    MultiPoly g = *this;
    g.c_[0] = T{};
    MultiPoly r = MultiPoly::constant(T(f[degree()]), vars(), degree());
    for (int k = degree() - 1; k >= 0; --k) {
      r = r * g;
      r.c_[0] += T(f[k]);
    }
    return r;
  }

  // Change of scalar type (real to complex).
  template <class U>
  MultiPoly<U> cast() const {
    MultiPoly<U> r(basis_);
    for (int i = 0; i < basis_->size(); ++i) r[i] = U(c_[i]);
    return r;
  }

 private:
  std::shared_ptr<const MonomialBasis> basis_;
  std::vector<T> c_;
};

// Same polynomial in a basis of another degree (truncating or zero-padding).
template <class T>
MultiPoly<T> regrade(const MultiPoly<T>& p, int degree) {
  MultiPoly<T> r(p.vars(), degree);
  for (int i = 0; i < p.basis().size(); ++i) {
    if (p.basis().total_degree(i) > degree) break;
    r[r.basis().index_of(p.basis().exponent(i))] = p[i];
  }
  return r;
}

using RealPoly = MultiPoly<double>;
using ComplexPoly = MultiPoly<std::complex<double>>;

inline RealPoly sqrt(const RealPoly& p) {
  return p.apply(sqrt(Series::variable(p.value(), p.degree())));
}
inline RealPoly reciprocal(const RealPoly& p) {
  return p.apply(reciprocal(Series::variable(p.value(), p.degree())));
}

}  // namespace billspec

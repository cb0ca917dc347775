#include "billspec/invariants.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <boost/math/special_functions/hankel.hpp>

#include "billspec/error.hpp"

namespace billspec {

namespace {

constexpr double kPi = 3.14159265358979323846;
const Complex kI(0.0, 1.0);

Complex i_power(int m) {
  static const Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((m % 4) + 4) % 4];
}

}  // namespace

Rational hankel_coeff_rational(int m) {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "Hankel coefficient order must be >= 0");
  Rational num = 1, den = 1;
  for (int j = 1; j <= m; ++j) {
    num *= 4 - (2 * j - 1) * (2 * j - 1);
    den *= 8 * j;
  }
  return num / den;
}

Rational hankel_coeff_recursive(int m) {
  if (m < 0) throw Error(ErrorCode::InvalidArgument, "Hankel coefficient order must be >= 0");
  Rational a = 1;
  for (int j = 1; j <= m; ++j) a = a * Rational(4 - (2 * j - 1) * (2 * j - 1)) / Rational(8 * j);
  return a;
}

double hankel_coeff(int m) {
  return static_cast<double>(hankel_coeff_rational(m)) / std::sqrt(2.0 * kPi);
}

HankelAmplitude::HankelAmplitude(int m_max) {
  if (m_max < 0) throw Error(ErrorCode::InvalidArgument, "truncation order must be >= 0");
  for (int m = 0; m <= m_max; ++m) c.push_back(hankel_coeff(m));
}

Complex HankelAmplitude::series(double z) const {
  Complex sum = 0.0;
  for (int m = order(); m >= 0; --m) sum = sum / z + i_power(m) * c[m];
  return sum;
}

Complex HankelAmplitude::series_derivative(double z) const {
  Complex sum = 0.0;
  for (int m = 1; m <= order(); ++m) sum -= static_cast<double>(m) * i_power(m) * c[m] * std::pow(z, -m - 1);
  return sum;
}

double link_cosine(const Domain& domain, double s, double s_next) {
  const Vec2 a = domain.position(s);
  const BoundarySample b = domain.sample(s_next);
  const Vec2 v = a - b.position;
  const double r = v.norm();
  if (!(r > 1e-12 * domain.total_length())) throw Error(ErrorCode::DiagonalSingularity, "coincident link endpoints");
  return b.normal.dot(v) / r;
}

Complex kernel_amplitude(const Domain& domain, double s, double s_next, double k, int truncation) {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const double r = (domain.position(s) - domain.position(s_next)).norm();
  if (!(r > 1e-12 * domain.total_length())) throw Error(ErrorCode::DiagonalSingularity, "chord below cutoff");
  const double cos_theta = link_cosine(domain, s, s_next);
  const HankelAmplitude h(truncation);
  return std::sqrt(k / r) * std::polar(1.0, k * r + 0.75 * kPi) * cos_theta * h.series(k * r);
}

Complex kernel_exact(const Domain& domain, double s, double s_next, double k) {
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const double r = (domain.position(s) - domain.position(s_next)).norm();
  if (!(r > 1e-12 * domain.total_length())) throw Error(ErrorCode::DiagonalSingularity, "chord below cutoff");
  const double cos_theta = link_cosine(domain, s, s_next);
  return -0.5 * kI * k * cos_theta * boost::math::cyl_hankel_1(1.0, k * r);
}

double link_product(const Domain& domain, const std::vector<double>& s, LinkPower power) {
  const int q = static_cast<int>(s.size());
  double prod = 1.0;
  for (int i = 0; i < q; ++i) {
    const int j = (i + 1) % q;
    const double r = (domain.position(s[i]) - domain.position(s[j])).norm();
    const double c = link_cosine(domain, s[i], s[j]);
    prod *= c / (power == LinkPower::Full ? r : std::sqrt(r));
  }
  return prod;
}

Complex trace_amplitude_a0(const Domain& domain, const std::vector<double>& s, double k,
                           const AmplitudeOptions& opt) {
  const int q = static_cast<int>(s.size());
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "configuration needs at least two points");
  if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  std::vector<double> chords(q);
  double length = 0.0;
  for (int i = 0; i < q; ++i) {
    chords[i] = (domain.position(s[i]) - domain.position(s[(i + 1) % q])).norm();
    if (!(chords[i] > std::max(opt.cutoff, 1e-12 * domain.total_length()))) {
      throw Error(ErrorCode::DiagonalSingularity, "chord below cutoff");
    }
    length += chords[i];
  }
  Complex a = std::pow(k / (2.0 * kPi), 0.5 * q) * link_product(domain, s, opt.link_power);
  Complex log_derivative = 0.5 * q / k;
  if (opt.hankel_terms > 0) {
    const HankelAmplitude h(opt.hankel_terms);
    for (int i = 0; i < q; ++i) {
      const Complex g = h.series(k * chords[i]) / h.c[0];
      a *= g;
      log_derivative += chords[i] * h.series_derivative(k * chords[i]) / h.c[0] / g;
    }
  }
  Complex out = length * a;
  if (opt.k_derivative) out += kI * a * log_derivative;
  return out;
}

Complex symplectic_prefactor(const PeriodicOrbit& orbit, double k) {
  const Classification c = classify_orbit(orbit, orbit.degeneracy_tol);
  if (c.degenerate) throw Error(ErrorCode::DegenerateOrbit, "symplectic prefactor needs a nondegenerate orbit");
  const double det = orbit.hessian.determinant();
  return std::polar(1.0, k * orbit.length + 0.25 * kPi * c.signature) / std::sqrt(std::abs(det));
}

ComplexPoly link_amplitude_taylor(const Domain& domain, const std::vector<double>& s, int degree) {
  const int q = static_cast<int>(s.size());
  std::vector<RealPoly> px, py, tx, ty;
  for (int i = 0; i < q; ++i) {
    const Jet2 j = domain.jet(s[i], degree + 1);
    const RealPoly v = RealPoly::variable(i, q, degree);
    px.push_back(v.apply(j.x));
    py.push_back(v.apply(j.y));
    tx.push_back(v.apply(j.x.derivative()));
    ty.push_back(v.apply(j.y.derivative()));
  }
  RealPoly length(q, degree);
  RealPoly product = RealPoly::constant(1.0, q, degree);
  for (int i = 0; i < q; ++i) {
    const int n = (i + 1) % q;
    const RealPoly dx = px[i] - px[n], dy = py[i] - py[n];
    const RealPoly r2 = dx * dx + dy * dy;
    if (!(r2.value() > 0.0)) throw Error(ErrorCode::DiagonalSingularity, "coincident reflection points");
    length += sqrt(r2);
    // interior normal at the endpoint: tangent rotated by +90 degrees
    const RealPoly dot = dy * tx[n] - dx * ty[n];
    product = product * dot * reciprocal(r2);
  }
  return (length * product).cast<Complex>();
}

PhaseModel billiard_phase_model(const Domain& domain, const std::vector<double>& s, int degree) {
  return PhaseModel(length_taylor(domain, s, degree), link_amplitude_taylor(domain, s, degree));
}

double cubic_contraction(const Domain& domain, const std::vector<double>& s, const Eigen::VectorXd& h) {
  const RealPoly l = length_taylor(domain, s, 3);
  const MonomialBasis& basis = l.basis();
  double total = 0.0;
  for (int i = basis.degree_begin(3); i < basis.size(); ++i) {
    double term = l[i];
    const Exponent& e = basis.exponent(i);
    for (int v = 0; v < basis.vars(); ++v) term *= std::pow(h[v], e[v]);
    total += term;
  }
  return 6.0 * total;
}

Complex balian_bloch_term(int q, double length, double link_prod, double contraction, double det_scale,
                          int sign, int j) {
  Complex b = std::polar(1.0, -0.25 * kPi * q) / (2.0 * q) * length * link_prod;
  if (j == 0) return b;
  if (!(det_scale > 0.0)) throw Error(ErrorCode::DegenerateFit, "c_gamma * eps must be nonzero");
  const double w = static_cast<double>(w_of_j(j));
  b *= std::pow(contraction, 2 * j) * std::pow(det_scale, -3 * j) * w;
  b *= sign > 0 ? i_power(j) : i_power(-j);
  return b;
}

Complex InvariantReport::prefactor(double k) const {
  if (det_hessian == 0.0) throw Error(ErrorCode::DegenerateOrbit, "no nondegenerate deformed orbit in report");
  return std::polar(1.0, k * length + 0.25 * kPi * signature) / std::sqrt(std::abs(det_hessian));
}

InvariantReport balian_bloch_leading(const DeformationFamily& family, const PeriodicOrbit& orbit, double eps,
                                     int max_j, double c_gamma) {
  if (max_j < 0) throw Error(ErrorCode::InvalidArgument, "j must be >= 0");
  if (max_j > 4) throw Error(ErrorCode::ResourceLimit, "j above the diagram enumeration bound 4");
  if (!std::isfinite(c_gamma) || c_gamma == 0.0) throw Error(ErrorCode::DegenerateFit, "c_gamma must be nonzero");
  if (!std::isfinite(eps) || (max_j > 0 && eps == 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "eps must be nonzero for j >= 1");
  }
  const AdjugateFactorization fac = adjugate_factorization(orbit);
  const DomainPtr ref = family.reference();
  InvariantReport r;
  r.p = orbit.p;
  r.q = orbit.q;
  r.s = orbit.s;
  r.eps = eps;
  r.c_gamma = c_gamma;
  r.length = orbit.length;
  r.link_product = link_product(*ref, orbit.s);
  r.h = fac.h;
  r.adjugate_sign = fac.sign;
  r.cubic_contraction = cubic_contraction(*ref, orbit.s, fac.h);
  r.generic = std::abs(r.cubic_contraction) > 1e-8 * std::pow(fac.h.squaredNorm(), 1.5);
  for (int j = 0; j <= max_j; ++j) r.w.push_back(w_of_j(j));

  if (eps != 0.0) {
    const DomainPtr d = deform(family, eps);
    const std::vector<double> s = transport_from_reference(family, *d, orbit.s);
    const Eigen::MatrixXd hess = hessian_length(*d, s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const Eigen::VectorXd ev = es.eigenvalues();
    Eigen::Index small = 0;
    ev.cwiseAbs().minCoeff(&small);
    r.small_eigenvalue = ev[small];
    r.sign = ev[small] > 0 ? 1 : -1;
    r.det_hessian = hess.determinant();
    for (Eigen::Index i = 0; i < ev.size(); ++i) r.signature += ev[i] > 0 ? 1 : -1;
    double others = 1.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (i != small) others *= ev[i];
    }
    const Eigen::VectorXd h = std::sqrt(std::abs(others)) * es.eigenvectors().col(small);
    r.measured_contraction = cubic_contraction(*d, s, h);
    for (int j = 0; j <= max_j; ++j) {
      r.b_measured.push_back(balian_bloch_term(r.q, r.length, r.link_product, r.measured_contraction,
                                               std::abs(r.det_hessian), r.sign, j));
    }
  }
  const int sign = r.sign != 0 ? r.sign : (c_gamma * eps * fac.sign > 0 ? 1 : -1);
  for (int j = 0; j <= max_j; ++j) {
    r.b.push_back(balian_bloch_term(r.q, r.length, r.link_product, r.cubic_contraction,
                                    std::abs(c_gamma * eps), sign, j));
  }
  return r;
}

double Mollifier::operator()(double t) const {
  const double x = std::abs(t - center);
  if (x <= 0.5 * delta) return 1.0;
  if (x >= delta) return 0.0;
  const double y = (x - 0.5 * delta) / (0.5 * delta);
  const double z = 2.0 * (1.0 / (1.0 - y) - 1.0 / y);
  if (z > 700.0) return 0.0;
  return 1.0 / (1.0 + std::exp(z));
}

Mollifier make_mollifier(double center, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta) || !std::isfinite(center)) {
    throw Error(ErrorCode::InvalidArgument, "mollifier needs finite center and delta > 0");
  }
  return Mollifier{center, delta};
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Boundary position and interior normal from Taylor jets on a fine table.
class BoundaryTable {
 public:
  static constexpr int kOrder = 5;

  BoundaryTable(const Domain& domain, int nodes) : length_(domain.total_length()), n_(nodes) {
    h_ = length_ / n_;
    inv_h_ = n_ / length_;
    coeff_.resize(static_cast<std::size_t>(n_) * 2 * (kOrder + 1));
    for (int m = 0; m < n_; ++m) {
      const Jet2 j = domain.jet(m * h_, kOrder);
      for (int o = 0; o <= kOrder; ++o) {
        coeff_[(m * 2 + 0) * (kOrder + 1) + o] = j.x[o];
        coeff_[(m * 2 + 1) * (kOrder + 1) + o] = j.y[o];
      }
    }
  }

  void eval(double s, Vec2& x, Vec2& normal) const {
    const std::int64_t shift = static_cast<std::int64_t>(n_) << 20;
    const std::int64_t raw = static_cast<std::int64_t>(s * inv_h_ + 0.5 + static_cast<double>(shift)) - shift;
    const double d = s - static_cast<double>(raw) * h_;
    int m = static_cast<int>(raw % n_);
    if (m < 0) m += n_;
    const double* cx = &coeff_[(m * 2 + 0) * (kOrder + 1)];
    const double* cy = &coeff_[(m * 2 + 1) * (kOrder + 1)];
    double px = cx[kOrder], py = cy[kOrder], tx = kOrder * cx[kOrder], ty = kOrder * cy[kOrder];
    for (int o = kOrder - 1; o >= 1; --o) {
      px = px * d + cx[o];
      py = py * d + cy[o];
      tx = tx * d + o * cx[o];
      ty = ty * d + o * cy[o];
    }
    x = Vec2(px * d + cx[0], py * d + cy[0]);
    normal = Vec2(-ty, tx);  // unit up to the jet truncation error
  }

 private:
  double length_;
  int n_;
  double h_ = 0.0;
  double inv_h_ = 0.0;
  std::vector<double> coeff_;
};

// Graded 1-d trapezoid nodes: density A sqrt(g0^2 + m^2 (y - c)^2).
struct AxisGrid {
  std::vector<double> y, w;
  double du = 0.0;
};

double graded_count(double lo, double hi, double center, double g0, double slope, double scale) {
  auto u = [&](double y) {
    const double x = y - center;
    if (slope <= 0.0) return scale * g0 * x;
    return scale * (0.5 * x * std::hypot(g0, slope * x) + 0.5 * g0 * g0 / slope * std::asinh(slope * x / g0));
  };
  return u(hi) - u(lo);
}

AxisGrid graded_axis(double lo, double hi, double center, double g0, double slope, double scale, bool periodic) {
  auto rho = [&](double y) { return scale * std::hypot(g0, slope * (y - center)); };
  auto u = [&](double y) {
    const double x = y - center;
    if (slope <= 0.0) return scale * g0 * x;
    return scale * (0.5 * x * std::hypot(g0, slope * x) + 0.5 * g0 * g0 / slope * std::asinh(slope * x / g0));
  };
  const double u_lo = u(lo), u_hi = u(hi);
  int n = static_cast<int>(std::ceil(u_hi - u_lo));
  n = std::max(4, n + (n % 2));
  AxisGrid g;
  g.du = (u_hi - u_lo) / n;
  double y = lo;
  for (int j = 0; j <= n; ++j) {
    const double target = u_lo + j * g.du;
    for (int it = 0; it < 60; ++it) {
      const double step = (u(y) - target) / rho(y);
      y = std::clamp(y - step, lo, hi);
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(y))) break;
    }
    if (j == n) y = hi;
    if (periodic && j == n) break;
    g.y.push_back(y);
    g.w.push_back(g.du / rho(y));
  }
  return g;
}

// Smallest graded density dominating the per-bin gradient bound `g`.
void fit_density(const std::vector<double>& g, double y0, double bin, double scale, double& center, double& g0,
                 double& slope) {
  const int bins = static_cast<int>(g.size());
  const double lo = y0 - 0.5 * bin, hi = y0 + (bins - 0.5) * bin;
  double best = std::numeric_limits<double>::infinity();
  for (int c = 0; c < bins; ++c) {
    const double yc = y0 + c * bin;
    for (int b = 0; b < bins; ++b) {
      const double base = g[b];
      if (base < g[c]) continue;
      double m = 0.0;
      for (int i = 0; i < bins; ++i) {
        const double x = std::abs(y0 + i * bin - yc);
        if (g[i] > base) m = std::max(m, std::sqrt(g[i] * g[i] - base * base) / std::max(x, 1e-300));
      }
      const double count = graded_count(lo, hi, yc, base, m, scale);
      if (count < best) {
        best = count;
        center = yc;
        g0 = base;
        slope = m;
      }
    }
  }
}

struct Coarse {
  int q = 0;
  int n = 0;
  double h = 0.0;
  std::int64_t total = 1;
  std::vector<int> index(std::int64_t id) const {
    std::vector<int> m(q);
    for (int d = q - 1; d >= 0; --d) {
      m[d] = static_cast<int>(id % n);
      id /= n;
    }
    return m;
  }
  std::int64_t id(const std::vector<int>& m) const {
    std::int64_t r = 0;
    for (int d = 0; d < q; ++d) r = r * n + (((m[d] % n) + n) % n);
    return r;
  }
};

Complex pairwise_sum(const std::vector<Complex>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 0) return 0.0;
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace

OracleResult trace_oracle(const Domain& domain, int q, double k, const Mollifier& mol, const OracleOptions& opt) {
  if (q < 2 || q > 4) throw Error(ErrorCode::InvalidArgument, "oracle supports 2 <= q <= 4");
  if (!(k > 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (!(mol.delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "mollifier delta must be positive");
  if (!(opt.points_per_oscillation >= 8.0)) {
    throw Error(ErrorCode::ResolutionTooLow, "grid spacing exceeds 1/8 of the phase oscillation");
  }
  const double ell = domain.total_length();
  const double cutoff = opt.cutoff_factor / k;
  const BoundaryTable table(domain, std::max(1024, static_cast<int>(std::ceil(ell / 0.005))));

  Coarse c;
  c.q = q;
  c.n = opt.coarse > 0 ? opt.coarse : (q == 2 ? 1024 : q == 3 ? 160 : 48);
  c.h = ell / c.n;
  for (int d = 0; d < q; ++d) c.total *= c.n;
  std::vector<Vec2> cx, ct;
  for (int m = 0; m < c.n; ++m) {
    const BoundarySample b = domain.sample(m * c.h);
    cx.push_back(b.position);
    ct.push_back(b.tangent);
  }

  // Nodes whose Voronoi cell can meet the mollifier support: L moves by at
  // most |grad| h/2 + |hess| (q h / 2)^2 / 2 inside a cell.
  double kappa_max = 0.0;
  for (double kv : domain.tables().curvature) kappa_max = std::max(kappa_max, std::abs(kv));
  std::vector<char> active(c.total, 0);
  std::vector<float> grad(c.total * q, 0.0f);
  std::vector<float> lengths(c.total, 0.0f);
  for (std::int64_t id = 0; id < c.total; ++id) {
    const std::vector<int> m = c.index(id);
    double length = 0.0, chord_min = std::numeric_limits<double>::infinity();
    for (int i = 0; i < q; ++i) {
      const double r = (cx[m[i]] - cx[m[(i + 1) % q]]).norm();
      length += r;
      chord_min = std::min(chord_min, r);
    }
    lengths[id] = static_cast<float>(length);
    const double gap = std::abs(length - mol.center) - mol.delta;
    if (gap >= q * c.h) continue;
    double gsum = 0.0;
    for (int i = 0; i < q; ++i) {
      const Vec2 a = cx[m[i]] - cx[m[(i + q - 1) % q]], b = cx[m[i]] - cx[m[(i + 1) % q]];
      double g = 0.0;
      if (a.norm() > 0.0) g += ct[m[i]].dot(a) / a.norm();
      if (b.norm() > 0.0) g += ct[m[i]].dot(b) / b.norm();
      grad[id * q + i] = static_cast<float>(g);
      gsum += std::abs(g);
    }
    const double hess = chord_min > 0.0 ? 2.0 * kappa_max + 4.0 / chord_min : std::numeric_limits<double>::infinity();
    const double reach = 0.5 * c.h * gsum + 0.5 * hess * std::pow(0.5 * q * c.h, 2);
    if (gap < 1.05 * reach + 1e-12) active[id] = 1;
  }
  UnionFind uf(c.total);
  for (std::int64_t id = 0; id < c.total; ++id) {
    if (!active[id]) continue;
    std::vector<int> m = c.index(id);
    for (int d = 0; d < q; ++d) {
      ++m[d];
      const std::int64_t nb = c.id(m);
      --m[d];
      if (active[nb]) uf.unite(static_cast<int>(id), static_cast<int>(nb));
    }
  }
  std::vector<int> comp(c.total, -1);
  std::vector<std::vector<std::int64_t>> members;
  {
    std::vector<int> label(c.total, -1);
    for (std::int64_t id = 0; id < c.total; ++id) {
      if (!active[id]) continue;
      const int root = uf.find(static_cast<int>(id));
      if (label[root] < 0) {
        label[root] = static_cast<int>(members.size());
        members.emplace_back();
      }
      comp[id] = label[root];
      members[label[root]].push_back(id);
    }
  }

  OracleResult result;
  result.components = static_cast<int>(members.size());
  result.min_points_per_oscillation = std::numeric_limits<double>::infinity();

  // Group components related by cyclic relabeling of S.
  std::vector<int> representative(members.size(), -1), multiplicity(members.size(), 0);
  for (std::size_t a = 0; a < members.size(); ++a) {
    if (representative[a] >= 0) continue;
    representative[a] = static_cast<int>(a);
    multiplicity[a] = 1;
    if (!opt.use_symmetry) continue;
    for (int r = 1; r < q; ++r) {
      const std::vector<int> m = c.index(members[a][0]);
      std::vector<int> shifted(q);
      for (int d = 0; d < q; ++d) shifted[d] = m[(d + r) % q];
      const int b = comp[c.id(shifted)];
      if (b < 0 || representative[b] >= 0 || members[b].size() != members[a].size()) continue;
      bool same = true;
      for (std::int64_t id : members[a]) {
        const std::vector<int> mm = c.index(id);
        for (int d = 0; d < q; ++d) shifted[d] = mm[(d + r) % q];
        if (comp[c.id(shifted)] != b) {
          same = false;
          break;
        }
      }
      if (!same) continue;
      representative[b] = static_cast<int>(a);
      ++multiplicity[a];
    }
  }

  const double scale = opt.points_per_oscillation * k / (2.0 * kPi);
  Complex fine_total = 0.0, coarse_total = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    if (representative[a] != static_cast<int>(a)) continue;
    const std::vector<std::int64_t>& nodes = members[a];
    // Unwrap the component to integer coordinates.
    std::vector<std::vector<int>> unwrapped(nodes.size());
    bool wraps = false;
    {
      std::vector<std::int64_t> where(c.total, -1);
      for (std::size_t i = 0; i < nodes.size(); ++i) where[nodes[i]] = static_cast<std::int64_t>(i);
      std::vector<char> seen(nodes.size(), 0);
      std::vector<std::size_t> queue{0};
      seen[0] = 1;
      unwrapped[0] = c.index(nodes[0]);
      for (std::size_t head = 0; head < queue.size() && !wraps; ++head) {
        const std::vector<int> u = unwrapped[queue[head]];
        for (int d = 0; d < q && !wraps; ++d) {
          for (int step : {-1, 1}) {
            std::vector<int> v = u;
            v[d] += step;
            const std::int64_t nb = where[c.id(v)];
            if (nb < 0) continue;
            if (!seen[nb]) {
              seen[nb] = 1;
              unwrapped[nb] = v;
              queue.push_back(static_cast<std::size_t>(nb));
            } else if (unwrapped[nb] != v) {
              wraps = true;
              break;
            }
          }
        }
      }
    }

    // Frame: principal axes of the Hessian at the critical point inside the
    // component when one exists, coordinate axes otherwise.
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(q);
    Eigen::MatrixXd frame = Eigen::MatrixXd::Identity(q, q);
    if (!wraps) {
      std::size_t start = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double dist = std::abs(lengths[nodes[i]] - mol.center);
        if (best < 0.0 || dist < best) {
          best = dist;
          start = i;
        }
      }
      std::vector<double> s(q);
      for (int d = 0; d < q; ++d) s[d] = unwrapped[start][d] * c.h;
      bool found = false;
      try {
        for (int it = 0; it < 50 && !found; ++it) {
          const Eigen::VectorXd g = grad_length(domain, s);
          if (g.norm() < 1e-11) {
            found = true;
            break;
          }
          const Eigen::VectorXd step = hessian_length(domain, s).fullPivLu().solve(g);
          const double limit = 2.0 * c.h;
          const double factor = step.norm() > limit ? limit / step.norm() : 1.0;
          for (int d = 0; d < q; ++d) s[d] -= factor * step[d];
        }
      } catch (const Error&) {
        found = false;
      }
      if (found) {
        std::vector<int> m(q);
        for (int d = 0; d < q; ++d) m[d] = static_cast<int>(std::lround(s[d] / c.h));
        found = comp[c.id(m)] == static_cast<int>(a);
      }
      if (found) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian_length(domain, s));
        frame = es.eigenvectors();
        for (int d = 0; d < q; ++d) origin[d] = s[d];
      } else {
        for (int d = 0; d < q; ++d) origin[d] = unwrapped[start][d] * c.h;
      }
    }

    OracleComponent oc;
    oc.multiplicity = multiplicity[a];
    std::vector<AxisGrid> axes(q);
    // Per-axis box and gradient bound per bin, from the coarse nodes.
    std::vector<double> box_lo(q, 0.0), box_hi(q, ell), bin_width(q, c.h);
    std::vector<std::vector<double>> bins(q);
    const double reach = wraps ? 0.0 : c.h * std::sqrt(static_cast<double>(q));
    for (int d = 0; d < q; ++d) {
      std::vector<double> coord(nodes.size()), slope_g(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        double y = 0.0, g = 0.0;
        for (int e = 0; e < q; ++e) {
          const double s = wraps ? c.index(nodes[i])[e] * c.h : unwrapped[i][e] * c.h;
          y += frame(e, d) * (s - origin[e]);
          g += frame(e, d) * grad[nodes[i] * q + e];
        }
        coord[i] = y;
        slope_g[i] = std::abs(g);
      }
      if (!wraps) {
        box_lo[d] = *std::min_element(coord.begin(), coord.end()) - reach;
        box_hi[d] = *std::max_element(coord.begin(), coord.end()) + reach;
      }
      const int nb = std::max(1, static_cast<int>(std::ceil((box_hi[d] - box_lo[d]) / c.h)));
      std::vector<double> g(nb, 0.0);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double y = wraps ? coord[i] : coord[i] - box_lo[d];
        const int b = std::clamp(static_cast<int>(std::floor(y / c.h)), 0, nb - 1);
        g[b] = std::max(g[b], slope_g[i]);
      }
      const int spread = static_cast<int>(std::ceil(reach / c.h)) + 1;
      bins[d].assign(nb, 0.0);
      for (int i = 0; i < nb; ++i) {
        for (int j = i - spread; j <= i + spread; ++j) {
          if (wraps) {
            bins[d][i] = std::max(bins[d][i], g[((j % nb) + nb) % nb]);
          } else if (j >= 0 && j < nb) {
            bins[d][i] = std::max(bins[d][i], g[j]);
          }
        }
      }
    }

    // Refine box and bounds on a uniform sub-grid of the box.
    if (!wraps) {
      const int ns = q == 2 ? 400 : q == 3 ? 40 : 14;
      std::vector<double> hs(q);
      for (int d = 0; d < q; ++d) hs[d] = (box_hi[d] - box_lo[d]) / ns;
      std::vector<std::vector<double>> sg(q, std::vector<double>(ns, 0.0));
      std::vector<int> first(q, ns), last_bin(q, -1);
      std::vector<int> idx(q, 0);
      std::vector<double> s(q), y(q);
      std::vector<Vec2> x(q), t(q);
      const double h_half = 0.5 * std::accumulate(hs.begin(), hs.end(), 0.0);
      bool done = false;
      while (!done) {
        for (int d = 0; d < q; ++d) y[d] = box_lo[d] + (idx[d] + 0.5) * hs[d];
        std::int64_t id = 0;
        for (int e = 0; e < q; ++e) {
          double v = origin[e];
          for (int d = 0; d < q; ++d) v += frame(e, d) * y[d];
          s[e] = v;
          const int m = static_cast<int>(std::lround(v / c.h));
          id = id * c.n + (((m % c.n) + c.n) % c.n);
        }
        if (comp[id] == static_cast<int>(a)) {
          for (int e = 0; e < q; ++e) {
            Vec2 nrm;
            table.eval(s[e], x[e], nrm);
            t[e] = Vec2(nrm.y(), -nrm.x());
          }
          double length = 0.0, chord_min = std::numeric_limits<double>::infinity();
          Eigen::VectorXd gs(q);
          for (int e = 0; e < q; ++e) {
            const Vec2 u = x[e] - x[(e + q - 1) % q], v = x[e] - x[(e + 1) % q];
            const double ru = u.norm(), rv = v.norm();
            length += rv;
            chord_min = std::min(chord_min, rv);
            gs[e] = (ru > 0.0 ? t[e].dot(u) / ru : 0.0) + (rv > 0.0 ? t[e].dot(v) / rv : 0.0);
          }
          const Eigen::VectorXd gy = frame.transpose() * gs;
          double lin = 0.0;
          for (int d = 0; d < q; ++d) lin += 0.5 * std::abs(gy[d]) * hs[d];
          const double hess = chord_min > 0.0 ? 2.0 * kappa_max + 4.0 / chord_min : std::numeric_limits<double>::infinity();
          const double gap = std::abs(length - mol.center) - mol.delta;
          if (gap < 1.05 * (lin + 0.5 * hess * h_half * h_half) + 1e-12) {
            for (int d = 0; d < q; ++d) {
              sg[d][idx[d]] = std::max(sg[d][idx[d]], std::abs(gy[d]));
              first[d] = std::min(first[d], idx[d]);
              last_bin[d] = std::max(last_bin[d], idx[d]);
            }
          }
        }
        int d = q - 1;
        for (; d >= 0; --d) {
          if (++idx[d] < ns) break;
          idx[d] = 0;
        }
        done = d < 0;
      }
      if (last_bin[0] >= 0) {
        for (int d = 0; d < q; ++d) {
          const int b0 = std::max(0, first[d] - 1), b1 = std::min(ns - 1, last_bin[d] + 1);
          std::vector<double> g(b1 - b0 + 1, 0.0);
          for (int i = b0; i <= b1; ++i) {
            for (int j = std::max(0, i - 1); j <= std::min(ns - 1, i + 1); ++j) {
              g[i - b0] = std::max(g[i - b0], sg[d][j]);
            }
          }
          const double lo = box_lo[d] + b0 * hs[d];
          box_hi[d] = box_lo[d] + (b1 + 1) * hs[d];
          box_lo[d] = lo;
          bin_width[d] = hs[d];
          bins[d] = std::move(g);
        }
      }
    }

    for (int d = 0; d < q; ++d) {
      const double lo = box_lo[d], hi = box_hi[d], bin = bin_width[d];
      std::vector<double>& gs = bins[d];
      const std::vector<double> g = gs;
      double gmax = 1e-3;
      for (double v : gs) gmax = std::max(gmax, v);
      for (double& v : gs) v = 1.1 * v + 0.02 * gmax;
      double center = 0.0, g0 = gmax, slope = 0.0;
      if (wraps) {
        g0 = 1.1 * gmax;
      } else {
        fit_density(gs, lo + 0.5 * bin, bin, scale, center, g0, slope);
      }
      axes[d] = graded_axis(lo, hi, center, g0, slope, scale, wraps);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double yb = lo + (static_cast<double>(i) + 0.5) * bin;
        const double spacing = axes[d].du / (scale * std::hypot(g0, slope * (yb - center)));
        if (g[i] > 0.0) {
          result.min_points_per_oscillation = std::min(result.min_points_per_oscillation, 2.0 * kPi / (k * g[i] * spacing));
        }
      }
      oc.lo.push_back(lo);
      oc.hi.push_back(hi);
      oc.nodes.push_back(static_cast<int>(axes[d].y.size()));
    }
    std::int64_t points = 1;
    for (int d = 0; d < q; ++d) points *= static_cast<std::int64_t>(axes[d].y.size());
    if (points > opt.max_points) {
      throw Error(ErrorCode::ResourceLimit, "oracle grid needs " + std::to_string(points) + " points");
    }

    const int comp_id = static_cast<int>(a);
    const int n0 = static_cast<int>(axes[0].y.size());
    std::vector<Complex> fine_parts(n0), coarse_parts(n0);
    std::vector<std::int64_t> counts(n0, 0);
    std::atomic<int> next{0};
    auto work = [&]() {
      std::vector<int> idx(q);
      std::vector<double> s(q);
      std::vector<Vec2> x(q), nrm(q);
      std::vector<double> base(q);
      const int last = q - 1;
      const double inv_h = 1.0 / c.h;
      const double round_shift = 0.5 + 1024.0 * c.n;
      for (int i0 = next++; i0 < n0; i0 = next++) {
        Complex fine = 0.0, coarse = 0.0;
        std::int64_t count = 0;
        std::fill(idx.begin(), idx.end(), 0);
        idx[0] = i0;
        while (true) {
          if (idx[last] == 0) {
            for (int e = 0; e < q; ++e) {
              double v = origin[e];
              for (int d = 0; d < last; ++d) v += frame(e, d) * axes[d].y[idx[d]];
              base[e] = v;
            }
          }
          std::int64_t id = 0;
          const double y_last = axes[last].y[idx[last]];
          for (int e = 0; e < q; ++e) {
            const double v = base[e] + frame(e, last) * y_last;
            s[e] = v;
            int m = static_cast<int>(static_cast<std::int64_t>(v * inv_h + round_shift) % c.n);
            id = id * c.n + m;
          }
          if (comp[id] == comp_id) {
            for (int e = 0; e < q; ++e) table.eval(s[e], x[e], nrm[e]);
            double length = 0.0, prod = 1.0;
            bool keep = true;
            for (int i = 0; i < q; ++i) {
              const int j = (i + 1) % q;
              const Vec2 v = x[i] - x[j];
              const double r = v.norm();
              if (r < cutoff) {
                keep = false;
                break;
              }
              length += r;
              prod *= nrm[j].dot(v) / (r * r);
            }
            const double window = keep ? mol(length) : 0.0;
            if (window > 0.0) {
              double weight = window * length * prod;
              bool even = true;
              for (int d = 0; d < q; ++d) {
                weight *= axes[d].w[idx[d]];
                even = even && idx[d] % 2 == 0;
              }
              const Complex term = std::polar(weight, k * length);
              fine += term;
              if (even) coarse += term * static_cast<double>(1 << q);
              ++count;
            }
          }
          int d = q - 1;
          for (; d >= 1; --d) {
            if (++idx[d] < static_cast<int>(axes[d].y.size())) break;
            idx[d] = 0;
          }
          if (d == 0) break;
        }
        fine_parts[i0] = fine;
        coarse_parts[i0] = coarse;
        counts[i0] = count;
      }
    };
    const int threads = std::max(1, opt.threads);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    const Complex fine = pairwise_sum(fine_parts, 0, fine_parts.size());
    const Complex coarse = pairwise_sum(coarse_parts, 0, coarse_parts.size());
    oc.evaluated = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
    oc.value = fine * static_cast<double>(oc.multiplicity);
    result.evaluated += oc.evaluated;
    fine_total += oc.value;
    coarse_total += coarse * static_cast<double>(oc.multiplicity);
    result.integrated.push_back(oc);
  }
  const Complex prefactor =
      0.5 * std::polar(1.0, -0.25 * kPi * q) / static_cast<double>(q) * std::pow(k / (2.0 * kPi), 0.5 * q);
  result.fine = prefactor * fine_total;
  result.coarse = prefactor * coarse_total;
  result.value = result.fine + (result.fine - result.coarse) / 3.0;
  result.error_estimate = std::abs(result.fine - result.coarse);
  if (!std::isfinite(result.min_points_per_oscillation)) result.min_points_per_oscillation = 0.0;
  for (auto& oc : result.integrated) oc.value *= prefactor;
  return result;
}

}  // namespace billspec

#include "billspec/length.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <random>

#include "billspec/billiard.hpp"
#include "billspec/error.hpp"

namespace billspec {

namespace {

double wrap_signed(double d, double period) {
  d = std::fmod(d, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

double wrap_positive(double d, double period) {
  d = std::fmod(d, period);
  if (d < 0.0) d += period;
  return d;
}

std::vector<Chord> links_of(const Domain& domain, const std::vector<double>& s) {
  const std::size_t q = s.size();
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "configuration needs at least two points");
  std::vector<Chord> links;
  links.reserve(q);
  for (std::size_t i = 0; i < q; ++i) links.push_back(chord(domain, s[i], s[(i + 1) % q]));
  return links;
}

// Lifted copy of `s` with gaps in [0, length); the gaps must add up to p * length.
std::vector<double> lift_config(const Domain& domain, const std::vector<double>& s, int p) {
  const double ell = domain.total_length();
  std::vector<double> out(s.size());
  out[0] = s[0];
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double gap = wrap_positive(s[(i + 1) % s.size()] - s[i], ell);
    if (gap < 1e-12 * ell) throw Error(ErrorCode::CoincidentPoints, "coincident reflection points");
    total += gap;
    if (i + 1 < s.size()) out[i + 1] = out[i] + gap;
  }
  const long winding = std::lround(total / ell);
  if (winding != p) {
    throw Error(ErrorCode::WrongWinding, "configuration ordering has winding " +
                                             std::to_string(winding) + ", expected " + std::to_string(p));
  }
  return out;
}

bool feasible(const std::vector<double>& x, int p, double ell) {
  const double gmin = 1e-6 * ell;
  const std::size_t q = x.size();
  for (std::size_t i = 0; i < q; ++i) {
    const double next = i + 1 < q ? x[i + 1] : x[0] + p * ell;
    const double gap = next - x[i];
    if (!(gap > gmin && gap < ell - gmin)) return false;
  }
  return true;
}

std::vector<double> add(const std::vector<double>& x, const Eigen::VectorXd& d) {
  std::vector<double> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += d[i];
  return y;
}

struct Solve {
  std::vector<double> x;
  double residual = 0.0;
  bool converged = false;
};

// Levenberg-Marquardt on the gradient restricted to `free` coordinates.
Solve newton_critical(const Domain& domain, std::vector<double> x, int p,
                      const std::vector<int>& free, int max_iter, double tol) {
  const double ell = domain.total_length();
  const int m = static_cast<int>(free.size());
  auto sub_grad = [&](const std::vector<double>& y) {
    const Eigen::VectorXd g = grad_length(domain, y);
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = g[free[i]];
    return r;
  };
  Eigen::VectorXd g = sub_grad(x);
  double lambda = 1e-6;
  for (int iter = 0; iter < max_iter && g.norm() > tol; ++iter) {
    const Eigen::MatrixXd hf = hessian_length(domain, x);
    Eigen::MatrixXd h(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) h(i, j) = hf(free[i], free[j]);
    const Eigen::MatrixXd hh = h * h;
    const double scale = std::max(1.0, hh.diagonal().maxCoeff());
    bool accepted = false;
    while (lambda < 1e12) {
      const Eigen::MatrixXd a = hh + lambda * scale * Eigen::MatrixXd::Identity(m, m);
      const Eigen::VectorXd step = a.ldlt().solve(-h * g);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
      for (int i = 0; i < m; ++i) full[free[i]] = step[i];
      const std::vector<double> y = add(x, full);
      if (feasible(y, p, ell)) {
        const Eigen::VectorXd gy = sub_grad(y);
        if (gy.norm() < g.norm()) {
          x = y;
          g = gy;
          lambda = std::max(lambda * 0.25, 1e-15);
          accepted = true;
          break;
        }
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  return {x, g.norm(), g.norm() <= tol};
}

// Ascent with a negative-definite modified Hessian, for maximal orbits.
std::vector<double> ascend(const Domain& domain, std::vector<double> x, int p, int max_iter) {
  const double ell = domain.total_length();
  const int q = static_cast<int>(x.size());
  double value = length_functional(domain, x);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd g = grad_length(domain, x);
    if (g.norm() < 1e-10 * value) break;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian_length(domain, x));
    const double floor = 1e-3 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Eigen::VectorXd inv(q);
    for (int i = 0; i < q; ++i) inv[i] = 1.0 / std::max(std::abs(es.eigenvalues()[i]), floor);
    const Eigen::VectorXd step =
        es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const std::vector<double> y = add(x, t * step);
      if (!feasible(y, p, ell)) continue;
      const double vy = length_functional(domain, y);
      if (vy > value) {
        x = y;
        value = vy;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return x;
}

// Rotate the labels so the first point has the smallest wrapped arclength.
std::vector<double> canonical_shift(const Domain& domain, const std::vector<double>& x, int p) {
  const double ell = domain.total_length();
  const std::size_t q = x.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < q; ++i) {
    if (wrap_positive(x[i], ell) < wrap_positive(x[best], ell)) best = i;
  }
  std::vector<double> out(q);
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t j = (best + i) % q;
    out[i] = x[j] + (j < best ? p * ell : 0.0);
  }
  const double shift = wrap_positive(out[0], ell) - out[0];
  for (double& v : out) v += shift;
  return out;
}

bool same_orbit(const Domain& domain, const std::vector<double>& a, const std::vector<double>& b) {
  const double ell = domain.total_length();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(wrap_signed(a[i] - b[i], ell)) > 1e-7 * ell) return false;
  }
  return true;
}

}  // namespace

double PeriodicOrbit::cos_normal(int i) const { return std::sin(theta[i]); }

double length_functional(const Domain& domain, const std::vector<double>& s) {
  const std::size_t q = s.size();
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "configuration needs at least two points");
  double total = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const double d = (domain.position(s[(i + 1) % q]) - domain.position(s[i])).norm();
    if (!(d > 1e-12 * domain.total_length())) {
      throw Error(ErrorCode::CoincidentPoints, "coincident reflection points");
    }
    total += d;
  }
  return total;
}

Eigen::VectorXd grad_length(const Domain& domain, const std::vector<double>& s) {
  const auto links = links_of(domain, s);
  const std::size_t q = s.size();
  Eigen::VectorXd g(q);
  for (std::size_t i = 0; i < q; ++i) g[i] = links[(i + q - 1) % q].d_b + links[i].d_a;
  return g;
}

Eigen::MatrixXd hessian_length(const Domain& domain, const std::vector<double>& s) {
  const std::size_t q = s.size();
  if (q < 3) throw Error(ErrorCode::UnsupportedPeriod, "Hessian requires q >= 3");
  const auto links = links_of(domain, s);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(q, q);
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t j = (i + 1) % q;
    h(i, i) += links[i].d_aa;
    h(j, j) += links[i].d_bb;
    h(i, j) += links[i].d_ab;
    h(j, i) += links[i].d_ab;
  }
  return h;
}

RealPoly length_taylor(const Domain& domain, const std::vector<double>& s, int degree) {
  const int q = static_cast<int>(s.size());
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "configuration needs at least two points");
  if (degree < 0 || degree > 6) throw Error(ErrorCode::InvalidArgument, "degree must be 0..6");
  std::vector<RealPoly> px, py;
  for (int i = 0; i < q; ++i) {
    const Jet2 j = domain.jet(s[i], degree);
    const RealPoly v = RealPoly::variable(i, q, degree);
    px.push_back(v.apply(j.x));
    py.push_back(v.apply(j.y));
  }
  RealPoly total(q, degree);
  for (int i = 0; i < q; ++i) {
    const int k = (i + 1) % q;
    const RealPoly dx = px[k] - px[i], dy = py[k] - py[i];
    const RealPoly r2 = dx * dx + dy * dy;
    if (!(r2.value() > 0.0)) throw Error(ErrorCode::CoincidentPoints, "coincident reflection points");
    total += sqrt(r2);
  }
  return total;
}

PeriodicOrbit analyze_orbit(const Domain& domain, const OrbitConfiguration& config, double tol) {
  const int q = static_cast<int>(config.s.size());
  if (q < 3) throw Error(ErrorCode::UnsupportedPeriod, "orbit analysis requires q >= 3");
  PeriodicOrbit o;
  o.p = config.p;
  o.q = q;
  o.s = lift_config(domain, config.s, config.p);
  o.degeneracy_tol = tol;
  const auto links = links_of(domain, o.s);
  for (int i = 0; i < q; ++i) {
    o.length += links[i].length;
    o.links.push_back(links[i].length);
    const BoundarySample b = domain.sample(o.s[i]);
    o.curvature.push_back(b.curvature);
    o.theta.push_back(std::atan2(b.normal.dot(links[i].direction), b.tangent.dot(links[i].direction)));
  }
  o.gradient_norm = grad_length(domain, o.s).norm();
  o.hessian = hessian_length(domain, o.s);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(o.hessian);
  o.eigenvalues = es.eigenvalues();
  o.eigenvectors = es.eigenvectors();
  const Classification c = classify_hessian(o.hessian, tol);
  o.rank = c.rank;
  o.signature = c.degenerate ? c.nonzero_signature : c.signature;
  if (o.gradient_norm <= 1e-9 * std::max(1.0, o.length)) {
    o.poincare = linearized_poincare(domain, o.s);
  }
  const double ell = domain.total_length();
  try {
    const Trajectory tr = iterate(domain, {o.s[0], o.theta[0]}, q);
    o.traced_winding = tr.winding;
    o.closure_error = std::hypot(wrap_signed(tr.points.back().s - o.s[0], ell),
                                 tr.points.back().theta - o.theta[0]);
  } catch (const Error&) {
    o.traced_winding = 0;
    o.closure_error = std::numeric_limits<double>::infinity();
  }
  return o;
}

std::vector<PeriodicOrbit> find_periodic_orbits(const Domain& domain, int p, int q,
                                                const SearchOptions& opt) {
  if (q < 3) throw Error(ErrorCode::UnsupportedPeriod, "orbit search requires q >= 3");
  if (p < 1 || p >= q || std::gcd(p, q) != 1) {
    throw Error(ErrorCode::InvalidArgument, "need 1 <= p < q with gcd(p, q) = 1");
  }
  if (opt.starts < 1 || opt.max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "starts and max_iterations must be positive");
  }
  const double ell = domain.total_length();
  std::vector<std::vector<double>> seeds;
  if (opt.seed_config) {
    if (static_cast<int>(opt.seed_config->size()) != q) {
      throw Error(ErrorCode::InvalidArgument, "seed configuration has wrong length");
    }
    seeds.push_back(lift_config(domain, *opt.seed_config, p));
  } else {
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double gap = p * ell / q;
    for (int k = 0; k < opt.starts; ++k) {
      std::vector<double> x(q);
      const double s0 = ell * k / (opt.starts * q);
      for (int i = 0; i < q; ++i) x[i] = s0 + i * gap + opt.jitter * gap * unit(rng);
      seeds.push_back(x);
    }
  }
  std::vector<int> all(q);
  std::iota(all.begin(), all.end(), 0);
  std::vector<PeriodicOrbit> found;
  for (auto x : seeds) {
    if (!feasible(x, p, ell)) continue;
    if (opt.mode == SearchMode::Maximize) x = ascend(domain, x, p, opt.max_iterations);
    const double value = length_functional(domain, x);
    const Solve sol = newton_critical(domain, x, p, all, opt.max_iterations, 1e-14 * value);
    if (sol.residual > 1e-9 * value) continue;
    const std::vector<double> canon = canonical_shift(domain, sol.x, p);
    bool duplicate = false;
    for (auto& f : found) {
      if (same_orbit(domain, f.s, canon)) {
        duplicate = true;
        const double r = grad_length(domain, canon).norm();
        if (r < f.gradient_norm) f = analyze_orbit(domain, {canon, p}, opt.degeneracy_tol);
        break;
      }
    }
    if (!duplicate) found.push_back(analyze_orbit(domain, {canon, p}, opt.degeneracy_tol));
  }
  std::sort(found.begin(), found.end(), [&](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    return wrap_positive(a.s[0], ell) < wrap_positive(b.s[0], ell);
  });
  return found;
}

PeriodicOrbit find_periodic_orbit(const Domain& domain, int p, int q, const SearchOptions& opt) {
  const auto found = find_periodic_orbits(domain, p, q, opt);
  if (found.empty()) throw Error(ErrorCode::MaxIterations, "no start converged to a critical point");
  const PeriodicOrbit* best = &found[0];
  for (const auto& o : found) {
    const bool better = opt.mode == SearchMode::Maximize ? o.length > best->length + 1e-12 * o.length
                                                         : o.gradient_norm < best->gradient_norm;
    if (better) best = &o;
  }
  if (best->traced_winding != p || best->closure_error > 1e-6) {
    throw Error(ErrorCode::WrongWinding, "traced orbit does not close with winding " + std::to_string(p));
  }
  return *best;
}

Classification classify_hessian(const Eigen::MatrixXd& h, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Classification c;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const bool zero = std::abs(ev[i]) <= tol * scale;
    if (zero) {
      c.degenerate = true;
      continue;
    }
    ++c.rank;
    c.nonzero_signature += ev[i] > 0 ? 1 : -1;
  }
  c.signature = c.nonzero_signature;
  return c;
}

Classification classify_orbit(const PeriodicOrbit& orbit, double tol) {
  return classify_hessian(orbit.hessian, tol);
}

ProdIdentity verify_prod_identity(const PeriodicOrbit& orbit) {
  ProdIdentity r;
  r.det_hessian = orbit.hessian.determinant();
  r.det_one_minus_p = (Eigen::Matrix2d::Identity() - orbit.poincare).determinant();
  r.offdiag_product = 1.0;
  for (int i = 0; i < orbit.q; ++i) {
    r.offdiag_product *= orbit.cos_normal(i) * orbit.cos_normal((i + 1) % orbit.q) / orbit.links[i];
  }
  const double sign = orbit.q % 2 == 1 ? 1.0 : -1.0;  // (-1)^{q+1}
  const double floor = 1e-12;
  const double denom = std::max(std::abs(r.det_hessian), floor);
  r.residual = std::abs(r.det_hessian - sign * r.det_one_minus_p * r.offdiag_product) / denom;
  r.residual_abs = std::abs(r.det_hessian - sign * std::abs(r.det_one_minus_p) * r.offdiag_product) / denom;
  return r;
}

Eigen::MatrixXd adjugate(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd adj(n, n);
  if (n == 1) {
    adj(0, 0) = 1.0;
    return adj;
  }
  Eigen::MatrixXd minor(n - 1, n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
        if (r == i) continue;
        for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      adj(j, i) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
    }
  }
  return adj;
}

AdjugateFactorization adjugate_factorization(const Eigen::MatrixXd& hessian, double tol) {
  const Eigen::Index q = hessian.rows();
  const Classification c = classify_hessian(hessian, tol);
  if (c.rank != q - 1) {
    throw Error(ErrorCode::RankMismatch,
                "Hessian rank " + std::to_string(c.rank) + " != q - 1 = " + std::to_string(q - 1));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian);
  Eigen::Index k = 0;
  es.eigenvalues().cwiseAbs().minCoeff(&k);
  double prod = 1.0;
  for (Eigen::Index i = 0; i < q; ++i) {
    if (i != k) prod *= es.eigenvalues()[i];
  }
  AdjugateFactorization f;
  f.sign = prod > 0 ? 1 : -1;
  Eigen::VectorXd v = es.eigenvectors().col(k);
  if (v.sum() < 0) v = -v;
  f.h = std::sqrt(std::abs(prod)) * v;
  f.adjugate = adjugate(hessian);
  const Eigen::MatrixXd model = f.sign * f.h * f.h.transpose();
  f.residual = (f.adjugate - model).norm() / f.adjugate.norm();
  return f;
}

AdjugateFactorization adjugate_factorization(const PeriodicOrbit& orbit) {
  return adjugate_factorization(orbit.hessian, orbit.degeneracy_tol);
}

LoopResult loop_function(const Domain& domain, int p, int q, double s,
                         const std::optional<std::vector<double>>& guess) {
  if (q < 3 || p < 1 || p >= q) throw Error(ErrorCode::InvalidArgument, "need q >= 3 and 1 <= p < q");
  const double ell = domain.total_length();
  std::vector<double> x(q);
  if (guess) {
    if (static_cast<int>(guess->size()) != q) throw Error(ErrorCode::InvalidArgument, "guess has wrong length");
    x = lift_config(domain, *guess, p);
    const double shift = s - x[0];
    for (double& v : x) v += shift;
  } else {
    for (int i = 0; i < q; ++i) x[i] = s + i * p * ell / q;
  }
  std::vector<int> free(q - 1);
  std::iota(free.begin(), free.end(), 1);
  const double value = length_functional(domain, x);
  const Solve sol = newton_critical(domain, x, p, free, 200, 1e-14 * value);
  if (sol.residual > 1e-11 * value) throw Error(ErrorCode::NoBranch, "loop closure did not converge");
  LoopResult r;
  r.s = sol.x;
  r.length = length_functional(domain, sol.x);
  r.derivative = grad_length(domain, sol.x)[0];
  return r;
}

double predicted_c_gamma(const PeriodicOrbit& orbit, const DeformationFamily& family) {
  const Eigen::MatrixXd adj = adjugate(orbit.hessian);
  double c = 0.0;
  for (int i = 0; i < orbit.q; ++i) {
    c += adj(i, i) * (-2.0 * orbit.cos_normal(i)) * family.curvature_rate(family.reference_to_base(orbit.s[i]));
  }
  return c;
}

DesignedFamily design_perturbation(const DomainPtr& base, const PeriodicOrbit& orbit, double target_c,
                                   const DesignOptions& opt) {
  if (!base) throw Error(ErrorCode::InvalidArgument, "missing base domain");
  DeformationFamily reference;
  reference.base = base;
  return design_perturbation(reference, orbit, target_c, opt);
}

DesignedFamily design_perturbation(const DeformationFamily& reference, const PeriodicOrbit& orbit,
                                   double target_c, const DesignOptions& opt) {
  if (!reference.base) throw Error(ErrorCode::InvalidArgument, "missing base domain");
  if (!std::isfinite(target_c)) throw Error(ErrorCode::InvalidArgument, "target_c must be finite");
  const Classification cls = classify_orbit(orbit, orbit.degeneracy_tol);
  if (!cls.degenerate || cls.rank != orbit.q - 1) {
    throw Error(ErrorCode::RankMismatch, "orbit Hessian rank " + std::to_string(cls.rank) +
                                             " != q - 1 = " + std::to_string(orbit.q - 1));
  }
  std::vector<double> w = opt.weights.empty() ? std::vector<double>(orbit.q, 1.0) : opt.weights;
  if (static_cast<int>(w.size()) != orbit.q) throw Error(ErrorCode::InvalidArgument, "one weight per reflection point");
  const Eigen::MatrixXd adj = adjugate(orbit.hessian);
  double coeff = 0.0, scale = 0.0;
  for (int i = 0; i < orbit.q; ++i) {
    const double term = adj(i, i) * (-2.0 * orbit.cos_normal(i)) * w[i];
    coeff += term;
    scale += std::abs(term);
  }
  if (!(scale > 0.0) || std::abs(coeff) <= 1e-10 * scale || target_c == 0.0) {
    throw Error(ErrorCode::DegenerateConstraint, "bump weights lie in the kernel of the c_gamma constraint");
  }
  const double lambda = target_c / coeff;
  const double ell = reference.base->total_length();
  std::vector<double> centers;
  for (double si : orbit.s) centers.push_back(reference.reference_to_base(si));
  DesignedFamily out;
  DeformationFamily& fam = out.family;
  fam = reference;
  fam.bumps.clear();
  fam.harmonic.reset();
  fam.epsilon_max = opt.epsilon_max;
  for (double wi : w) out.mu1.push_back(lambda * wi);
  if (opt.harmonic) {
    for (int i = 0; i < orbit.q; ++i) {
      const double expected = centers[0] + static_cast<double>(i) * orbit.p * ell / orbit.q;
      if (std::abs(wrap_signed(centers[i] - expected, ell)) > 1e-8 * ell || w[i] != w[0]) {
        throw Error(ErrorCode::InvalidArgument,
                    "harmonic profile needs equally spaced points and equal weights");
      }
    }
    fam.harmonic = HarmonicProfile{orbit.q, wrap_positive(centers[0], ell), out.mu1[0], opt.overtones};
  } else {
    double gap = ell;
    for (int i = 0; i < orbit.q; ++i) {
      gap = std::min(gap, std::abs(wrap_signed(centers[(i + 1) % orbit.q] - centers[i], ell)));
    }
    for (int i = 0; i < orbit.q; ++i) {
      if (out.mu1[i] == 0.0) continue;
      fam.bumps.push_back({wrap_positive(centers[i], ell), out.mu1[i], opt.width_fraction * gap});
    }
  }
  fam.validate();
  out.predicted_c = predicted_c_gamma(orbit, fam);
  return out;
}

PreloadedFamily degenerate_preload(const DomainPtr& base, const PeriodicOrbit& orbit, double width_fraction) {
  if (!base) throw Error(ErrorCode::InvalidArgument, "missing base domain");
  if (!(width_fraction > 0.0 && width_fraction < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "width fraction must lie in (0, 0.5)");
  }
  const int q = orbit.q;
  Eigen::VectorXd rate(q);
  for (int i = 0; i < q; ++i) rate[i] = -2.0 * orbit.cos_normal(i);
  const Eigen::MatrixXd m = -(rate.cwiseInverse().asDiagonal() * orbit.hessian);
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  double lambda = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> v = es.eigenvalues()[i];
    if (std::abs(v.imag()) <= 1e-12 * std::abs(v) && std::abs(v.real()) < std::abs(lambda)) lambda = v.real();
  }
  if (!std::isfinite(lambda) || lambda == 0.0) {
    throw Error(ErrorCode::DegenerateConstraint, "no real curvature shift makes the orbit degenerate");
  }
  const double ell = base->total_length();
  double gap = ell;
  for (int i = 0; i < q; ++i) gap = std::min(gap, std::abs(wrap_signed(orbit.s[(i + 1) % q] - orbit.s[i], ell)));
  PreloadedFamily out;
  out.lambda = lambda;
  out.family.base = base;
  for (int i = 0; i < q; ++i) out.family.preload.push_back({wrap_positive(orbit.s[i], ell), lambda, width_fraction * gap});
  out.family.validate();
  const DomainPtr ref = out.family.reference();
  out.orbit = analyze_orbit(*ref, {transport(*ref, orbit.s), orbit.p}, orbit.degeneracy_tol);
  return out;
}

Eigen::MatrixXd deformed_hessian(const DeformationFamily& family, const PeriodicOrbit& orbit, double eps) {
  const DomainPtr d = deform(family, eps);
  return hessian_length(*d, transport_from_reference(family, *d, orbit.s));
}

CFit fit_c_gamma(const DeformationFamily& family, const PeriodicOrbit& orbit,
                 const std::vector<double>& eps_grid) {
  if (eps_grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "eps grid needs at least two values");
  CFit fit;
  fit.eps = eps_grid;
  for (double e : eps_grid) fit.det.push_back(deformed_hessian(family, orbit, e).determinant());
  const int n = static_cast<int>(eps_grid.size());
  const int cols = n >= 4 ? 3 : 2;
  const double emax = *std::max_element(eps_grid.begin(), eps_grid.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
  const double unit = std::abs(emax) > 0 ? std::abs(emax) : 1.0;
  Eigen::MatrixXd a(n, cols);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double t = eps_grid[i] / unit;
    a(i, 0) = 1.0;
    a(i, 1) = t;
    if (cols == 3) a(i, 2) = t * t;
    y[i] = fit.det[i];
  }
  const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(y);
  fit.intercept = beta[0];
  fit.slope = beta[1] / unit;
  fit.quadratic = cols == 3 ? beta[2] / (unit * unit) : 0.0;
  const Eigen::VectorXd res = y - a * beta;
  const double rss = res.squaredNorm();
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  fit.r_squared = tss > 0 ? 1.0 - rss / tss : 1.0;
  if (n > cols) {
    const Eigen::MatrixXd cov = (a.transpose() * a).inverse() * (rss / (n - cols));
    fit.slope_stderr = std::sqrt(std::max(cov(1, 1), 0.0)) / unit;
  }
  fit.predicted = predicted_c_gamma(orbit, family);
  if (fit.slope == 0.0 || std::abs(fit.slope) <= 3.0 * fit.slope_stderr) {
    throw Error(ErrorCode::DegenerateFit, "fitted c_gamma indistinguishable from zero");
  }
  return fit;
}

}  // namespace billspec

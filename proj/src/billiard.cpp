#include "billspec/billiard.hpp"

#include <cmath>
#include <numbers>

#include "billspec/error.hpp"

namespace billspec {

namespace {

constexpr double kGlancing = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

Bounce billiard_step(const Domain& domain, const PhasePoint& p) {
  if (!std::isfinite(p.s) || !std::isfinite(p.theta)) {
    throw Error(ErrorCode::InvalidArgument, "non-finite phase point");
  }
  if (p.theta < kGlancing || p.theta > std::numbers::pi - kGlancing) {
    throw Error(ErrorCode::GlancingRay, "theta " + std::to_string(p.theta) + " is glancing");
  }
  const double ell = domain.total_length();
  const BoundarySample b0 = domain.sample(p.s);
  const Vec2 dir = std::cos(p.theta) * b0.tangent + std::sin(p.theta) * b0.normal;
  auto g = [&](const Vec2& x) { return cross(dir, x - b0.position); };

  // Bracket the forward intersection on the table nodes.
  const auto& tab = domain.tables();
  const int n = domain.resolution();
  const double h = ell / n;
  const double s0 = domain.wrap(p.s);
  const int i0 = static_cast<int>(s0 / h);
  double lo = 0.0, hi = ell;
  for (int j = 1; j <= n; ++j) {
    const double u = (i0 + j) * h - s0;
    if (u <= 0.0 || u >= ell) continue;
    if (g(tab.position[(i0 + j) % n]) >= 0.0) {
      hi = u;
      break;
    }
    lo = u;
  }

  double u = 0.5 * (lo + hi);
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    const BoundarySample b = domain.sample(p.s + u);
    const double f = g(b.position);
    if (f < 0.0) lo = u; else hi = u;
    const double df = cross(dir, b.tangent);
    double next = df != 0.0 ? u - f / df : lo;
    const bool newton = next > lo && next < hi;
    if (!newton) next = 0.5 * (lo + hi);
    const double step = std::abs(next - u);
    u = next;
    if ((newton && step < 1e-13 * ell) || hi - lo < 1e-13 * ell) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::RootFindFailure, "chord intersection did not converge");

  const BoundarySample b1 = domain.sample(p.s + u);
  Bounce out;
  out.advance = u;
  out.next.s = domain.wrap(p.s + u);
  out.next.theta = std::atan2(-dir.dot(b1.normal), dir.dot(b1.tangent));
  return out;
}

Trajectory iterate(const Domain& domain, const PhasePoint& start, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "iteration count must be at least 1");
  Trajectory tr;
  tr.points.reserve(n + 1);
  tr.lift.reserve(n + 1);
  PhasePoint p{domain.wrap(start.s), start.theta};
  tr.points.push_back(p);
  tr.lift.push_back(start.s);
  double travelled = 0.0;
  for (int k = 0; k < n; ++k) {
    const Bounce b = billiard_step(domain, p);
    travelled += b.advance;
    p = b.next;
    tr.points.push_back(p);
    tr.lift.push_back(start.s + travelled);
  }
  const double ell = domain.total_length();
  tr.winding = static_cast<int>(std::floor((travelled + 1e-9 * ell) / ell));
  return tr;
}

Chord chord(const Domain& domain, double a, double b) {
  const BoundarySample pa = domain.sample(a), pb = domain.sample(b);
  Chord c;
  const Vec2 v = pb.position - pa.position;
  c.length = v.norm();
  if (!(c.length > 1e-12 * domain.total_length())) {
    throw Error(ErrorCode::CoincidentPoints, "coincident reflection points");
  }
  c.direction = v / c.length;
  c.cos_a = pa.tangent.dot(c.direction);
  c.cos_b = pb.tangent.dot(c.direction);
  c.d_a = -c.cos_a;
  c.d_b = c.cos_b;
  c.d_aa = -pa.curvature * pa.normal.dot(c.direction) + (1.0 - c.cos_a * c.cos_a) / c.length;
  c.d_bb = pb.curvature * pb.normal.dot(c.direction) + (1.0 - c.cos_b * c.cos_b) / c.length;
  c.d_ab = (-pa.tangent.dot(pb.tangent) + c.cos_a * c.cos_b) / c.length;
  return c;
}

Eigen::Matrix2d bounce_differential(const Domain& domain, double s, double s_next) {
  // generating function h = -|x(s) - x(s')|
  const Chord c = chord(domain, s, s_next);
  const double h_ss = -c.d_aa, h_tt = -c.d_bb, h_st = -c.d_ab;
  Eigen::Matrix2d m;
  m << -h_ss / h_st, -1.0 / h_st,
      h_st - h_tt * h_ss / h_st, -h_tt / h_st;
  return m;
}

Eigen::Matrix2d linearized_poincare(const Domain& domain, const std::vector<double>& config) {
  const std::size_t q = config.size();
  if (q < 2) throw Error(ErrorCode::InvalidArgument, "configuration needs at least two points");
  double total = 0.0, grad2 = 0.0;
  std::vector<Chord> links;
  for (std::size_t i = 0; i < q; ++i) links.push_back(chord(domain, config[i], config[(i + 1) % q]));
  for (std::size_t i = 0; i < q; ++i) {
    total += links[i].length;
    const double gi = links[(i + q - 1) % q].d_b + links[i].d_a;
    grad2 += gi * gi;
  }
  if (std::sqrt(grad2) > 1e-9 * std::max(1.0, total)) {
    throw Error(ErrorCode::NotPeriodic, "configuration is not a closed billiard orbit");
  }
  Eigen::Matrix2d p = Eigen::Matrix2d::Identity();
  for (std::size_t i = 0; i < q; ++i) {
    p = bounce_differential(domain, config[i], config[(i + 1) % q]) * p;
  }
  return p;
}

}  // namespace billspec

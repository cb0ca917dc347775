#include "billspec/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "billspec/error.hpp"

namespace billspec {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxJetOrder = 8;

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half).
constexpr std::array<double, 8> kGlNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
constexpr std::array<double, 8> kGlWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

template <class F>
double gauss_legendre(const F& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    acc += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
  }
  return acc * half;
}

double wrap_signed(double d, double period) {
  d = std::fmod(d, period);
  if (d < -0.5 * period) d += period;
  if (d >= 0.5 * period) d -= period;
  return d;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Boundary of a support-function body, parametrized by t = phi + pi/2 where
// phi is the outward normal angle; the tangent at t = 0 is (1, 0).
class FourierCurve final : public Curve {
 public:
  explicit FourierCurve(DomainSpec spec) : spec_(std::move(spec)) {}

  double period() const override { return 2.0 * kPi; }

  Jet2 jet(double t, int order) const override {
    const double phi = t - 0.5 * kPi;
    // Taylor coefficients of h(phi + d) up to order + 1.
    Series h(order + 1);
    double fact = 1.0;
    for (int k = 0; k <= order + 1; ++k) {
      if (k > 0) fact *= k;
      const double shift = 0.5 * kPi * k;
      double acc = k == 0 ? spec_.support_cos[0] : 0.0;
      for (std::size_t n = 1; n < spec_.support_cos.size() || n < spec_.support_sin.size(); ++n) {
        const double nk = std::pow(static_cast<double>(n), k);
        const double a = n < spec_.support_cos.size() ? spec_.support_cos[n] : 0.0;
        const double b = n < spec_.support_sin.size() ? spec_.support_sin[n] : 0.0;
        acc += nk * (a * std::cos(n * phi + shift) + b * std::sin(n * phi + shift));
      }
      h[k] = acc / fact;
    }
    const Series dh = h.derivative();
    const Series hh = h.truncated(order);
    const Series angle = Series::variable(phi, order);
    const Series c = cos(angle), s = sin(angle);
    return {hh * c - dh * s, hh * s + dh * c};
  }

  double speed(double t) const override { return spec_.radius_of_curvature(t - 0.5 * kPi); }

  std::optional<double> arclength(double t) const override {
    const double phi0 = -0.5 * kPi, phi = t - 0.5 * kPi;
    double s = spec_.support_cos[0] * t;
    for (std::size_t n = 1; n < spec_.support_cos.size() || n < spec_.support_sin.size(); ++n) {
      const double a = n < spec_.support_cos.size() ? spec_.support_cos[n] : 0.0;
      const double b = n < spec_.support_sin.size() ? spec_.support_sin[n] : 0.0;
      const double w = (1.0 - double(n * n)) / double(n);
      s += w * (a * (std::sin(n * phi) - std::sin(n * phi0)) -
                b * (std::cos(n * phi) - std::cos(n * phi0)));
    }
    return s;
  }

 private:
  DomainSpec spec_;
};

// Normal graph x + eps * mu(x) nu_x over a base domain, parametrized by base
// arclength.
class DeformedCurve final : public Curve {
 public:
  DeformedCurve(DeformationFamily family, double eps)
      : family_(std::move(family)), eps_(eps) {}

  double period() const override { return family_.base->total_length(); }

  Jet2 jet(double t, int order) const override {
    const Jet2 xb = family_.base->jet(t, order + 1);
    const Series tx = xb.x.derivative(), ty = xb.y.derivative();
    Series mu = family_.profile_jet(t, order) * eps_;
    if (!family_.preload.empty()) mu += family_.preload_jet(t, order);
    // outward normal is the tangent rotated by -90 degrees
    return {xb.x.truncated(order) + mu * ty, xb.y.truncated(order) - mu * tx};
  }

 private:
  DeformationFamily family_;
  double eps_;
};

}  // namespace

DomainSpec DomainSpec::circle(double radius) {
  DomainSpec spec;
  spec.support_cos = {radius};
  spec.support_sin = {0.0};
  return spec;
}

int DomainSpec::max_mode() const {
  int m = 0;
  for (std::size_t n = 0; n < support_cos.size(); ++n) {
    if (support_cos[n] != 0.0) m = std::max<int>(m, n);
  }
  for (std::size_t n = 0; n < support_sin.size(); ++n) {
    if (support_sin[n] != 0.0) m = std::max<int>(m, n);
  }
  return m;
}

double DomainSpec::support(double phi, int derivative) const {
  double acc = derivative == 0 && !support_cos.empty() ? support_cos[0] : 0.0;
  const double shift = 0.5 * kPi * derivative;
  for (std::size_t n = 1; n < support_cos.size() || n < support_sin.size(); ++n) {
    const double a = n < support_cos.size() ? support_cos[n] : 0.0;
    const double b = n < support_sin.size() ? support_sin[n] : 0.0;
    acc += std::pow(double(n), derivative) *
           (a * std::cos(n * phi + shift) + b * std::sin(n * phi + shift));
  }
  return acc;
}

double DomainSpec::radius_of_curvature(double phi) const {
  return support(phi, 0) + support(phi, 2);
}

double Curve::speed(double t) const {
  const Jet2 j = jet(t, 1);
  return std::hypot(j.x[1], j.y[1]);
}

Domain::Domain(std::shared_ptr<const Curve> curve, int resolution)
    : curve_(std::move(curve)), resolution_(resolution) {
  if (resolution_ < 16) throw Error(ErrorCode::InvalidSpec, "resolution must be at least 16");
  const double period = curve_->period();
  const int panels = resolution_;
  panel_t_.resize(panels + 1);
  panel_s_.resize(panels + 1);
  for (int p = 0; p <= panels; ++p) panel_t_[p] = period * p / panels;
  panel_s_[0] = 0.0;
  for (int p = 0; p < panels; ++p) {
    if (auto closed = curve_->arclength(panel_t_[p + 1])) {
      panel_s_[p + 1] = *closed;
    } else {
      panel_s_[p + 1] = panel_s_[p] + gauss_legendre([this](double t) { return curve_->speed(t); },
                                                     panel_t_[p], panel_t_[p + 1]);
    }
  }
  length_ = panel_s_[panels];

  const Jet2 j0 = curve_->jet(0.0, 1);
  const double alpha = std::atan2(j0.y[1], j0.x[1]);
  rotation_ << std::cos(alpha), std::sin(alpha), -std::sin(alpha), std::cos(alpha);
  offset_ = -(rotation_ * Vec2(j0.x[0], j0.y[0]));

  tables_.s.resize(resolution_);
  tables_.parameter.resize(resolution_);
  tables_.position.resize(resolution_);
  tables_.tangent_angle.resize(resolution_);
  tables_.curvature.resize(resolution_);
  double previous = 0.0;
  for (int i = 0; i < resolution_; ++i) {
    const double s = length_ * i / resolution_;
    tables_.s[i] = s;
    tables_.parameter[i] = arclength_to_parameter(s);
    const BoundarySample b = sample(s);
    tables_.position[i] = b.position;
    tables_.curvature[i] = b.curvature;
    double angle = std::atan2(b.tangent.y(), b.tangent.x());
    angle = previous + wrap_signed(angle - previous, 2.0 * kPi);
    tables_.tangent_angle[i] = angle;
    previous = angle;
  }
}

double Domain::wrap(double s) const {
  double w = std::fmod(s, length_);
  if (w < 0.0) w += length_;
  if (w >= length_) w -= length_;
  return w;
}

double Domain::raw_arclength(double t) const {
  if (auto closed = curve_->arclength(t)) return *closed;
  const double period = curve_->period();
  const int panels = static_cast<int>(panel_t_.size()) - 1;
  int p = static_cast<int>(std::floor(t / period * panels));
  p = std::clamp(p, 0, panels - 1);
  return panel_s_[p] +
         gauss_legendre([this](double u) { return curve_->speed(u); }, panel_t_[p], t);
}

double Domain::parameter_to_arclength(double t) const {
  const double period = curve_->period();
  double w = std::fmod(t, period);
  if (w < 0.0) w += period;
  return raw_arclength(w);
}

double Domain::arclength_to_parameter(double s) const {
  s = wrap(s);
  const int panels = static_cast<int>(panel_t_.size()) - 1;
  auto it = std::upper_bound(panel_s_.begin(), panel_s_.end(), s);
  int p = static_cast<int>(it - panel_s_.begin()) - 1;
  p = std::clamp(p, 0, panels - 1);
  double lo = panel_t_[p], hi = panel_t_[p + 1];
  const double frac = (s - panel_s_[p]) / (panel_s_[p + 1] - panel_s_[p]);
  double t = lo + frac * (hi - lo);
  for (int iter = 0; iter < 40; ++iter) {
    const double f = raw_arclength(t) - s;
    if (f > 0.0) hi = std::min(hi, t); else lo = std::max(lo, t);
    if (f == 0.0) break;
    double next = t - f / curve_->speed(t);
    const bool newton = next >= lo && next <= hi;
    if (!newton) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    // quadratic convergence: the update just applied leaves an error ~ step^2
    if (newton && step < 1e-9 * curve_->period()) break;
  }
  return t;
}

Jet2 Domain::raw_jet(double s, int order) const {
  order = std::clamp(order, 0, kMaxJetOrder);
  const double t = arclength_to_parameter(s);
  const Jet2 c = curve_->jet(t, std::max(order, 1));
  if (order == 0) return {c.x.truncated(0), c.y.truncated(0)};
  const Series dx = c.x.derivative(), dy = c.y.derivative();
  const Series speed = sqrt(dx * dx + dy * dy);
  const Series arc = speed.integral().truncated(order);
  const Series inverse = arc.revert();
  return {c.x.compose(inverse), c.y.compose(inverse)};
}

Jet2 Domain::jet(double s, int order) const {
  Jet2 r = raw_jet(s, order);
  Jet2 out{Series(r.order()), Series(r.order())};
  for (int k = 0; k <= r.order(); ++k) {
    const Vec2 v = rotation_ * Vec2(r.x[k], r.y[k]);
    out.x[k] = v.x();
    out.y[k] = v.y();
  }
  out.x[0] += offset_.x();
  out.y[0] += offset_.y();
  return out;
}

Vec2 Domain::position(double s) const {
  const Jet2 j = jet(s, 0);
  return {j.x[0], j.y[0]};
}

BoundarySample Domain::sample(double s) const {
  const Jet2 j = jet(s, 2);
  BoundarySample b;
  b.position = {j.x[0], j.y[0]};
  b.tangent = Vec2(j.x[1], j.y[1]).normalized();
  b.normal = {-b.tangent.y(), b.tangent.x()};
  b.curvature = cross(b.tangent, Vec2(2.0 * j.x[2], 2.0 * j.y[2]));
  return b;
}

double Domain::tangent_angle(double s) const {
  s = wrap(s);
  const BoundarySample b = sample(s);
  const double raw = std::atan2(b.tangent.y(), b.tangent.x());
  if (tables_.s.empty()) return raw;
  const int i = std::min<int>(static_cast<int>(s / length_ * resolution_), resolution_ - 1);
  const double ref = tables_.tangent_angle[i];
  return ref + wrap_signed(raw - ref, 2.0 * kPi);
}

double Domain::curvature_derivative(double s, int m) const {
  if (m < 0 || m > 4) throw Error(ErrorCode::InvalidArgument, "curvature derivative order must be 0..4");
  const Jet2 j = jet(s, m + 2);
  auto d = [&j](int k) { return Vec2(j.x.derivative_value(k), j.y.derivative_value(k)); };
  double acc = 0.0;
  double binom = 1.0;
  for (int i = 0; i <= m; ++i) {
    acc += binom * cross(d(1 + i), d(2 + m - i));
    binom = binom * (m - i) / (i + 1);
  }
  return acc;
}

DomainPtr build_domain(const DomainSpec& input) {
  DomainSpec spec = input;
  if (spec.support_cos.empty()) throw Error(ErrorCode::InvalidSpec, "support_cos must be non-empty");
  for (double v : spec.support_cos) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "non-finite support coefficient");
  }
  for (double v : spec.support_sin) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidSpec, "non-finite support coefficient");
  }
  if (spec.resolution < 0) throw Error(ErrorCode::InvalidSpec, "resolution must be positive");
  if (spec.resolution == 0) spec.resolution = std::max(2048, 64 * spec.max_mode());
  const int grid = 8 * spec.resolution;
  for (int i = 0; i < grid; ++i) {
    const double phi = 2.0 * kPi * i / grid;
    const double rho = spec.radius_of_curvature(phi);
    if (!(rho > 1e-12)) {
      throw Error(ErrorCode::Nonconvex,
                  "h + h'' = " + std::to_string(rho) + " at phi = " + std::to_string(phi));
    }
  }
  return std::make_shared<const Domain>(std::make_shared<FourierCurve>(spec), spec.resolution);
}

namespace {

Series bump_jet(const std::vector<Bump>& bumps, double length, double s, int order) {
  Series total(order);
  for (const Bump& b : bumps) {
    const double d = wrap_signed(s - b.center_s, length);
    const double u0 = d / b.half_width;
    if (std::abs(u0) >= 1.0 || 1.0 - u0 * u0 < 1e-3) continue;
    Series u = Series::variable(u0, order);
    if (order >= 1) u[1] = 1.0 / b.half_width;
    const Series psi = exp(-reciprocal(Series::constant(1.0, order) - u * u) + 1.0);
    const Series x = Series::variable(d, order);
    total += (x * x) * psi * (-0.5 * b.mu1);
  }
  return total;
}

void validate_bumps(const std::vector<Bump>& bumps, double length) {
  for (const Bump& b : bumps) {
    if (!std::isfinite(b.center_s) || !std::isfinite(b.mu1) || !std::isfinite(b.half_width)) {
      throw Error(ErrorCode::InvalidSpec, "non-finite bump parameter");
    }
    if (!(b.half_width > 0.0) || b.half_width >= 0.5 * length) {
      throw Error(ErrorCode::InvalidSpec, "bump half_width must lie in (0, length/2)");
    }
  }
  for (std::size_t i = 0; i < bumps.size(); ++i) {
    for (std::size_t j = i + 1; j < bumps.size(); ++j) {
      const double gap = std::abs(wrap_signed(bumps[i].center_s - bumps[j].center_s, length));
      if (gap < bumps[i].half_width + bumps[j].half_width) {
        throw Error(ErrorCode::InvalidSpec, "bump supports overlap");
      }
    }
  }
}

}  // namespace

Series DeformationFamily::preload_jet(double s, int order) const {
  return bump_jet(preload, base->total_length(), s, order);
}

Series DeformationFamily::profile_jet(double s, int order) const {
  const double length = base->total_length();
  Series total = bump_jet(bumps, length, s, order);
  if (harmonic && harmonic->order > 0) {
    double weight_sum = 0.0;
    for (double w : harmonic->overtones) weight_sum += w;
    for (std::size_t j = 0; j < harmonic->overtones.size(); ++j) {
      const double m = 2.0 * kPi * harmonic->order * static_cast<double>(j + 1) / length;
      Series arg = Series::variable(m * (s - harmonic->phase_s), order);
      if (order >= 1) arg[1] = m;
      const double amplitude = -harmonic->mu1 * harmonic->overtones[j] / weight_sum / (m * m);
      total += (cos(arg) * -1.0 + 1.0) * amplitude;
    }
  }
  return total;
}

DeformationFamily DeformationFamily::flipped() const {
  DeformationFamily out = *this;
  for (Bump& b : out.bumps) b.mu1 = -b.mu1;
  if (out.harmonic) out.harmonic->mu1 = -out.harmonic->mu1;
  return out;
}

void DeformationFamily::validate() const {
  if (!base) throw Error(ErrorCode::InvalidArgument, "deformation family without base domain");
  const double length = base->total_length();
  validate_bumps(bumps, length);
  validate_bumps(preload, length);
  if (harmonic) {
    double weight_sum = 0.0;
    for (double w : harmonic->overtones) {
      if (!std::isfinite(w)) throw Error(ErrorCode::InvalidSpec, "non-finite overtone weight");
      weight_sum += w;
    }
    if (harmonic->order < 1 || !std::isfinite(harmonic->mu1) || weight_sum == 0.0) {
      throw Error(ErrorCode::InvalidSpec, "invalid harmonic profile");
    }
  }
  if (!(epsilon_max > 0.0)) throw Error(ErrorCode::InvalidSpec, "epsilon_max must be positive");
}

DomainPtr DeformationFamily::reference() const {
  if (preload.empty()) return base;
  if (!*reference_cache_) *reference_cache_ = deform(*this, 0.0);
  return *reference_cache_;
}

double DeformationFamily::reference_to_base(double s) const {
  if (preload.empty()) return s;
  const DomainPtr ref = reference();
  const double ell = ref->total_length();
  const double turns = std::floor(s / ell);
  return ref->arclength_to_parameter(s - turns * ell) + turns * base->total_length();
}

DomainPtr deform(const DeformationFamily& family, double eps) {
  family.validate();
  if (!(eps >= 0.0) || eps > family.epsilon_max) {
    throw Error(ErrorCode::InvalidArgument, "eps outside [0, epsilon_max]");
  }
  auto curve = std::make_shared<DeformedCurve>(family, eps);
  const int grid = 8 * family.base->resolution();
  const double period = curve->period();
  for (int i = 0; i < grid; ++i) {
    const Jet2 j = curve->jet(period * i / grid, 2);
    const Vec2 d1(j.x[1], j.y[1]), d2(2.0 * j.x[2], 2.0 * j.y[2]);
    const double kappa = cross(d1, d2) / std::pow(d1.norm(), 3);
    if (!(kappa > 1e-12)) {
      throw Error(ErrorCode::ConvexityLost,
                  "deformed curvature " + std::to_string(kappa) + " at base arclength " +
                      std::to_string(period * i / grid));
    }
  }
  return std::make_shared<const Domain>(curve, family.base->resolution());
}

std::vector<double> transport(const Domain& deformed, const std::vector<double>& base_s) {
  std::vector<double> out;
  out.reserve(base_s.size());
  for (double s : base_s) {
    const double period = deformed.curve().period();
    const double turns = std::floor(s / period);
    out.push_back(deformed.parameter_to_arclength(s - turns * period) + turns * deformed.total_length());
  }
  return out;
}

std::vector<double> transport_from_reference(const DeformationFamily& family, const Domain& deformed,
                                             const std::vector<double>& reference_s) {
  std::vector<double> base_s;
  for (double s : reference_s) base_s.push_back(family.reference_to_base(s));
  return transport(deformed, base_s);
}

}  // namespace billspec

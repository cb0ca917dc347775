#include "billspec/validation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "billspec/oracles.hpp"

namespace billspec {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

class Row {
 public:
  Row(CriterionResult& r, const ValidationOptions& o) : r_(r), f_(o.tolerance_factor) {}

  void below(const std::string& name, double m, double bound) { add(name, m, -kInf, bound * f_, false); }
  void above(const std::string& name, double m, double bound) { add(name, m, bound / f_, kInf, false); }
  void band(const std::string& name, double m, double target, double half) {
    add(name, m, target - half * f_, target + half * f_, false);
  }
  void at_least(const std::string& name, double m, double n) { add(name, m, n, kInf, false); }
  void holds(const std::string& name, bool ok) { add(name, ok ? 1.0 : 0.0, 1.0, 1.0, false); }
  void runtime(double seconds, double budget) { add("runtime_seconds", seconds, -kInf, budget, true); }

 private:
  void add(const std::string& name, double m, double lo, double hi, bool timing) {
    r_.checks.push_back({name, m, lo, hi, std::isfinite(m) && m >= lo && m <= hi, timing});
  }
  CriterionResult& r_;
  double f_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
  return out;
}

std::vector<double> equal_points(const Domain& d, int p, int q, double s0) {
  std::vector<double> s(q);
  for (int i = 0; i < q; ++i) s[i] = s0 + d.total_length() * p * i / q;
  return s;
}

DomainPtr circle() {
  static DomainPtr d = build_domain(DomainSpec::circle());
  return d;
}

DomainSpec random_spec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0};
  spec.support_sin = {0.0, 0.0};
  for (int n = 2; n <= 5; ++n) {
    spec.support_cos.push_back(0.2 * u(rng) / (n * n));
    spec.support_sin.push_back(0.2 * u(rng) / (n * n));
  }
  return spec;
}

// 1. det H = (-1)^{q+1} |det(Id - P)| prod b_i
void prod_identity(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  int orbits = 0, domains = 0, failures = 0;
  double worst = 0.0, worst_symplectic = 0.0;
  std::set<int> periods;
  io::Json per = io::Json::array();
  for (int dom = 0; dom < 5; ++dom) {
    const DomainSpec spec = random_spec(rng);
    const DomainPtr d = build_domain(spec);
    int here = 0;
    for (int q = 3; q <= 7; ++q) {
      SearchOptions so;
      so.seed = opt.seed + 101 * dom + q;
      std::vector<PeriodicOrbit> found;
      try {
        found = find_periodic_orbits(*d, 1, q, so);
      } catch (const Error&) {
        ++failures;
        continue;
      }
      for (const auto& o : found) {
        if (classify_orbit(o).degenerate) continue;
        const ProdIdentity pi = verify_prod_identity(o);
        worst = std::max(worst, pi.residual);
        worst_symplectic = std::max(worst_symplectic, std::abs(o.poincare.determinant() - 1.0));
        per.push_back({{"domain", dom}, {"q", q}, {"length", o.length}, {"residual", pi.residual}});
        periods.insert(q);
        ++here;
      }
    }
    orbits += here;
    domains += here > 0;
  }
  r.details["orbits"] = per;
  r.details["search_failures"] = failures;
  row.at_least("nondegenerate_orbits", orbits, 20);
  row.at_least("domains_with_orbits", domains, 5);
  row.at_least("periods_covered", static_cast<double>(periods.size()), 5);
  row.below("max_relative_residual", worst, 1e-6);
  row.below("max_det_poincare_error", worst_symplectic, 1e-8);
  row.runtime(seconds_since(t0), 30.0);
}

// 2. circle Hessian spectrum delta + 2 alpha cos(2 pi m / q)
void circle_spectrum(CriterionResult& r, const ValidationOptions&, Row& row) {
  double worst_eig = 0.0, worst_kernel = 0.0;
  bool ranks = true;
  io::Json cases = io::Json::array();
  for (int q = 3; q <= 8; ++q) {
    for (int p = 1; 2 * p <= q; ++p) {
      if (std::gcd(p, q) != 1) continue;
      const PeriodicOrbit o = analyze_orbit(*circle(), {equal_points(*circle(), p, q, 0.3), p});
      const double sn = std::sin(kPi * p / q), delta = -sn, alpha = sn / 2.0;
      std::vector<double> expect(q);
      for (int m = 0; m < q; ++m) expect[m] = delta + 2.0 * alpha * std::cos(2.0 * kPi * m / q);
      std::sort(expect.begin(), expect.end());
      double err = 0.0;
      for (int m = 0; m < q; ++m) err = std::max(err, std::abs(o.eigenvalues[m] - expect[m]));
      int kernel = 0;
      for (int m = 1; m < q; ++m) {
        if (std::abs(o.eigenvalues[m]) < std::abs(o.eigenvalues[kernel])) kernel = m;
      }
      const Eigen::VectorXd v = o.eigenvectors.col(kernel).normalized();
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(q) / std::sqrt(static_cast<double>(q));
      const double kerr = std::min((v - ones).norm(), (v + ones).norm());
      const Classification c = classify_orbit(o);
      ranks = ranks && c.degenerate && c.rank == q - 1;
      worst_eig = std::max(worst_eig, err);
      worst_kernel = std::max(worst_kernel, kerr);
      cases.push_back({{"p", p}, {"q", q}, {"rank", c.rank}, {"eigenvalue_error", err}, {"kernel_error", kerr}});
    }
  }
  r.details["cases"] = cases;
  row.below("max_eigenvalue_error", worst_eig, 1e-10);
  row.holds("rank_q_minus_1", ranks);
  row.below("max_kernel_error", worst_kernel, 1e-8);
}

// 3. w(j) by diagram enumeration and by the pairing formula
void feynman_weights(CriterionResult& r, const ValidationOptions&, Row& row) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<Rational> expect{Rational(1), Rational(5, 24), Rational(385, 1152)};
  bool routes = true, values = true, oracle_ok = true;
  io::Json table = io::Json::array();
  for (int j = 0; j <= 3; ++j) {
    const Rational a = w_of_j(j), b = w_pairing_formula(j);
    routes = routes && a == b;
    if (j < 3) values = values && a == expect[j];
    table.push_back({{"j", j}, {"enumerated", a.str()}, {"formula", b.str()}});
  }
  // exhaustive half-edge pairings, orbit-stabilizer against |Aut|
  for (int j = 1; j <= 2; ++j) {
    std::int64_t group = 1;
    for (int i = 2; i <= 2 * j; ++i) group *= i;
    for (int i = 0; i < 2 * j; ++i) group *= 6;
    std::multiset<std::int64_t> from_pairings, from_enum;
    for (const auto& [adj, count] : oracle::pairing_classes(j)) from_pairings.insert(group / count);
    for (const auto& d : enumerate_diagrams(j)) from_enum.insert(d.aut_order);
    oracle_ok = oracle_ok && from_pairings == from_enum;
  }
  r.details["w"] = table;
  row.holds("enumeration_equals_formula_j0_to_3", routes);
  row.holds("values_1_5/24_385/1152", values);
  row.holds("aut_orders_match_pairing_classes_j1_2", oracle_ok);
  row.runtime(seconds_since(t0), 60.0);
}

PhaseModel random_model(std::mt19937_64& rng, int n, int j) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int dp = 2 * j + 2, du = std::max(2 * j, 1);
  RealPoly phi(n, dp);
  for (int i = 0; i < phi.basis().size(); ++i) {
    if (phi.basis().total_degree(i) >= 3) phi[i] = 0.3 * g(rng);
  }
  Eigen::MatrixXd m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) m(a, b) = u(rng);
  }
  Eigen::MatrixXd h = m + m.transpose();
  h += (n + 1.0) * Eigen::MatrixXd::Identity(n, n) * (g(rng) > 0 ? 1.0 : -1.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      Exponent e(n, 0);
      ++e[a];
      ++e[b];
      phi[phi.basis().index_of(e)] = a == b ? 0.5 * h(a, a) : h(a, b);
    }
  }
  phi[0] = g(rng);
  ComplexPoly amp(n, du);
  for (int i = 0; i < amp.basis().size(); ++i) amp[i] = Complex(g(rng), g(rng));
  return PhaseModel(phi, amp);
}

// 4. diagram sums vs the operator formula; decay of the truncation error
void stationary_phase(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 4, j = 1 + t % 2;
    const PhaseModel m = random_model(rng, n, j);
    const Expansion a = stationary_phase_expand(m, j), b = diagram_expand(m, j);
    for (int i = 0; i <= j; ++i) {
      worst = std::max(worst, std::abs(a.coefficients[i] - b.coefficients[i]) / std::abs(a.coefficients[i]));
    }
  }
  row.below("max_relative_coefficient_difference", worst, 1e-10);

  const double a = 0.1;
  RealPoly phi(1, 6);
  phi[2] = 0.5;
  phi[3] = a;
  const Expansion e = stationary_phase_expand(PhaseModel(phi, ComplexPoly::constant(1.0, 1, 6)), 2);
  const std::vector<double> ks{1e2, 1e3, 1e4, 1e5};
  io::Json slopes = io::Json::array();
  for (int terms : {1, 2}) {
    std::vector<double> lx, ly;
    for (double k : ks) {
      const Complex q = oracle::thimble_integral({0.0, 0.0, 0.5, a}, {1.0}, k);
      lx.push_back(std::log(k));
      ly.push_back(std::log(std::abs((q - e.evaluate(k, terms)) / e.prefactor(k))));
    }
    const double s = fit_slope(lx, ly);
    slopes.push_back({{"J", terms - 1}, {"slope", s}});
    row.band("cubic_decay_slope_J" + std::to_string(terms - 1), s, -terms, 0.3);
  }
  r.details["decay"] = slopes;
  row.runtime(seconds_since(t0), 120.0);
}

struct Generic {
  DesignedFamily designed;
  PeriodicOrbit orbit;
};

// Maximizing triangle of an asymmetric domain made degenerate by a preload.
Generic generic_family() {
  DomainSpec spec;
  spec.support_cos = {1.0, 0.0, 0.01, 0.0, 0.0025, 0.0025};
  spec.support_sin = {0.0, 0.0, 0.0, 0.0075};
  const DomainPtr base = build_domain(spec);
  SearchOptions so;
  so.mode = SearchMode::Maximize;
  const PeriodicOrbit o = find_periodic_orbit(*base, 1, 3, so);
  PreloadedFamily pre = degenerate_preload(base, o);
  Generic out;
  out.orbit = pre.orbit;
  out.designed = design_perturbation(pre.family, pre.orbit, -0.005);
  return out;
}

// 5. det H_eps ~ c eps
void perturbation_scaling(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  const std::vector<double> grid = log_grid(1e-4, 1e-2, opt.scale == Scale::Quick ? 5 : 9);
  const PeriodicOrbit tri = analyze_orbit(*circle(), {equal_points(*circle(), 1, 3, 0.5), 1});
  const Generic g = generic_family();
  struct Case {
    std::string name;
    DeformationFamily family;
    PeriodicOrbit orbit;
  };
  const std::vector<Case> cases{{"circle_triangle", design_perturbation(circle(), tri, 1.0).family, tri},
                                {"asymmetric_triangle", g.designed.family, g.orbit}};
  for (const auto& c : cases) {
    const CFit fit = fit_c_gamma(c.family, c.orbit, grid);
    const AdjugateFactorization adj = adjugate_factorization(c.orbit);
    r.details[c.name] = io::to_json(fit);
    r.details[c.name]["adjugate_residual"] = adj.residual;
    row.below(c.name + "_slope_vs_jacobi_relative", std::abs(fit.slope - fit.predicted) / std::abs(fit.predicted), 1e-2);
    row.above(c.name + "_r_squared", fit.r_squared, 0.999);
    row.below(c.name + "_adjugate_residual_eps0", adj.residual, 1e-6);
  }
}

// 6. q-torus quadrature against 2q D B_0
void leading_invariant(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  const auto t0 = std::chrono::steady_clock::now();
  const PeriodicOrbit o = analyze_orbit(*circle(), {equal_points(*circle(), 1, 3, 0.3), 1});
  DesignOptions dopt;
  dopt.harmonic = true;
  dopt.overtones = {0.75, 0.5, 0.25};
  const DesignedFamily fam = design_perturbation(circle(), o, -500.0, dopt);
  const std::vector<double> ks = opt.scale == Scale::Quick ? std::vector<double>{100.0, 200.0}
                                                          : std::vector<double>{100.0, 200.0, 400.0, 800.0};
  OracleOptions oo;
  oo.threads = opt.threads;
  const auto rows = trace_sweep(fam.family, o, 1e-2, ks, 60.0, 20.0, oo);
  std::vector<double> lx, ly;
  double rel200 = kInf, min_ppo = kInf;
  io::Json sweep = io::Json::array();
  for (const auto& s : rows) {
    lx.push_back(std::log(s.k));
    ly.push_back(std::log(s.relative_error));
    if (s.k == 200.0) rel200 = s.relative_error;
    min_ppo = std::min(min_ppo, s.oracle.min_points_per_oscillation);
    sweep.push_back({{"k", s.k},
                     {"trace", io::to_json(s.trace)},
                     {"leading", io::to_json(s.leading)},
                     {"relative_error", s.relative_error},
                     {"richardson_error_estimate", s.oracle.error_estimate / std::abs(s.leading)},
                     {"min_points_per_oscillation", s.oracle.min_points_per_oscillation},
                     {"evaluated", s.oracle.evaluated}});
  }
  r.details["mu1"] = fam.mu1[0];
  r.details["sweep"] = sweep;
  row.below("relative_error_k200", rel200, 0.05);
  row.band("error_slope", fit_slope(lx, ly), -1.0, 0.3);
  row.at_least("min_points_per_oscillation", min_ppo, 16.0);
  row.runtime(seconds_since(t0), 600.0);
}

// 7. |B_1| ~ eps^{-3}; vanishing cubic contraction on the circle
void blowup_exponent(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  const Generic g = generic_family();
  const double c = g.designed.predicted_c;
  std::vector<double> le, lb, lbm, lmax;
  const auto maximal = enumerate_diagrams(1);
  io::Json sweep = io::Json::array();
  bool generic = true;
  for (double eps : log_grid(1e-3, 1e-2, opt.scale == Scale::Quick ? 3 : 6)) {
    const InvariantReport rep = balian_bloch_leading(g.designed.family, g.orbit, eps, 1, c);
    const DomainPtr d = deform(g.designed.family, eps);
    const PeriodicOrbit oe =
        analyze_orbit(*d, {transport_from_reference(g.designed.family, *d, g.orbit.s), 1});
    const PhaseModel pm = billiard_phase_model(*d, oe.s, 4);
    Complex mx = 0.0;
    for (const auto& dg : maximal) mx += diagram_value(dg, pm) / static_cast<double>(aut_order(dg));
    generic = generic && rep.generic;
    le.push_back(std::log(eps));
    lb.push_back(std::log(std::abs(rep.b[1])));
    lbm.push_back(std::log(std::abs(rep.b_measured[1])));
    lmax.push_back(std::log(std::abs(mx)));
    sweep.push_back({{"eps", eps},
                     {"b1", io::to_json(rep.b[1])},
                     {"b1_measured", io::to_json(rep.b_measured[1])},
                     {"maximal_diagrams", io::to_json(mx)},
                     {"cubic_contraction", rep.cubic_contraction}});
  }
  r.details["c_gamma"] = c;
  r.details["sweep"] = sweep;
  row.holds("generic_family_has_nonzero_contraction", generic);
  row.band("exponent_leading", fit_slope(le, lb), -3.0, 0.05);
  row.band("exponent_measured", fit_slope(le, lbm), -3.0, 0.05);
  row.band("exponent_maximal_diagrams", fit_slope(le, lmax), -3.0, 0.05);

  const PeriodicOrbit tri = analyze_orbit(*circle(), {equal_points(*circle(), 1, 3, 0.3), 1});
  DesignOptions dopt;
  dopt.harmonic = true;
  const DesignedFamily cf = design_perturbation(circle(), tri, -1.0, dopt);
  const InvariantReport null_case = balian_bloch_leading(cf.family, tri, 1e-3, 1, cf.predicted_c);
  r.details["circle_cubic_contraction"] = null_case.cubic_contraction;
  row.below("circle_cubic_contraction", std::abs(null_case.cubic_contraction), 1e-8);
}

// 8. byte-identical reports
void determinism(CriterionResult& r, const ValidationOptions& opt, Row& row) {
  ValidationOptions q = opt;
  q.scale = Scale::Quick;
  q.criteria = {1, 2, 3, 4, 5, 6, 7};
  q.timings = false;
  const std::string a = io::dump(to_json(run_validation(q), false));
  const std::string b = io::dump(to_json(run_validation(q), false));
  std::size_t first = 0;
  while (first < a.size() && first < b.size() && a[first] == b[first]) ++first;
  r.details["report_bytes"] = a.size();
  r.details["first_difference"] = a == b ? -1 : static_cast<long long>(first);
  row.holds("quick_suite_byte_identical", a == b);
}

const char* title(int id) {
  switch (id) {
    case 1: return "Hessian determinant identity";
    case 2: return "circle spectrum";
    case 3: return "Feynman weights";
    case 4: return "stationary phase engine";
    case 5: return "perturbation scaling";
    case 6: return "leading invariant vs oracle";
    case 7: return "eps blow-up exponent";
    case 8: return "determinism";
    default: return "";
  }
}

}  // namespace

std::vector<SweepRow> trace_sweep(const DeformationFamily& family, const PeriodicOrbit& reference_orbit, double eps,
                                  const std::vector<double>& ks, double window, double offset,
                                  const OracleOptions& options) {
  if (!(window > 0.0) || !(offset >= 0.0) || offset >= 2.0 * window) {
    throw Error(ErrorCode::InvalidArgument, "window must be positive with 0 <= offset < 2 window");
  }
  const DomainPtr d = deform(family, eps);
  const PeriodicOrbit oe =
      analyze_orbit(*d, {transport_from_reference(family, *d, reference_orbit.s), reference_orbit.p});
  if (classify_orbit(oe).degenerate) throw Error(ErrorCode::DegenerateOrbit, "orbit is degenerate at this eps");
  const Complex b0 = balian_bloch_term(oe.q, oe.length, link_product(*d, oe.s), 0.0, 1.0, 1, 0);
  std::vector<SweepRow> out;
  for (double k : ks) {
    if (!(k > 0.0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
    const double w = window / k, eta = offset / k;
    SweepRow row;
    row.k = k;
    row.oracle = trace_oracle(*d, oe.q, k, make_mollifier(oe.length - eta + w, 2.0 * w), options);
    row.trace = row.oracle.value;
    row.leading = 2.0 * oe.q * symplectic_prefactor(oe, k) * b0;
    row.relative_error = std::abs(row.trace - row.leading) / std::abs(row.leading);
    out.push_back(std::move(row));
  }
  return out;
}

bool CriterionResult::pass() const {
  if (!error.empty()) return false;
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return !checks.empty();
}

std::string CriterionResult::failure() const {
  if (!error.empty()) return error;
  for (const auto& c : checks) {
    if (!c.pass) return c.name;
  }
  return checks.empty() ? "no checks" : "";
}

bool ValidationReport::pass() const {
  for (const auto& r : rows) {
    if (!r.pass()) return false;
  }
  return !rows.empty();
}

CriterionResult run_criterion(int id, const ValidationOptions& options) {
  CriterionResult r;
  r.id = id;
  r.title = title(id);
  r.details = io::Json::object();
  if (r.title.empty()) throw Error(ErrorCode::InvalidArgument, "criteria are numbered 1..8");
  if (!(options.tolerance_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance factor must be positive");
  Row row(r, options);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (id) {
      case 1: prod_identity(r, options, row); break;
      case 2: circle_spectrum(r, options, row); break;
      case 3: feynman_weights(r, options, row); break;
      case 4: stationary_phase(r, options, row); break;
      case 5: perturbation_scaling(r, options, row); break;
      case 6: leading_invariant(r, options, row); break;
      case 7: blowup_exponent(r, options, row); break;
      case 8: determinism(r, options, row); break;
    }
  } catch (const Error& e) {
    r.error = std::string(error_name(e.code())) + ": " + e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

ValidationReport run_validation(const ValidationOptions& options) {
  std::vector<int> ids = options.criteria;
  if (ids.empty()) ids = {1, 2, 3, 4, 5, 6, 7, 8};
  ValidationReport out;
  for (int id : ids) out.rows.push_back(run_criterion(id, options));
  return out;
}

io::Json to_json(const CriterionResult& r, bool timings) {
  io::Json checks = io::Json::array();
  for (const auto& c : r.checks) {
    io::Json j = io::Json::object();
    j["name"] = c.name;
    if (!c.timing || timings) j["measured"] = c.measured;
    if (std::isfinite(c.lower)) j["lower"] = c.lower;
    if (std::isfinite(c.upper)) j["upper"] = c.upper;
    j["pass"] = c.pass;
    checks.push_back(j);
  }
  io::Json out = io::Json::object();
  out["id"] = r.id;
  out["title"] = r.title;
  out["pass"] = r.pass();
  if (!r.pass()) out["failure"] = r.failure();
  out["checks"] = checks;
  out["details"] = r.details;
  if (timings) out["seconds"] = r.seconds;
  return out;
}

io::Json to_json(const ValidationReport& report, bool timings) {
  io::Json rows = io::Json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r, timings));
  return {{"pass", report.pass()}, {"criteria", rows}};
}

std::string summary_table(const ValidationReport& report) {
  std::ostringstream out;
  for (const auto& r : report.rows) {
    out << (r.pass() ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.title;
    for (const auto& c : r.checks) {
      if (c.timing) continue;
      out << "  " << c.name << "=" << c.measured;
    }
    out << "  (" << std::round(r.seconds * 10.0) / 10.0 << " s)";
    if (!r.pass()) out << "  violated: " << r.failure();
    out << "\n";
  }
  return out.str();
}

}  // namespace billspec

#include "billspec/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace billspec::io {
namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); }

double number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) bad(std::string("missing or non-numeric field '") + key + "'");
  const double v = it->get<double>();
  if (!std::isfinite(v)) bad(std::string("non-finite field '") + key + "'");
  return v;
}

std::vector<double> numbers(const Json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) bad(std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_array()) bad(std::string("field '") + key + "' is not a list");
  std::vector<double> out;
  for (const auto& x : *it) {
    if (!x.is_number()) bad(std::string("non-numeric entry in '") + key + "'");
    out.push_back(x.get<double>());
    if (!std::isfinite(out.back())) bad(std::string("non-finite entry in '") + key + "'");
  }
  return out;
}

int integer(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) bad(std::string("missing or non-integer field '") + key + "'");
  return it->get<int>();
}

std::vector<Bump> bumps_from_json(const Json& j, const char* what) {
  if (!j.is_array()) bad(std::string(what) + " must be a list");
  std::vector<Bump> out;
  for (const auto& b : j) {
    if (!b.is_object()) bad(std::string(what) + " entries must be objects");
    out.push_back({number(b, "center_s"), number(b, "mu1"), number(b, "half_width")});
  }
  return out;
}

Json bumps_to_json(const std::vector<Bump>& bumps) {
  Json out = Json::array();
  for (const auto& b : bumps) out.push_back({{"center_s", b.center_s}, {"mu1", b.mu1}, {"half_width", b.half_width}});
  return out;
}

Json doubles(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Json complexes(const std::vector<Complex>& v) {
  Json out = Json::array();
  for (const auto& z : v) out.push_back(to_json(z));
  return out;
}

}  // namespace

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
}

Json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string dump(const Json& value) { return value.dump(2) + "\n"; }

Json to_json(Complex z) {
  return {{"re", z.real()}, {"im", z.imag()}, {"abs", std::abs(z)}, {"arg", std::arg(z)}};
}

Json from_rational(const Rational& r) { return r.str(); }

Json from_vector(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json from_matrix(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    out.push_back(row);
  }
  return out;
}

DomainSpec domain_spec_from_json(const Json& j) {
  if (!j.is_object()) bad("domain spec must be an object");
  DomainSpec spec;
  spec.support_cos = numbers(j, "support_cos", true);
  spec.support_sin = numbers(j, "support_sin", false);
  if (j.contains("resolution")) spec.resolution = integer(j, "resolution");
  if (spec.resolution < 0) bad("resolution must be non-negative");
  return spec;
}

Json to_json(const DomainSpec& spec) {
  return {{"support_cos", doubles(spec.support_cos)},
          {"support_sin", doubles(spec.support_sin)},
          {"resolution", spec.resolution}};
}

DeformationFamily family_from_json(const Json& j, DomainPtr base) {
  DeformationFamily f;
  if (j.is_array()) {
    f.bumps = bumps_from_json(j, "deformation");
  } else if (j.is_object()) {
    if (j.contains("domain")) base = build_domain(domain_spec_from_json(j.at("domain")));
    if (j.contains("bumps")) f.bumps = bumps_from_json(j.at("bumps"), "bumps");
    if (j.contains("preload")) f.preload = bumps_from_json(j.at("preload"), "preload");
    if (j.contains("harmonic")) {
      const Json& h = j.at("harmonic");
      if (!h.is_object()) bad("harmonic must be an object");
      HarmonicProfile hp;
      hp.order = integer(h, "order");
      hp.phase_s = number(h, "phase_s");
      hp.mu1 = number(h, "mu1");
      if (h.contains("overtones")) hp.overtones = numbers(h, "overtones", true);
      f.harmonic = hp;
    }
    if (j.contains("epsilon_max")) f.epsilon_max = number(j, "epsilon_max");
  } else {
    bad("deformation must be a list of bumps or an object");
  }
  if (!base) bad("deformation needs a domain");
  f.base = std::move(base);
  f.validate();
  return f;
}

Json to_json(const DeformationFamily& family, const std::optional<DomainSpec>& domain) {
  Json out = Json::object();
  if (domain) out["domain"] = to_json(*domain);
  out["bumps"] = bumps_to_json(family.bumps);
  out["preload"] = bumps_to_json(family.preload);
  if (family.harmonic) {
    const auto& h = *family.harmonic;
    out["harmonic"] = {{"order", h.order}, {"phase_s", h.phase_s}, {"mu1", h.mu1}, {"overtones", doubles(h.overtones)}};
  }
  out["epsilon_max"] = family.epsilon_max;
  return out;
}

OrbitConfiguration orbit_config_from_json(const Json& j) {
  if (!j.is_object()) bad("orbit must be an object");
  OrbitConfiguration c;
  c.s = numbers(j, "s", true);
  c.p = j.contains("p") ? integer(j, "p") : 1;
  if (j.contains("q") && integer(j, "q") != static_cast<int>(c.s.size())) bad("q does not match the number of points");
  return c;
}

Json to_json(const PeriodicOrbit& o) {
  Json out = Json::object();
  out["p"] = o.p;
  out["q"] = o.q;
  out["s"] = doubles(o.s);
  out["length"] = o.length;
  out["gradient_norm"] = o.gradient_norm;
  out["closure_error"] = o.closure_error;
  out["traced_winding"] = o.traced_winding;
  out["theta"] = doubles(o.theta);
  out["links"] = doubles(o.links);
  out["curvature"] = doubles(o.curvature);
  out["hessian"] = from_matrix(o.hessian);
  out["eigenvalues"] = from_vector(o.eigenvalues);
  out["rank"] = o.rank;
  out["signature"] = o.signature;
  const Classification c = classify_orbit(o, o.degeneracy_tol);
  out["degenerate"] = c.degenerate;
  out["poincare"] = from_matrix(Eigen::MatrixXd(o.poincare));
  out["poincare_det"] = o.poincare.determinant();
  const ProdIdentity pi = verify_prod_identity(o);
  out["prod_identity"] = {{"det_hessian", pi.det_hessian},
                          {"det_one_minus_p", pi.det_one_minus_p},
                          {"offdiag_product", pi.offdiag_product},
                          {"residual", pi.residual},
                          {"residual_abs", pi.residual_abs}};
  return out;
}

Json to_json(const CFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"quadratic", f.quadratic},
          {"slope_stderr", f.slope_stderr},
          {"r_squared", f.r_squared},
          {"predicted", f.predicted},
          {"relative_error", std::abs(f.slope - f.predicted) / std::abs(f.predicted)},
          {"eps", doubles(f.eps)},
          {"det", doubles(f.det)}};
}

Json to_json(const InvariantReport& r) {
  Json out = Json::object();
  out["p"] = r.p;
  out["q"] = r.q;
  out["s"] = doubles(r.s);
  out["eps"] = r.eps;
  out["c_gamma"] = r.c_gamma;
  out["length"] = r.length;
  out["link_product"] = r.link_product;
  out["h"] = from_vector(r.h);
  out["adjugate_sign"] = r.adjugate_sign;
  out["cubic_contraction"] = r.cubic_contraction;
  out["generic"] = r.generic;
  out["det_hessian"] = r.det_hessian;
  out["signature"] = r.signature;
  out["small_eigenvalue"] = r.small_eigenvalue;
  out["sign"] = r.sign;
  Json w = Json::array();
  for (const auto& x : r.w) w.push_back(from_rational(x));
  out["w"] = w;
  out["b"] = complexes(r.b);
  out["b_measured"] = complexes(r.b_measured);
  out["measured_contraction"] = r.measured_contraction;
  return out;
}

Json to_json(const OracleResult& r) {
  Json comps = Json::array();
  for (const auto& c : r.integrated) {
    Json nodes = Json::array();
    for (int n : c.nodes) nodes.push_back(n);
    comps.push_back({{"lo", doubles(c.lo)},
                     {"hi", doubles(c.hi)},
                     {"nodes", nodes},
                     {"multiplicity", c.multiplicity},
                     {"evaluated", c.evaluated},
                     {"value", to_json(c.value)}});
  }
  return {{"value", to_json(r.value)},
          {"fine", to_json(r.fine)},
          {"coarse", to_json(r.coarse)},
          {"error_estimate", r.error_estimate},
          {"min_points_per_oscillation", r.min_points_per_oscillation},
          {"evaluated", r.evaluated},
          {"components", r.components},
          {"grid", comps}};
}

Json diagram_table(int j) {
  const auto diagrams = enumerate_diagrams(j);
  Json classes = Json::array();
  for (const auto& d : diagrams) {
    Json pairs = Json::array();
    for (const auto& [a, b] : d.pairing()) pairs.push_back({a, b});
    classes.push_back({{"pairing", pairs}, {"adjacency", d.adjacency}, {"aut", d.aut_order}});
  }
  return {{"j", j}, {"w", from_rational(w_of_j(j))}, {"w_formula", from_rational(w_pairing_formula(j))}, {"classes", classes}};
}

Json error_json(ErrorCode code, const std::string& message) {
  return {{"error", error_name(code)}, {"message", message}};
}

}  // namespace billspec::io

#include "billspec/billspec.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iomanip>
#include <new>
#include <set>
#include <sstream>

#include "billspec/billiard.hpp"
#include "billspec/io.hpp"
#include "billspec/oracles.hpp"
#include "billspec/validation.hpp"

using namespace billspec;

struct bs_domain {
  DomainPtr domain;
  std::optional<DomainSpec> spec;
};

struct bs_family {
  DeformationFamily family;
  std::optional<DomainSpec> spec;
};

namespace {

thread_local std::string last_message;
thread_local bs_status last_status = BS_OK;

bs_status fail(bs_status status, const std::string& message) {
  last_status = status;
  last_message = message;
  return status;
}

template <class F>
bs_status guard(F&& f) {
  try {
    f();
    return BS_OK;
  } catch (const Error& e) {
    return fail(static_cast<bs_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BS_RESOURCE_LIMIT, "out of memory");
  } catch (const std::exception& e) {
    return fail(BS_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const io::Json& j) { *out = copy_string(io::dump(j)); }

PeriodicOrbit orbit_from(const Domain& d, const char* orbit_json) {
  require(orbit_json != nullptr, "orbit JSON is required");
  return analyze_orbit(d, io::orbit_config_from_json(io::parse(orbit_json)));
}

}  // namespace

extern "C" {

const char* bs_status_name(bs_status status) {
  switch (status) {
    case BS_OK: return "Ok";
    case BS_VALIDATION_FAILED: return "ValidationFailed";
    case BS_INTERNAL: return "Internal";
    default:
      if (status >= BS_INVALID_ARGUMENT && status <= BS_RESOURCE_LIMIT) {
        return error_name(static_cast<ErrorCode>(status));
      }
      return "Unknown";
  }
}

const char* bs_last_error(void) { return last_message.c_str(); }

char* bs_last_error_json(void) {
  try {
    io::Json j = {{"error", bs_status_name(last_status)}, {"message", last_message}};
    return copy_string(io::dump(j));
  } catch (...) {
    return nullptr;
  }
}

void bs_string_free(char* s) { std::free(s); }

bs_status bs_domain_from_json(const char* json, bs_domain** out) {
  return guard([&] {
    require(json && out, "null argument");
    const DomainSpec spec = io::domain_spec_from_json(io::parse(json));
    *out = new bs_domain{build_domain(spec), spec};
  });
}

bs_status bs_domain_circle(double radius, bs_domain** out) {
  return guard([&] {
    require(out && radius > 0.0 && std::isfinite(radius), "radius must be positive");
    const DomainSpec spec = DomainSpec::circle(radius);
    *out = new bs_domain{build_domain(spec), spec};
  });
}

void bs_domain_free(bs_domain* domain) { delete domain; }

bs_status bs_domain_length(const bs_domain* domain, double* out) {
  return guard([&] {
    require(domain && out, "null argument");
    *out = domain->domain->total_length();
  });
}

bs_status bs_domain_check(const bs_domain* domain, char** json) {
  return guard([&] {
    require(domain && json, "null argument");
    const Domain& d = *domain->domain;
    const auto& t = d.tables();
    double kmin = t.curvature[0], kmax = t.curvature[0], area = 0.0;
    const std::size_t n = t.position.size();
    for (std::size_t i = 0; i < n; ++i) {
      kmin = std::min(kmin, t.curvature[i]);
      kmax = std::max(kmax, t.curvature[i]);
    }
    // (1/2) int x ^ x' ds, trapezoid on the periodic integrand
    const int m = 4096;
    for (int i = 0; i < m; ++i) {
      const BoundarySample b = d.sample(d.total_length() * i / m);
      area += 0.5 * (b.position.x() * b.tangent.y() - b.position.y() * b.tangent.x()) * d.total_length() / m;
    }
    io::Json j = io::Json::object();
    if (domain->spec) j["domain"] = io::to_json(*domain->spec);
    j["length"] = d.total_length();
    j["area"] = area;
    j["curvature_min"] = kmin;
    j["curvature_max"] = kmax;
    j["strictly_convex"] = kmin > 0.0;
    j["resolution"] = d.resolution();
    emit(json, j);
  });
}

bs_status bs_orbit_trace(const bs_domain* domain, double s, double theta, int n, double* s_out, double* theta_out,
                         double* x_out, double* y_out, int* winding_out) {
  return guard([&] {
    require(domain && s_out && theta_out && x_out && y_out && winding_out, "null argument");
    require(std::isfinite(s) && std::isfinite(theta), "non-finite start");
    const Domain& d = *domain->domain;
    const Trajectory tr = iterate(d, PhasePoint{s, theta}, n);
    const double ell = d.total_length();
    for (int i = 0; i <= n; ++i) {
      const Vec2 x = d.position(tr.points[i].s);
      s_out[i] = tr.points[i].s;
      theta_out[i] = tr.points[i].theta;
      x_out[i] = x.x();
      y_out[i] = x.y();
      winding_out[i] = static_cast<int>(std::floor((tr.lift[i] - tr.lift[0] + 1e-9 * ell) / ell));
    }
  });
}

bs_status bs_orbit_find(const bs_domain* domain, int p, int q, const char* seed_json, uint64_t seed, int maximize,
                        char** json) {
  return guard([&] {
    require(domain && json, "null argument");
    SearchOptions so;
    so.seed = seed;
    so.mode = maximize ? SearchMode::Maximize : SearchMode::Critical;
    if (seed_json) {
      const OrbitConfiguration c = io::orbit_config_from_json(io::parse(seed_json));
      require(static_cast<int>(c.s.size()) == q, "seed configuration has the wrong number of points");
      so.seed_config = c.s;
    }
    emit(json, io::to_json(find_periodic_orbit(*domain->domain, p, q, so)));
  });
}

bs_status bs_orbit_analyze(const bs_domain* domain, const char* orbit_json, char** json) {
  return guard([&] {
    require(domain && json, "null argument");
    emit(json, io::to_json(orbit_from(*domain->domain, orbit_json)));
  });
}

bs_status bs_family_from_json(const char* json, const bs_domain* base, bs_family** out) {
  return guard([&] {
    require(json && out, "null argument");
    const io::Json j = io::parse(json);
    std::optional<DomainSpec> spec = base ? base->spec : std::nullopt;
    if (j.is_object() && j.contains("domain")) spec = io::domain_spec_from_json(j.at("domain"));
    DeformationFamily f = io::family_from_json(j, base ? base->domain : nullptr);
    *out = new bs_family{std::move(f), spec};
  });
}

void bs_family_free(bs_family* family) { delete family; }

bs_status bs_family_to_json(const bs_family* family, char** json) {
  return guard([&] {
    require(family && json, "null argument");
    emit(json, io::to_json(family->family, family->spec));
  });
}

bs_status bs_family_deform(const bs_family* family, double eps, bs_domain** out) {
  return guard([&] {
    require(family && out, "null argument");
    *out = new bs_domain{deform(family->family, eps), std::nullopt};
  });
}

bs_status bs_family_reference(const bs_family* family, bs_domain** out) {
  return guard([&] {
    require(family && out, "null argument");
    *out = new bs_domain{family->family.reference(), family->family.preload.empty() ? family->spec : std::nullopt};
  });
}

bs_status bs_perturb_design(const bs_domain* domain, const char* orbit_json, double target_c, int harmonic,
                            const double* overtones, int n_overtones, int preload, double width_fraction,
                            char** json) {
  return guard([&] {
    require(domain && json, "null argument");
    require(std::isfinite(target_c) && target_c != 0.0, "target c must be finite and nonzero");
    PeriodicOrbit orbit = orbit_from(*domain->domain, orbit_json);
    DesignOptions opt;
    opt.harmonic = harmonic != 0;
    if (overtones && n_overtones > 0) opt.overtones.assign(overtones, overtones + n_overtones);
    if (width_fraction > 0.0) opt.width_fraction = width_fraction;
    DesignedFamily fam;
    io::Json j = io::Json::object();
    if (preload) {
      PreloadedFamily pre = degenerate_preload(domain->domain, orbit);
      orbit = pre.orbit;
      fam = design_perturbation(pre.family, orbit, target_c, opt);
      j["lambda"] = pre.lambda;
    } else {
      fam = design_perturbation(domain->domain, orbit, target_c, opt);
    }
    j["family"] = io::to_json(fam.family, domain->spec);
    j["orbit"] = {{"p", orbit.p}, {"q", orbit.q}, {"s", orbit.s}};
    j["mu1"] = fam.mu1;
    j["predicted_c"] = fam.predicted_c;
    emit(json, j);
  });
}

bs_status bs_perturb_fit_c(const bs_family* family, const char* orbit_json, const double* eps, int n, char** json) {
  return guard([&] {
    require(family && eps && json && n >= 3, "need a family and at least 3 eps values");
    const PeriodicOrbit orbit = orbit_from(*family->family.reference(), orbit_json);
    emit(json, io::to_json(fit_c_gamma(family->family, orbit, std::vector<double>(eps, eps + n))));
  });
}

bs_status bs_feynman_w(int j, char** json) {
  return guard([&] {
    require(json != nullptr, "null argument");
    emit(json, io::diagram_table(j));
  });
}

bs_status bs_feynman_check(int j, char** json) {
  bool pass = false;
  const bs_status st = guard([&] {
    require(json != nullptr, "null argument");
    const auto diagrams = enumerate_diagrams(j);
    std::int64_t group = 1;
    for (int i = 2; i <= 2 * j; ++i) group *= i;
    for (int i = 0; i < 2 * j; ++i) group *= 6;
    Rational pairings = 1, total = 0;
    for (int i = 6 * j - 1; i > 1; i -= 2) pairings *= i;
    for (const auto& d : diagrams) total += Rational(group, d.aut_order);
    const bool w_ok = w_of_j(j) == w_pairing_formula(j);
    io::Json out = {{"j", j},
                    {"classes", diagrams.size()},
                    {"pairings", pairings.str()},
                    {"orbit_stabilizer_sum", total.str()},
                    {"pairing_identity", total == pairings},
                    {"w", io::from_rational(w_of_j(j))},
                    {"w_formula", io::from_rational(w_pairing_formula(j))},
                    {"w_identity", w_ok}};
    pass = total == pairings && w_ok;
    if (j <= 2) {
      std::multiset<std::int64_t> a, b;
      for (const auto& [adj, count] : oracle::pairing_classes(j)) a.insert(group / count);
      for (const auto& d : diagrams) b.insert(d.aut_order);
      out["exhaustive_pairings_agree"] = a == b;
      pass = pass && a == b;
    }
    out["pass"] = pass;
    emit(json, out);
  });
  if (st != BS_OK) return st;
  return pass ? BS_OK : fail(BS_VALIDATION_FAILED, "pairing-count identity failed");
}

bs_status bs_invariants_compute(const bs_family* family, const char* orbit_json, double eps, int j, double c_gamma,
                                char** json) {
  return guard([&] {
    require(family && json, "null argument");
    const PeriodicOrbit orbit = orbit_from(*family->family.reference(), orbit_json);
    const double c = std::isnan(c_gamma) ? predicted_c_gamma(orbit, family->family) : c_gamma;
    emit(json, io::to_json(balian_bloch_leading(family->family, orbit, eps, j, c)));
  });
}

bs_status bs_oracle_trace(const bs_domain* domain, int q, double k, double center, double delta,
                          double points_per_oscillation, int threads, char** json) {
  return guard([&] {
    require(domain && json, "null argument");
    require(k > 0.0 && std::isfinite(k), "k must be positive");
    require(delta > 0.0 && std::isfinite(delta), "delta must be positive");
    require(threads >= 1, "threads must be at least 1");
    io::Json out = {{"q", q}, {"k", k}, {"delta", delta}};
    if (std::isnan(center)) {
      SearchOptions so;
      so.mode = SearchMode::Maximize;
      center = find_periodic_orbit(*domain->domain, 1, q, so).length;
    }
    out["center"] = center;
    OracleOptions oo;
    oo.threads = threads;
    if (points_per_oscillation > 0.0) oo.points_per_oscillation = points_per_oscillation;
    out["result"] = io::to_json(trace_oracle(*domain->domain, q, k, make_mollifier(center, delta), oo));
    emit(json, out);
  });
}

bs_status bs_report_sweep(const bs_family* family, const char* orbit_json, double eps, const double* ks, int n,
                          double window, double offset, int threads, char** csv) {
  return guard([&] {
    require(family && ks && csv && n >= 1, "null argument");
    require(threads >= 1, "threads must be at least 1");
    const PeriodicOrbit orbit = orbit_from(*family->family.reference(), orbit_json);
    OracleOptions oo;
    oo.threads = threads;
    const auto rows = trace_sweep(family->family, orbit, eps, std::vector<double>(ks, ks + n), window, offset, oo);
    std::ostringstream out;
    out << std::setprecision(12) << "k,abs_trace,abs_leading,error\n";
    for (const auto& r : rows) {
      out << r.k << "," << std::abs(r.trace) << "," << std::abs(r.leading) << "," << r.relative_error << "\n";
    }
    *csv = copy_string(out.str());
  });
}

bs_status bs_validate(const char* options_json, char** json, char** text) {
  bool passed = false;
  const bs_status st = guard([&] {
    ValidationOptions opt;
    if (options_json) {
      const io::Json j = io::parse(options_json);
      require(j.is_object(), "options must be an object");
      try {
        if (j.contains("scale")) {
          const std::string s = j.at("scale").get<std::string>();
          require(s == "quick" || s == "default", "scale must be quick or default");
          opt.scale = s == "quick" ? Scale::Quick : Scale::Default;
        }
        if (j.contains("seed")) opt.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) opt.threads = j.at("threads").get<int>();
        if (j.contains("criteria")) opt.criteria = j.at("criteria").get<std::vector<int>>();
        if (j.contains("tolerance_factor")) opt.tolerance_factor = j.at("tolerance_factor").get<double>();
        if (j.contains("timings")) opt.timings = j.at("timings").get<bool>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad validation options: ") + e.what());
      }
    }
    require(opt.threads >= 1, "threads must be at least 1");
    require(opt.tolerance_factor > 0.0, "tolerance factor must be positive");
    for (int id : opt.criteria) require(id >= 1 && id <= 8, "criteria are numbered 1..8");
    const ValidationReport report = run_validation(opt);
    passed = report.pass();
    if (json) emit(json, to_json(report, opt.timings));
    if (text) *text = copy_string(summary_table(report));
  });
  if (st != BS_OK) return st;
  return passed ? BS_OK : fail(BS_VALIDATION_FAILED, "a validation criterion failed");
}

}  // extern "C"

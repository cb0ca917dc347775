#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "billspec/billspec.h"

namespace {

using Json = nlohmann::ordered_json;

constexpr int kOk = 0, kBadFlags = 2, kNumerical = 3, kResource = 4;

struct Failure {
  int code;
};

struct Config {
  int threads = 1;
  std::uint64_t seed = 1;
  std::string output;
  std::string domain;
  double circle = 0.0;
};

int exit_code(bs_status st) {
  switch (st) {
    case BS_OK: return kOk;
    case BS_INVALID_ARGUMENT:
    case BS_INVALID_SPEC:
    case BS_IO_ERROR: return kBadFlags;
    case BS_RESOURCE_LIMIT: return kResource;
    default: return kNumerical;
  }
}

void report_error(const std::string& name, const std::string& message) {
  std::cerr << Json{{"error", name}, {"message", message}}.dump(2) << "\n";
}

void check(bs_status st) {
  if (st == BS_OK) return;
  char* e = bs_last_error_json();
  if (e) std::cerr << e;
  bs_string_free(e);
  throw Failure{exit_code(st)};
}

struct Str {
  char* p = nullptr;
  ~Str() { bs_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct DomainHandle {
  bs_domain* p = nullptr;
  ~DomainHandle() { bs_domain_free(p); }
};

struct FamilyHandle {
  bs_family* p = nullptr;
  ~FamilyHandle() { bs_family_free(p); }
};

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    report_error("IoError", "cannot open " + path);
    throw Failure{kBadFlags};
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const Config& cfg, const std::string& text) {
  if (cfg.output.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  out << text;
  if (!out) {
    report_error("IoError", "cannot write " + cfg.output);
    throw Failure{kNumerical};
  }
}

// --domain file, else --circle radius, else the unit circle.
void load_domain(const Config& cfg, DomainHandle& d) {
  if (!cfg.domain.empty()) {
    check(bs_domain_from_json(read_text(cfg.domain).c_str(), &d.p));
  } else {
    check(bs_domain_circle(cfg.circle > 0.0 ? cfg.circle : 1.0, &d.p));
  }
}

void load_family(const Config& cfg, const std::string& path, FamilyHandle& f) {
  DomainHandle base;
  const std::string text = read_text(path);
  const Json j = Json::parse(text, nullptr, false);
  const bool embedded = j.is_object() && j.contains("domain");
  if (!embedded) load_domain(cfg, base);
  check(bs_family_from_json(text.c_str(), base.p, &f.p));
}

std::string format_double(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

// Log-log plot of the relative error against k.
std::string svg_plot(const std::vector<double>& k, const std::vector<double>& err) {
  const double w = 640, h = 420, l = 80, r = 20, t = 30, b = 60;
  double x0 = std::log10(k.front()), x1 = x0, y0 = std::log10(err.front()), y1 = y0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    x0 = std::min(x0, std::log10(k[i]));
    x1 = std::max(x1, std::log10(k[i]));
    y0 = std::min(y0, std::log10(err[i]));
    y1 = std::max(y1, std::log10(err[i]));
  }
  x0 = std::floor(x0 * 10) / 10 - 0.05;
  x1 = std::ceil(x1 * 10) / 10 + 0.05;
  y0 = std::floor(y0);
  y1 = std::ceil(y1);
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double v) { return l + (std::log10(v) - x0) / (x1 - x0) * (w - l - r); };
  auto py = [&](double v) { return t + (y1 - std::log10(v)) / (y1 - y0) * (h - t - b); };
  std::ostringstream s;
  s.precision(6);
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << w - l - r << "\" height=\"" << h - t - b
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
    const double y = py(std::pow(10.0, e));
    s << "<line x1=\"" << l - 5 << "\" y1=\"" << y << "\" x2=\"" << l << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << l - 8 << "\" y=\"" << y + 4 << "\" font-size=\"12\" text-anchor=\"end\">1e" << e
      << "</text>\n";
  }
  for (double v : k) {
    const double x = px(v);
    s << "<line x1=\"" << x << "\" y1=\"" << h - b << "\" x2=\"" << x << "\" y2=\"" << h - b + 5
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << x << "\" y=\"" << h - b + 20 << "\" font-size=\"12\" text-anchor=\"middle\">" << v
      << "</text>\n";
  }
  s << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 15 << "\" font-size=\"14\" text-anchor=\"middle\">k</text>\n";
  s << "<text x=\"20\" y=\"" << (t + h - b) / 2 << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (t + h - b) / 2 << ")\">relative error</text>\n";
  s << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < k.size(); ++i) s << (i ? " " : "") << px(k[i]) << "," << py(err[i]);
  s << "\"/>\n";
  for (std::size_t i = 0; i < k.size(); ++i) {
    s << "<circle cx=\"" << px(k[i]) << "\" cy=\"" << py(err[i]) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic billiard orbits, degenerate families and Balian-Bloch invariants"};
  app.require_subcommand(1);
  app.fallthrough();
  Config cfg;
  app.add_option("--threads", cfg.threads, "Worker threads for quadrature")->check(CLI::Range(1, 256));
  app.add_option("--seed", cfg.seed, "Seed for jittered multi-start");
  app.add_option("-o,--output", cfg.output, "Write the report here instead of stdout");

  auto domain_flags = [&](CLI::App* sub) {
    auto* d = sub->add_option("--domain", cfg.domain, "Domain spec JSON")->check(CLI::ExistingFile);
    sub->add_option("--circle", cfg.circle, "Circle of this radius")->check(CLI::PositiveNumber)->excludes(d);
  };

  // domain check
  auto* domain = app.add_subcommand("domain", "Domain utilities");
  domain->require_subcommand(1);
  auto* domain_check = domain->add_subcommand("check", "Build a domain and report length, area and curvature");
  domain_flags(domain_check);

  // orbit trace / find
  auto* orbit = app.add_subcommand("orbit", "Billiard orbits");
  orbit->require_subcommand(1);
  auto* trace = orbit->add_subcommand("trace", "Iterate the billiard map; CSV of bounces");
  double s0 = 0.0, theta = 0.0;
  int bounces = 1;
  domain_flags(trace);
  trace->add_option("--s", s0, "Start arclength")->required();
  trace->add_option("--theta", theta, "Angle from the tangent in (0, pi)")->required();
  trace->add_option("--n", bounces, "Number of bounces")->required()->check(CLI::Range(1, 10000000));

  auto* find = orbit->add_subcommand("find", "Variational search for a (p, q) periodic orbit");
  int p = 1, q = 3;
  std::string seed_file;
  bool maximize = false;
  domain_flags(find);
  find->add_option("--p", p, "Winding number")->required()->check(CLI::PositiveNumber);
  find->add_option("--q", q, "Number of bounces")->required()->check(CLI::Range(3, 64));
  find->add_option("--seed-file", seed_file, "Seed configuration {p, s}")->check(CLI::ExistingFile);
  find->add_flag("--maximize", maximize, "Maximize the length instead of finding any critical point");

  // perturb design / fit-c
  auto* perturb = app.add_subcommand("perturb", "Degenerate perturbation families");
  perturb->require_subcommand(1);
  auto* design = perturb->add_subcommand("design", "Bumps or a harmonic profile giving det H ~ c eps");
  std::string orbit_file, family_file;
  double target_c = 1.0, width = 0.0;
  bool harmonic = false, preload = false;
  domain_flags(design);
  design->add_option("--orbit", orbit_file, "Orbit {p, s} on the domain")->required()->check(CLI::ExistingFile);
  design->add_option("--c", target_c, "Target c_gamma")->required();
  design->add_flag("--harmonic", harmonic, "Global profile with contact at q equally spaced points");
  std::vector<double> overtones;
  design->add_option("--overtones", overtones, "Harmonic weights for orders q, 2q, ...")->delimiter(',');
  design->add_flag("--preload", preload, "Make a nondegenerate orbit degenerate first");
  design->add_option("--width", width, "Bump half width relative to the smallest gap")->check(CLI::Range(0.0, 0.5));

  auto* fit = perturb->add_subcommand("fit-c", "Least-squares slope of det H against eps");
  std::vector<double> eps_grid;
  domain_flags(fit);
  fit->add_option("--family", family_file, "Family JSON")->required()->check(CLI::ExistingFile);
  fit->add_option("--orbit", orbit_file, "Orbit {p, s} on the reference domain")->required()->check(CLI::ExistingFile);
  fit->add_option("--eps", eps_grid, "Eps values (default 9 log-spaced in [1e-4, 1e-2])")
      ->check(CLI::PositiveNumber)
      ->delimiter(',');

  // feynman w / check
  auto* feynman = app.add_subcommand("feynman", "Cubic Feynman diagrams");
  feynman->require_subcommand(1);
  int j = 1;
  bool as_json = false;
  auto* fw = feynman->add_subcommand("w", "Print w(j) and the class table");
  fw->add_option("--j", j, "Order")->required()->check(CLI::NonNegativeNumber);
  fw->add_flag("--json", as_json, "JSON output");
  auto* fc = feynman->add_subcommand("check", "Pairing-count identity");
  fc->add_option("--j", j, "Order")->required()->check(CLI::NonNegativeNumber);

  // invariants compute
  auto* inv = app.add_subcommand("invariants", "Balian-Bloch invariants");
  inv->require_subcommand(1);
  auto* compute = inv->add_subcommand("compute", "Leading coefficients B_0..B_j");
  double eps = 1e-3, c_gamma = std::numeric_limits<double>::quiet_NaN();
  domain_flags(compute);
  compute->add_option("--orbit", orbit_file, "Orbit {p, s} on the reference domain")->required()->check(CLI::ExistingFile);
  compute->add_option("--family", family_file, "Family JSON")->required()->check(CLI::ExistingFile);
  compute->add_option("--eps", eps, "Deformation parameter")->required()->check(CLI::NonNegativeNumber);
  compute->add_option("--j", j, "Highest order")->required()->check(CLI::NonNegativeNumber);
  compute->add_option("--c", c_gamma, "c_gamma (default: Jacobi prediction)");

  // oracle trace
  auto* oracle = app.add_subcommand("oracle", "Direct quadrature of the regularized trace");
  oracle->require_subcommand(1);
  auto* otrace = oracle->add_subcommand("trace", "Windowed q-torus integral");
  double k = 200.0, delta = 0.2, center = std::numeric_limits<double>::quiet_NaN(), ppo = 0.0;
  domain_flags(otrace);
  otrace->add_option("--family", family_file, "Family JSON (with --eps)")->check(CLI::ExistingFile);
  otrace->add_option("--eps", eps, "Deformation parameter for --family")->check(CLI::NonNegativeNumber);
  otrace->add_option("--q", q, "Number of bounces")->required()->check(CLI::Range(3, 4));
  otrace->add_option("--k", k, "Wavenumber")->required()->check(CLI::PositiveNumber);
  otrace->add_option("--delta", delta, "Window width")->required()->check(CLI::PositiveNumber);
  otrace->add_option("--center", center, "Window centre (default: longest (1, q) orbit length)");
  otrace->add_option("--ppo", ppo, "Points per oscillation")->check(CLI::Range(4.0, 256.0));

  // validate
  auto* validate = app.add_subcommand("validate", "Acceptance suite");
  std::string scale = "default";
  std::vector<int> criteria;
  double tolerance_factor = 1.0;
  bool timings = false;
  validate->add_option("--scale", scale, "quick or default")->check(CLI::IsMember({"quick", "default"}));
  validate->add_option("--criteria", criteria, "Subset of criteria 1..8")->check(CLI::Range(1, 8))->delimiter(',');
  validate->add_option("--tolerance-factor", tolerance_factor, "Multiply every accuracy bound")
      ->check(CLI::PositiveNumber);
  validate->add_flag("--timings", timings, "Include measured seconds in the JSON");
  validate->add_flag("--json", as_json, "JSON report instead of the table");

  // report plot
  auto* report = app.add_subcommand("report", "Sweep reports");
  report->require_subcommand(1);
  auto* plot = report->add_subcommand("plot", "CSV of k, |trace|, |leading|, error; optional SVG");
  std::vector<double> ks;
  double window = 60.0, offset = 20.0;
  std::string svg;
  domain_flags(plot);
  plot->add_option("--family", family_file, "Family JSON")->required()->check(CLI::ExistingFile);
  plot->add_option("--orbit", orbit_file, "Orbit {p, s} on the reference domain")->required()->check(CLI::ExistingFile);
  plot->add_option("--eps", eps, "Deformation parameter")->required()->check(CLI::NonNegativeNumber);
  plot->add_option("--k", ks, "Wavenumbers")->required()->check(CLI::PositiveNumber)->delimiter(',');
  plot->add_option("--window", window, "Window half width times k")->check(CLI::PositiveNumber);
  plot->add_option("--offset", offset, "Distance of the lower window edge below L, times k")
      ->check(CLI::NonNegativeNumber);
  plot->add_option("--svg", svg, "Also write an SVG plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("BadFlags", e.what());
    return kBadFlags;
  }

  try {
    if (domain_check->parsed()) {
      DomainHandle d;
      load_domain(cfg, d);
      Str out;
      check(bs_domain_check(d.p, &out.p));
      write_out(cfg, out.str());
    } else if (trace->parsed()) {
      DomainHandle d;
      load_domain(cfg, d);
      const std::size_t n = static_cast<std::size_t>(bounces) + 1;
      std::vector<double> ss(n), th(n), xs(n), ys(n);
      std::vector<int> wind(n);
      check(bs_orbit_trace(d.p, s0, theta, bounces, ss.data(), th.data(), xs.data(), ys.data(), wind.data()));
      std::ostringstream o;
      o << "bounce,s,theta,x,y,winding\n";
      for (std::size_t i = 0; i < n; ++i) {
        o << i << "," << format_double(ss[i]) << "," << format_double(th[i]) << "," << format_double(xs[i]) << ","
          << format_double(ys[i]) << "," << wind[i] << "\n";
      }
      write_out(cfg, o.str());
    } else if (find->parsed()) {
      DomainHandle d;
      load_domain(cfg, d);
      const std::string seed_text = seed_file.empty() ? "" : read_text(seed_file);
      Str out;
      check(bs_orbit_find(d.p, p, q, seed_file.empty() ? nullptr : seed_text.c_str(), cfg.seed, maximize, &out.p));
      write_out(cfg, out.str());
    } else if (design->parsed()) {
      DomainHandle d;
      load_domain(cfg, d);
      Str out;
      check(bs_perturb_design(d.p, read_text(orbit_file).c_str(), target_c, harmonic, overtones.data(),
                              static_cast<int>(overtones.size()), preload, width, &out.p));
      write_out(cfg, out.str());
    } else if (fit->parsed()) {
      FamilyHandle f;
      load_family(cfg, family_file, f);
      if (eps_grid.empty()) eps_grid = log_grid(1e-4, 1e-2, 9);
      Str out;
      check(bs_perturb_fit_c(f.p, read_text(orbit_file).c_str(), eps_grid.data(), static_cast<int>(eps_grid.size()),
                             &out.p));
      write_out(cfg, out.str());
    } else if (fw->parsed()) {
      Str out;
      check(bs_feynman_w(j, &out.p));
      if (as_json) {
        write_out(cfg, out.str());
      } else {
        const Json t = Json::parse(out.str());
        std::ostringstream o;
        o << t["w"].get<std::string>() << "\n";
        o << "class  |Aut|  pairing\n";
        int idx = 0;
        for (const auto& c : t["classes"]) {
          o << idx++ << "  " << c["aut"].get<long long>() << "  ";
          bool first = true;
          for (const auto& pr : c["pairing"]) {
            o << (first ? "" : " ") << "(" << pr[0].get<int>() << "," << pr[1].get<int>() << ")";
            first = false;
          }
          o << "\n";
        }
        write_out(cfg, o.str());
      }
    } else if (fc->parsed()) {
      Str out;
      const bs_status st = bs_feynman_check(j, &out.p);
      if (out.p) write_out(cfg, out.str());
      check(st);
    } else if (compute->parsed()) {
      FamilyHandle f;
      load_family(cfg, family_file, f);
      Str out;
      check(bs_invariants_compute(f.p, read_text(orbit_file).c_str(), eps, j, c_gamma, &out.p));
      write_out(cfg, out.str());
    } else if (otrace->parsed()) {
      DomainHandle d;
      if (!family_file.empty()) {
        FamilyHandle f;
        load_family(cfg, family_file, f);
        check(bs_family_deform(f.p, eps, &d.p));
      } else {
        load_domain(cfg, d);
      }
      Str out;
      check(bs_oracle_trace(d.p, q, k, center, delta, ppo, cfg.threads, &out.p));
      write_out(cfg, out.str());
    } else if (validate->parsed()) {
      Json opt = {{"scale", scale},
                  {"seed", cfg.seed},
                  {"threads", cfg.threads},
                  {"criteria", criteria},
                  {"tolerance_factor", tolerance_factor},
                  {"timings", timings}};
      Str json, text;
      const bs_status st = bs_validate(opt.dump().c_str(), &json.p, &text.p);
      if (json.p || text.p) write_out(cfg, as_json ? json.str() : text.str());
      check(st);
    } else if (plot->parsed()) {
      FamilyHandle f;
      load_family(cfg, family_file, f);
      Str out;
      check(bs_report_sweep(f.p, read_text(orbit_file).c_str(), eps, ks.data(), static_cast<int>(ks.size()), window,
                            offset, cfg.threads, &out.p));
      write_out(cfg, out.str());
      if (!svg.empty()) {
        std::vector<double> kk, err;
        std::istringstream in(out.str());
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
          std::vector<double> v;
          std::istringstream ls(line);
          std::string cell;
          while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
          kk.push_back(v[0]);
          err.push_back(v[3]);
        }
        std::ofstream o(svg, std::ios::binary);
        o << svg_plot(kk, err);
        if (!o) {
          report_error("IoError", "cannot write " + svg);
          return kNumerical;
        }
      }
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return kOk;
}

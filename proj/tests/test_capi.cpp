#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "billspec/billspec.h"

namespace {

struct Str {
  char* p = nullptr;
  ~Str() { bs_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

const char* kTriangle = R"({"p": 1, "s": [0.3, 2.394395102393195, 4.48879020478639]})";

}  // namespace

TEST_CASE("status names and last error") {
  CHECK(std::string(bs_status_name(BS_OK)) == "Ok");
  CHECK(std::string(bs_status_name(BS_RESOURCE_LIMIT)) == "ResourceLimit");
  CHECK(std::string(bs_status_name(BS_NONCONVEX)) == "Nonconvex");
  CHECK(std::string(bs_status_name(static_cast<bs_status>(57))) == "Unknown");
  bs_domain* d = nullptr;
  CHECK(bs_domain_from_json("{not json", &d) == BS_INVALID_SPEC);
  CHECK(d == nullptr);
  CHECK(contains(bs_last_error(), "malformed"));
  char* e = bs_last_error_json();
  CHECK(contains(e, "InvalidSpec"));
  bs_string_free(e);
  CHECK(bs_domain_circle(-1.0, &d) == BS_INVALID_ARGUMENT);
  CHECK(bs_domain_from_json(R"({"support_cos": [1.0, 0.0, 0.5]})", &d) == BS_NONCONVEX);
  CHECK(bs_domain_length(nullptr, nullptr) == BS_INVALID_ARGUMENT);
}

TEST_CASE("domain handles and tracing") {
  bs_domain* d = nullptr;
  REQUIRE(bs_domain_circle(1.0, &d) == BS_OK);
  double ell = 0.0;
  CHECK(bs_domain_length(d, &ell) == BS_OK);
  CHECK(ell == doctest::Approx(2 * M_PI).epsilon(1e-12));
  Str check;
  CHECK(bs_domain_check(d, &check.p) == BS_OK);
  CHECK(contains(check.str(), "\"strictly_convex\": true"));

  const int n = 5;
  std::vector<double> s(n + 1), th(n + 1), x(n + 1), y(n + 1);
  std::vector<int> w(n + 1);
  REQUIRE(bs_orbit_trace(d, 0.0, 2 * M_PI / 5, n, s.data(), th.data(), x.data(), y.data(), w.data()) == BS_OK);
  CHECK(w[n] == 2);
  CHECK(std::abs(x[n]) < 1e-9);
  CHECK(std::abs(y[n]) < 1e-9);
  CHECK(bs_orbit_trace(d, 0.0, 0.0, n, s.data(), th.data(), x.data(), y.data(), w.data()) == BS_GLANCING_RAY);

  Str orbit;
  CHECK(bs_orbit_find(d, 1, 3, nullptr, 1, 0, &orbit.p) == BS_OK);
  CHECK(contains(orbit.str(), "\"rank\": 2"));
  Str wrong;
  CHECK(bs_orbit_find(d, 1, 3, R"({"p": 1, "s": [0, 1]})", 1, 0, &wrong.p) == BS_INVALID_ARGUMENT);
  bs_domain_free(d);
}

TEST_CASE("design, invariants and resource guard") {
  bs_domain* d = nullptr;
  REQUIRE(bs_domain_circle(1.0, &d) == BS_OK);
  Str designed;
  REQUIRE(bs_perturb_design(d, kTriangle, -1.0, 1, nullptr, 0, 0, 0.0, &designed.p) == BS_OK);
  CHECK(contains(designed.str(), "\"predicted_c\""));
  const std::string text = designed.str();
  const std::size_t a = text.find("\"family\": ") + 10, b = text.find("\"orbit\"");
  std::string family_json = text.substr(a, b - a);
  family_json = family_json.substr(0, family_json.find_last_of('}') + 1);

  bs_family* f = nullptr;
  REQUIRE(bs_family_from_json(family_json.c_str(), nullptr, &f) == BS_OK);
  Str inv;
  CHECK(bs_invariants_compute(f, kTriangle, 1e-3, 1, std::numeric_limits<double>::quiet_NaN(), &inv.p) == BS_OK);
  CHECK(contains(inv.str(), "\"c_gamma\": -1.0"));
  CHECK(contains(inv.str(), "\"generic\": false"));
  Str too_high;
  CHECK(bs_invariants_compute(f, kTriangle, 1e-3, 5, -1.0, &too_high.p) == BS_RESOURCE_LIMIT);
  CHECK(too_high.p == nullptr);

  const double eps[] = {1e-4, 2e-4, 5e-4, 1e-3};
  Str fit;
  CHECK(bs_perturb_fit_c(f, kTriangle, eps, 4, &fit.p) == BS_OK);
  CHECK(contains(fit.str(), "\"r_squared\""));

  bs_domain* deformed = nullptr;
  CHECK(bs_family_deform(f, 1e-3, &deformed) == BS_OK);
  CHECK(bs_family_deform(f, 1.0, &deformed) == BS_INVALID_ARGUMENT);
  bs_domain_free(deformed);
  bs_family_free(f);
  bs_domain_free(d);
}

TEST_CASE("feynman outputs") {
  Str w;
  CHECK(bs_feynman_w(2, &w.p) == BS_OK);
  CHECK(contains(w.str(), "\"385/1152\""));
  Str c;
  CHECK(bs_feynman_check(2, &c.p) == BS_OK);
  CHECK(contains(c.str(), "\"exhaustive_pairings_agree\": true"));
  Str big;
  CHECK(bs_feynman_w(5, &big.p) == BS_RESOURCE_LIMIT);
}

TEST_CASE("validation through the C API") {
  Str json, text;
  CHECK(bs_validate(R"({"criteria": [2, 3]})", &json.p, &text.p) == BS_OK);
  CHECK(contains(text.str(), "PASS  criterion 2"));
  CHECK(contains(json.str(), "\"pass\": true"));
  CHECK_FALSE(contains(json.str(), "\"seconds\""));

  Str bad_json, bad_text;
  CHECK(bs_validate(R"({"criteria": [2], "tolerance_factor": 1e-20})", &bad_json.p, &bad_text.p) ==
        BS_VALIDATION_FAILED);
  CHECK(contains(bad_text.str(), "violated: max_eigenvalue_error"));
  CHECK(contains(bad_json.str(), "\"failure\": \"max_eigenvalue_error\""));

  Str none;
  CHECK(bs_validate(R"({"criteria": [9]})", &none.p, nullptr) == BS_INVALID_ARGUMENT);
  CHECK(bs_validate(R"({"scale": "huge"})", &none.p, nullptr) == BS_INVALID_ARGUMENT);
}

#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "billspec/error.hpp"
#include "billspec/feynman.hpp"
#include "billspec/geometry.hpp"
#include "billspec/invariants.hpp"
#include "billspec/length.hpp"

namespace billspec::io {

using Json = nlohmann::ordered_json;

Json parse(const std::string& text);
Json read_file(const std::string& path);
// Two-space indent, trailing newline.
std::string dump(const Json& value);

Json to_json(Complex z);  // {re, im, abs, arg}
Json from_rational(const Rational& r);
Json from_vector(const Eigen::VectorXd& v);
Json from_matrix(const Eigen::MatrixXd& m);  // list of rows

DomainSpec domain_spec_from_json(const Json& j);
Json to_json(const DomainSpec& spec);

// Either a list of bumps over `base`, or an object
// {domain?, bumps, preload?, harmonic?, epsilon_max?}; an embedded domain
// takes precedence over `base`.
DeformationFamily family_from_json(const Json& j, DomainPtr base);
// Domain spec is written when given.
Json to_json(const DeformationFamily& family, const std::optional<DomainSpec>& domain = std::nullopt);

// {p, q?, s}
OrbitConfiguration orbit_config_from_json(const Json& j);
Json to_json(const PeriodicOrbit& orbit);
Json to_json(const CFit& fit);
Json to_json(const InvariantReport& report);
Json to_json(const OracleResult& result);

Json diagram_table(int j);
Json error_json(ErrorCode code, const std::string& message);

}  // namespace billspec::io

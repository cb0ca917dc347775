#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "billspec/multipoly.hpp"

namespace billspec {

using Rational = boost::multiprecision::cpp_rational;
using Complex = std::complex<double>;

// Multigraph with an open vertex 0 (the amplitude) and closed vertices
// 1..V (phase derivatives). adjacency[a][a] counts loops.
struct FeynmanDiagram {
  std::vector<int> valency;  // valency[0] is the open vertex
  std::vector<std::vector<int>> adjacency;
  std::int64_t aut_order = 1;

  int closed_vertices() const { return static_cast<int>(valency.size()) - 1; }
  int open_valency() const { return valency[0]; }
  int edges() const;
  int order() const { return edges() - closed_vertices(); }
  // Half-edges are numbered vertex by vertex; returns the matched pairs.
  std::vector<std::pair<int, int>> pairing() const;
  // Vertex owning each half-edge.
  std::vector<int> half_edge_owner() const;
};

// Cubic multigraphs on 2j closed vertices with an isolated open vertex.
std::vector<FeynmanDiagram> enumerate_diagrams(int j, int max_j = 4);
// All diagrams of order j: closed valencies >= 3, open vertex of any valency.
std::vector<FeynmanDiagram> enumerate_general_diagrams(int j, int max_j = 3);

// |Aut| including parallel-edge permutations and loop flips, open vertex fixed.
std::int64_t aut_order(const FeynmanDiagram& diagram);
// Number of vertex permutations (open vertex fixed) preserving the adjacency.
std::int64_t vertex_automorphisms(const FeynmanDiagram& diagram);

Rational w_of_j(int j, int max_j = 4);
// (6j - 1)!! / ((2j)! 6^{2j}).
Rational w_pairing_formula(int j);

// Taylor data of a phase and amplitude at a nondegenerate critical point;
// polynomial variables are displacements from the critical point.
class PhaseModel {
 public:
  PhaseModel(RealPoly phase, ComplexPoly amplitude);

  int dimension() const { return phase_.vars(); }
  const RealPoly& phase() const { return phase_; }
  const ComplexPoly& amplitude() const { return amplitude_; }
  const Eigen::MatrixXd& hessian() const { return hessian_; }
  const Eigen::MatrixXd& inverse_hessian() const { return inverse_; }
  double condition_number() const { return condition_; }
  int signature() const { return signature_; }
  double determinant() const { return determinant_; }

  // Dense symmetric derivative tensor of order v, flattened row-major.
  std::vector<double> phase_tensor(int v) const;
  std::vector<Complex> amplitude_tensor(int v) const;

 private:
  RealPoly phase_;
  ComplexPoly amplitude_;
  Eigen::MatrixXd hessian_;
  Eigen::MatrixXd inverse_;
  double condition_ = 0.0;
  int signature_ = 0;
  double determinant_ = 0.0;
};

// One labeled term of the Feynman rules: labels[h] in [0, n) per half-edge.
Complex feynman_amplitude(const FeynmanDiagram& diagram, const std::vector<int>& labels,
                          const PhaseModel& model, double k);
// Sum over all labelings at k = 1 (the k^{-j} coefficient of the diagram).
Complex diagram_value(const FeynmanDiagram& diagram, const PhaseModel& model);

struct Expansion {
  std::vector<Complex> coefficients;  // C_0..C_J
  int signature = 0;
  double determinant = 0.0;
  double phase_value = 0.0;
  int dimension = 0;

  // (2 pi / k)^{n/2} e^{i k Phi_0} e^{i pi sgn / 4} / sqrt|det|
  Complex prefactor(double k) const;
  Complex evaluate(double k, int terms) const;  // prefactor * sum_{j < terms} C_j k^{-j}
};

// Operator formula with D = -i d: C_j = sum_{nu - mu = j, 2 nu >= 3 mu}
// i^{-j} 2^{-nu} / (mu! nu!) <H^{-1} D, D>^nu (g^mu u)(0).
Expansion stationary_phase_expand(const PhaseModel& model, int max_order);
// The same coefficients as sums over enumerate_general_diagrams.
Expansion diagram_expand(const PhaseModel& model, int max_order);

}  // namespace billspec

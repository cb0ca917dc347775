#include "billspec/feynman.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include "billspec/error.hpp"

namespace billspec {

namespace {

using Matrix = std::vector<std::vector<int>>;

std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Colour refinement on closed vertices; vertex 0 stays fixed.
class Refiner {
 public:
  std::vector<std::int64_t> colours(const std::vector<int>& valency, const Matrix& a) {
    const int n = static_cast<int>(valency.size());
    std::vector<std::int64_t> c(n, -1);
    for (int v = 1; v < n; ++v) c[v] = id({valency[v], a[v][v], a[0][v]});
    for (int round = 0; round < 3; ++round) {
      std::vector<std::int64_t> next(n, -1);
      for (int v = 1; v < n; ++v) {
        std::vector<std::int64_t> sig;
        for (int u = 1; u < n; ++u) {
          if (u != v && a[v][u] > 0) sig.push_back(c[u] * 64 + a[v][u]);
        }
        std::sort(sig.begin(), sig.end());
        sig.insert(sig.begin(), c[v]);
        next[v] = id(sig);
      }
      c = next;
    }
    return c;
  }

 private:
  std::int64_t id(const std::vector<std::int64_t>& key) {
    auto [it, inserted] = dict_.emplace(key, static_cast<std::int64_t>(dict_.size()));
    return it->second;
  }
  std::map<std::vector<std::int64_t>, std::int64_t> dict_;
};

// Count (or detect) adjacency-preserving maps from g to h; vertex 0 fixed.
std::int64_t count_isomorphisms(const std::vector<int>& valency, const Matrix& g, const Matrix& h,
                                const std::vector<std::int64_t>& cg, const std::vector<std::int64_t>& ch,
                                bool stop_at_first) {
  const int n = static_cast<int>(valency.size());
  std::vector<int> map(n, -1);
  std::vector<bool> used(n, false);
  map[0] = 0;
  used[0] = true;
  std::int64_t count = 0;
  std::function<bool(int)> extend = [&](int v) -> bool {
    if (v == n) {
      ++count;
      return stop_at_first;
    }
    for (int w = 1; w < n; ++w) {
      if (used[w] || cg[v] != ch[w] || valency[v] != valency[w]) continue;
      if (g[v][v] != h[w][w] || g[0][v] != h[0][w]) continue;
      bool ok = true;
      for (int u = 1; u < v && ok; ++u) ok = g[u][v] == h[map[u]][w];
      if (!ok) continue;
      map[v] = w;
      used[w] = true;
      if (extend(v + 1)) return true;
      used[w] = false;
      map[v] = -1;
    }
    return false;
  };
  extend(1);
  return count;
}

// All symmetric matrices with the given row degrees (loops count twice).
void labeled_graphs(const std::vector<int>& valency, const std::function<void(const Matrix&)>& emit) {
  const int n = static_cast<int>(valency.size());
  Matrix a(n, std::vector<int>(n, 0));
  std::vector<int> rem = valency;
  std::function<void(int, int)> fill = [&](int r, int c) {
    if (r == n) {
      emit(a);
      return;
    }
    if (c == n) {
      if (rem[r] == 0) fill(r + 1, r + 1);
      return;
    }
    int later = 0;
    for (int b = c + 1; b < n; ++b) later += rem[b];
    if (c == r) {
      for (int l = rem[r] / 2; l >= 0; --l) {
        if (rem[r] - 2 * l > later) break;
        a[r][r] = l;
        rem[r] -= 2 * l;
        fill(r, c + 1);
        rem[r] += 2 * l;
      }
      a[r][r] = 0;
      return;
    }
    const int hi = std::min(rem[r], rem[c]);
    for (int m = hi; m >= 0; --m) {
      if (rem[r] - m > later) break;
      a[r][c] = a[c][r] = m;
      rem[r] -= m;
      rem[c] -= m;
      fill(r, c + 1);
      rem[r] += m;
      rem[c] += m;
    }
    a[r][c] = a[c][r] = 0;
  };
  fill(0, 0);
}

std::vector<FeynmanDiagram> classes_for(const std::vector<int>& valency) {
  Refiner refiner;
  std::vector<FeynmanDiagram> reps;
  std::vector<std::vector<std::int64_t>> rep_colours;
  std::map<std::vector<std::int64_t>, std::vector<int>> buckets;
  labeled_graphs(valency, [&](const Matrix& a) {
    const auto col = refiner.colours(valency, a);
    std::vector<std::int64_t> key(col.begin() + 1, col.end());
    std::sort(key.begin(), key.end());
    auto& bucket = buckets[key];
    for (int idx : bucket) {
      if (count_isomorphisms(valency, a, reps[idx].adjacency, col, rep_colours[idx], true) > 0) return;
    }
    FeynmanDiagram d;
    d.valency = valency;
    d.adjacency = a;
    bucket.push_back(static_cast<int>(reps.size()));
    reps.push_back(d);
    rep_colours.push_back(col);
  });
  for (auto& d : reps) d.aut_order = aut_order(d);
  return reps;
}

std::int64_t checked_index_pow(int n, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= n;
  return r;
}

// Dense tensors with the first r slots contracted against the inverse Hessian.
class TensorCache {
 public:
  explicit TensorCache(const PhaseModel& m) : model_(m), n_(m.dimension()) {}

  const std::vector<Complex>& get(bool open, int v, int raised) {
    const auto key = std::make_tuple(open, v, raised);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<Complex> t;
    if (raised == 0) {
      if (open) {
        t = model_.amplitude_tensor(v);
      } else {
        const auto re = model_.phase_tensor(v);
        t.assign(re.begin(), re.end());
      }
    } else {
      const auto& prev = get(open, v, raised - 1);
      const int slot = raised - 1;
      const std::int64_t stride = checked_index_pow(n_, v - 1 - slot);
      t.assign(prev.size(), Complex{});
      const Eigen::MatrixXd& inv = model_.inverse_hessian();
      for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(prev.size()); ++idx) {
        const int i = static_cast<int>((idx / stride) % n_);
        const std::int64_t base = idx - i * stride;
        Complex acc{};
        for (int a = 0; a < n_; ++a) acc += inv(i, a) * prev[base + a * stride];
        t[idx] = acc;
      }
    }
    return cache_.emplace(key, std::move(t)).first->second;
  }

 private:
  const PhaseModel& model_;
  int n_;
  std::map<std::tuple<bool, int, int>, std::vector<Complex>> cache_;
};

Complex value_with(const FeynmanDiagram& d, const PhaseModel& model, TensorCache& cache) {
  const int n = model.dimension();
  const int nv = static_cast<int>(d.valency.size());
  // slots[v]: edge ids at vertex v, raised ends first
  std::vector<std::vector<int>> raised(nv), plain(nv);
  int edges = 0;
  for (int a = 0; a < nv; ++a) {
    for (int b = a; b < nv; ++b) {
      for (int m = 0; m < d.adjacency[a][b]; ++m) {
        plain[a].push_back(edges);
        raised[b].push_back(edges);
        ++edges;
      }
    }
  }
  std::vector<std::vector<int>> slots(nv);
  std::vector<const std::vector<Complex>*> tensors(nv);
  for (int v = 0; v < nv; ++v) {
    slots[v] = raised[v];
    slots[v].insert(slots[v].end(), plain[v].begin(), plain[v].end());
    tensors[v] = &cache.get(v == 0, d.valency[v], static_cast<int>(raised[v].size()));
  }
  std::vector<int> label(edges, 0);
  Complex total{};
  const std::int64_t count = checked_index_pow(n, edges);
  for (std::int64_t it = 0; it < count; ++it) {
    Complex term(1.0, 0.0);
    for (int v = 0; v < nv && term != Complex{}; ++v) {
      std::int64_t idx = 0;
      for (int e : slots[v]) idx = idx * n + label[e];
      term *= (*tensors[v])[idx];
    }
    total += term;
    for (int e = 0; e < edges; ++e) {
      if (++label[e] < n) break;
      label[e] = 0;
    }
  }
  const int power = (d.closed_vertices() + edges) % 4;
  static const Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return ipow[power] * total;
}

template <class T>
std::vector<T> dense_tensor(const MultiPoly<T>& p, int v) {
  const int n = p.vars();
  std::vector<T> t(static_cast<std::size_t>(checked_index_pow(n, v)), T{});
  if (v > p.degree()) return t;
  std::vector<int> idx(v, 0);
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    t[flat] = p.derivative(idx);
    for (int s = v - 1; s >= 0; --s) {
      if (++idx[s] < n) break;
      idx[s] = 0;
    }
  }
  return t;
}

}  // namespace

int FeynmanDiagram::edges() const {
  int twice = 0;
  for (int v : valency) twice += v;
  return twice / 2;
}

std::vector<int> FeynmanDiagram::half_edge_owner() const {
  std::vector<int> owner;
  for (std::size_t v = 0; v < valency.size(); ++v) owner.insert(owner.end(), valency[v], static_cast<int>(v));
  return owner;
}

std::vector<std::pair<int, int>> FeynmanDiagram::pairing() const {
  const int nv = static_cast<int>(valency.size());
  std::vector<int> next(nv, 0);
  int offset = 0;
  for (int v = 0; v < nv; ++v) {
    next[v] = offset;
    offset += valency[v];
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < nv; ++a) {
    for (int b = a; b < nv; ++b) {
      for (int m = 0; m < adjacency[a][b]; ++m) {
        const int h1 = next[a]++;
        const int h2 = next[b]++;
        pairs.emplace_back(h1, h2);
      }
    }
  }
  return pairs;
}

std::int64_t vertex_automorphisms(const FeynmanDiagram& d) {
  Refiner refiner;
  const auto c = refiner.colours(d.valency, d.adjacency);
  return count_isomorphisms(d.valency, d.adjacency, d.adjacency, c, c, false);
}

std::int64_t aut_order(const FeynmanDiagram& d) {
  std::int64_t aut = vertex_automorphisms(d);
  const int nv = static_cast<int>(d.valency.size());
  for (int a = 0; a < nv; ++a) {
    aut *= factorial(d.adjacency[a][a]) << d.adjacency[a][a];
    for (int b = a + 1; b < nv; ++b) aut *= factorial(d.adjacency[a][b]);
  }
  return aut;
}

std::vector<FeynmanDiagram> enumerate_diagrams(int j, int max_j) {
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "order must be non-negative");
  if (j > max_j) throw Error(ErrorCode::ResourceLimit, "order " + std::to_string(j) + " above diagram bound " + std::to_string(max_j));
  std::vector<int> valency(2 * j + 1, 3);
  valency[0] = 0;
  return classes_for(valency);
}

std::vector<FeynmanDiagram> enumerate_general_diagrams(int j, int max_j) {
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "order must be non-negative");
  if (j > max_j) throw Error(ErrorCode::ResourceLimit, "order " + std::to_string(j) + " above diagram bound " + std::to_string(max_j));
  std::vector<FeynmanDiagram> out;
  for (int m = 0; m <= 2 * j; ++m) {
    for (int v = 0; v <= 2 * j; ++v) {
      const int total = 2 * (j + v) - m;  // sum of closed valencies
      if (total < 3 * v || (v == 0 && total != 0)) continue;
      // non-increasing closed valencies, each in [3, 2j + 2]
      std::vector<int> val(v);
      std::function<void(int, int, int)> rec = [&](int i, int left, int cap) {
        if (i == v) {
          if (left != 0) return;
          std::vector<int> full = {m};
          full.insert(full.end(), val.begin(), val.end());
          auto cls = classes_for(full);
          out.insert(out.end(), cls.begin(), cls.end());
          return;
        }
        for (int x = std::min(cap, left - 3 * (v - i - 1)); x >= 3; --x) {
          val[i] = x;
          rec(i + 1, left - x, x);
        }
      };
      rec(0, total, 2 * j + 2);
    }
  }
  return out;
}

Rational w_of_j(int j, int max_j) {
  Rational w = 0;
  for (const auto& d : enumerate_diagrams(j, max_j)) w += Rational(1, d.aut_order);
  return w;
}

Rational w_pairing_formula(int j) {
  using boost::multiprecision::cpp_int;
  cpp_int num = 1, den = 1;
  for (int i = 6 * j - 1; i > 1; i -= 2) num *= i;
  for (int i = 2; i <= 2 * j; ++i) den *= i;
  for (int i = 0; i < 2 * j; ++i) den *= 6;
  return Rational(num, den);
}

PhaseModel::PhaseModel(RealPoly phase, ComplexPoly amplitude)
    : phase_(std::move(phase)), amplitude_(std::move(amplitude)) {
  const int n = phase_.vars();
  if (n < 1 || amplitude_.vars() != n) throw Error(ErrorCode::InvalidArgument, "phase and amplitude dimensions differ");
  if (phase_.degree() < 2) throw Error(ErrorCode::InvalidArgument, "phase needs degree >= 2");
  hessian_.resize(n, n);
  double grad = 0.0;
  for (int i = 0; i < n; ++i) {
    grad = std::max(grad, std::abs(phase_.derivative({i})));
    for (int j = 0; j < n; ++j) hessian_(i, j) = phase_.derivative({i, j});
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian_, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double big = ev.cwiseAbs().maxCoeff(), small = ev.cwiseAbs().minCoeff();
  if (!(small > 0.0) || big / small > 1e13) throw Error(ErrorCode::SingularHessian, "phase Hessian is singular");
  if (grad > 1e-8 * std::max(1.0, big)) throw Error(ErrorCode::InvalidArgument, "phase is not critical at the origin");
  condition_ = big / small;
  determinant_ = hessian_.determinant();
  for (Eigen::Index i = 0; i < ev.size(); ++i) signature_ += ev[i] > 0 ? 1 : -1;
  inverse_ = hessian_.inverse();
}

std::vector<double> PhaseModel::phase_tensor(int v) const { return dense_tensor(phase_, v); }
std::vector<Complex> PhaseModel::amplitude_tensor(int v) const { return dense_tensor(amplitude_, v); }

Complex feynman_amplitude(const FeynmanDiagram& d, const std::vector<int>& labels,
                          const PhaseModel& model, double k) {
  const auto owner = d.half_edge_owner();
  if (labels.size() != owner.size()) throw Error(ErrorCode::InvalidArgument, "one label per half-edge");
  const int n = model.dimension();
  for (int l : labels) {
    if (l < 0 || l >= n) throw Error(ErrorCode::InvalidArgument, "label out of range");
  }
  const Complex i(0.0, 1.0);
  Complex value(1.0, 0.0);
  std::vector<std::vector<int>> at(d.valency.size());
  for (std::size_t h = 0; h < owner.size(); ++h) at[owner[h]].push_back(labels[h]);
  for (std::size_t v = 0; v < d.valency.size(); ++v) {
    if (v == 0) {
      value *= d.valency[0] <= model.amplitude().degree() ? model.amplitude().derivative(at[0]) : Complex{};
    } else {
      const double t = d.valency[v] <= model.phase().degree() ? model.phase().derivative(at[v]) : 0.0;
      value *= i * k * t;
    }
  }
  for (auto [h1, h2] : d.pairing()) value *= (i / k) * model.inverse_hessian()(labels[h1], labels[h2]);
  return value;
}

Complex diagram_value(const FeynmanDiagram& d, const PhaseModel& model) {
  TensorCache cache(model);
  return value_with(d, model, cache);
}

Complex Expansion::prefactor(double k) const {
  const double mag = std::pow(2.0 * std::numbers::pi / k, 0.5 * dimension) / std::sqrt(std::abs(determinant));
  return mag * std::exp(Complex(0.0, k * phase_value + std::numbers::pi * signature / 4.0));
}

Complex Expansion::evaluate(double k, int terms) const {
  Complex sum{};
  for (int j = 0; j < terms && j < static_cast<int>(coefficients.size()); ++j) {
    sum += coefficients[j] * std::pow(k, -j);
  }
  return prefactor(k) * sum;
}

namespace {

Expansion header(const PhaseModel& model) {
  Expansion e;
  e.signature = model.signature();
  e.determinant = model.determinant();
  e.phase_value = model.phase().value();
  e.dimension = model.dimension();
  return e;
}

}  // namespace

Expansion stationary_phase_expand(const PhaseModel& model, int max_order) {
  if (max_order < 0) throw Error(ErrorCode::InvalidArgument, "order must be non-negative");
  if (max_order > 4) throw Error(ErrorCode::ResourceLimit, "stationary phase order above 4");
  if (model.phase().degree() < 2 * max_order + 2 || model.amplitude().degree() < 2 * max_order) {
    throw Error(ErrorCode::InvalidArgument, "Taylor data too short for the requested order");
  }
  Expansion e = header(model);
  const int n = model.dimension();
  const int deg = std::max(6 * max_order, 2);
  RealPoly g = regrade(model.phase(), std::min(model.phase().degree(), 2 * max_order + 2));
  g = regrade(g, deg);
  for (int i = 0; i < g.basis().size() && g.basis().total_degree(i) <= 2; ++i) g[i] = 0.0;
  const ComplexPoly gc = g.cast<Complex>();
  const ComplexPoly u = regrade(regrade(model.amplitude(), std::min(model.amplitude().degree(), 2 * max_order)), deg);
  const Eigen::MatrixXd& inv = model.inverse_hessian();
  auto laplace = [&](const ComplexPoly& p) {
    ComplexPoly r(p.basis_ptr());
    for (int a = 0; a < n; ++a) {
      const ComplexPoly pa = p.partial(a);
      for (int b = 0; b < n; ++b) {
        if (inv(a, b) != 0.0) r += pa.partial(b) * Complex(inv(a, b));
      }
    }
    return r;
  };
  const Complex i(0.0, 1.0);
  for (int j = 0; j <= max_order; ++j) {
    Complex cj{};
    ComplexPoly gu = u;  // g^mu u
    for (int mu = 0; mu <= 2 * j; ++mu) {
      if (mu > 0) gu = gu * gc;
      const int nu = j + mu;
      ComplexPoly p = gu;
      for (int s = 0; s < nu; ++s) p = laplace(p);
      const double coeff = std::pow(0.5, nu) * (nu % 2 ? -1.0 : 1.0) /
                           (static_cast<double>(factorial(mu)) * static_cast<double>(factorial(nu)));
      cj += coeff * p.value();
    }
    e.coefficients.push_back(std::pow(i, -j) * cj);
  }
  return e;
}

Expansion diagram_expand(const PhaseModel& model, int max_order) {
  if (max_order < 0) throw Error(ErrorCode::InvalidArgument, "order must be non-negative");
  if (model.phase().degree() < 2 * max_order + 2 || model.amplitude().degree() < 2 * max_order) {
    throw Error(ErrorCode::InvalidArgument, "Taylor data too short for the requested order");
  }
  Expansion e = header(model);
  TensorCache cache(model);
  for (int j = 0; j <= max_order; ++j) {
    Complex cj{};
    for (const auto& d : enumerate_general_diagrams(j)) {
      cj += value_with(d, model, cache) / static_cast<double>(d.aut_order);
    }
    e.coefficients.push_back(cj);
  }
  return e;
}

}  // namespace billspec

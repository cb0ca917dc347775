#include "billspec/multipoly.hpp"

#include <mutex>
#include <stdexcept>

namespace billspec {

namespace {

void enumerate_degree(int vars, int remaining, int v, Exponent& e,
                      std::vector<Exponent>& out) {
  if (v == vars - 1) {
    e[v] = static_cast<std::uint8_t>(remaining);
    out.push_back(e);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    e[v] = static_cast<std::uint8_t>(k);
    enumerate_degree(vars, remaining - k, v + 1, e, out);
  }
  e[v] = 0;
}

}  // namespace

MonomialBasis::MonomialBasis(int vars, int degree) : vars_(vars), degree_(degree) {
  if (vars < 1 || degree < 0 || degree > 255) {
    throw std::invalid_argument("monomial basis dimensions out of range");
  }
  for (int d = 0; d <= degree; ++d) {
    begin_.push_back(static_cast<int>(exps_.size()));
    Exponent e(vars, 0);
    enumerate_degree(vars, d, 0, e, exps_);
  }
  begin_.push_back(static_cast<int>(exps_.size()));
  for (std::size_t i = 0; i < exps_.size(); ++i) {
    int d = 0;
    for (auto k : exps_[i]) d += k;
    degs_.push_back(d);
    index_.emplace(exps_[i], static_cast<int>(i));
  }
  shift_.assign(exps_.size() * vars_, -1);
  for (std::size_t i = 0; i < exps_.size(); ++i) {
    for (int v = 0; v < vars_; ++v) {
      Exponent e = exps_[i];
      ++e[v];
      shift_[i * vars_ + v] = index_of(e);
    }
  }
  const int n = size();
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n && degs_[a] + degs_[b] <= degree_; ++b) {
      if (degs_[a] + degs_[b] > degree_) continue;
      Exponent e = exps_[a];
      for (int v = 0; v < vars_; ++v) e[v] += exps_[b][v];
      products_.push_back({a, b, index_.at(e)});
    }
  }
}

int MonomialBasis::index_of(const Exponent& e) const {
  auto it = index_.find(e);
  return it == index_.end() ? -1 : it->second;
}

std::shared_ptr<const MonomialBasis> MonomialBasis::get(int vars, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[{vars, degree}];
  if (!slot) slot = std::make_shared<const MonomialBasis>(vars, degree);
  return slot;
}

}  // namespace billspec

#include "rgcnqa/numcore/param.h"

#include <cmath>

namespace rgcnqa {

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Param& ParamSet::add(std::string name, Tensor init) {
  if (find(name) != nullptr) throw std::invalid_argument("duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::make_unique<Param>(std::move(init))});
  return *entries_.back().param;
}

Param* ParamSet::find(const std::string& name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.param.get();
  }
  return nullptr;
}

const Param* ParamSet::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.param.get();
  }
  return nullptr;
}

Param& ParamSet::at(const std::string& name) {
  Param* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter: " + name);
  return *p;
}

std::vector<Param*> ParamSet::pointers() const {
  std::vector<Param*> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.param.get());
  return out;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.param->value.size();
  return n;
}

}  // namespace rgcnqa

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rgcnqa/numcore/random.h"
#include "rgcnqa/numcore/tensor.h"

namespace rgcnqa {

/// Trainable tensor plus its adaptive-moment optimizer state.
struct Param {
  explicit Param(Tensor init)
      : value(std::move(init)),
        first_moment(value.shape()),
        second_moment(value.shape()) {}

  Tensor value;
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step_count = 0;
};

/// Glorot-uniform matrix in +-sqrt(6 / (rows + cols)).
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

/// Named, ordered collection of parameters. Addresses of registered params are
/// stable for the lifetime of the set, so layers may keep raw pointers.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    std::unique_ptr<Param> param;
  };

  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Param& add(std::string name, Tensor init);
  Param& glorot(std::string name, std::size_t rows, std::size_t cols, Rng& rng) {
    return add(std::move(name), glorot_uniform(rows, cols, rng));
  }
  Param& zeros(std::string name, std::size_t rows, std::size_t cols) {
    return add(std::move(name), Tensor::matrix(rows, cols));
  }

  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  Param& at(const std::string& name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Param*> pointers() const;
  std::size_t size() const { return entries_.size(); }
  /// Total number of scalar values across all parameters.
  std::size_t scalar_count() const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace rgcnqa

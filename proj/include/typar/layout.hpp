#pragma once

#include <string>
#include <vector>

#include "typar/tape.hpp"

namespace typar {

enum class Init { zero, normal };

struct LayoutEntry {
  std::string name;
  Eigen::Index rows = 0, cols = 0;
  Eigen::Index offset = 0;
  Init init = Init::zero;
  double stddev = 0;

  Eigen::Index size() const { return rows * cols; }
};

// Fixed flattening order of a group of parameter matrices, each stored
// row-major and back to back in a single column vector.
class ParamLayout {
 public:
  void add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init = Init::zero,
           double stddev = 0);

  const std::vector<LayoutEntry>& entries() const { return entries_; }
  Eigen::Index size() const { return size_; }
  const LayoutEntry& at(const std::string& name) const;

  template <class S>
  std::vector<Var<S>> unflatten(const Var<S>& flat) const;
  template <class S>
  std::vector<Matrix<S>> unflatten(const Matrix<S>& flat) const;
  template <class S>
  Matrix<S> flatten(const std::vector<Matrix<S>>& parts) const;

  // Column vector drawn from each entry's init rule.
  template <class S>
  Matrix<S> sample(Rng& rng) const;

 private:
  std::vector<LayoutEntry> entries_;
  Eigen::Index size_ = 0;
};

}  // namespace typar

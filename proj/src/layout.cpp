#include "typar/layout.hpp"

#include "typar/ops.hpp"

namespace typar {

void ParamLayout::add(std::string name, Eigen::Index rows, Eigen::Index cols, Init init,
                      double stddev) {
  entries_.push_back({std::move(name), rows, cols, size_, init, stddev});
  size_ += rows * cols;
}

const LayoutEntry& ParamLayout::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw InvariantError("layout has no entry '" + name + "'");
}

template <class S>
std::vector<Var<S>> ParamLayout::unflatten(const Var<S>& flat) const {
  if (flat.value().size() != size_)
    throw InvariantError("unflatten: expected " + std::to_string(size_) + " values, got " +
                         std::to_string(flat.value().size()));
  std::vector<Var<S>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(view(flat, e.offset, e.rows, e.cols));
  return out;
}

template <class S>
std::vector<Matrix<S>> ParamLayout::unflatten(const Matrix<S>& flat) const {
  if (flat.size() != size_)
    throw InvariantError("unflatten: expected " + std::to_string(size_) + " values, got " +
                         std::to_string(flat.size()));
  std::vector<Matrix<S>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_)
    out.push_back(Eigen::Map<const Matrix<S>>(flat.data() + e.offset, e.rows, e.cols));
  return out;
}

template <class S>
Matrix<S> ParamLayout::flatten(const std::vector<Matrix<S>>& parts) const {
  if (parts.size() != entries_.size()) throw InvariantError("flatten: wrong number of parts");
  Matrix<S> flat(size_, 1);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& e = entries_[i];
    if (parts[i].rows() != e.rows || parts[i].cols() != e.cols)
      throw InvariantError("flatten: shape mismatch for " + e.name);
    Eigen::Map<Matrix<S>>(flat.data() + e.offset, e.rows, e.cols) = parts[i];
  }
  return flat;
}

template <class S>
Matrix<S> ParamLayout::sample(Rng& rng) const {
  Matrix<S> flat = Matrix<S>::Zero(size_, 1);
  for (const auto& e : entries_) {
    if (e.init != Init::normal) continue;
    std::normal_distribution<double> dist(0.0, e.stddev);
    for (Eigen::Index i = 0; i < e.size(); ++i) flat(e.offset + i, 0) = S(dist(rng));
  }
  return flat;
}

template std::vector<Var<float>> ParamLayout::unflatten(const Var<float>&) const;
template std::vector<Var<double>> ParamLayout::unflatten(const Var<double>&) const;
template std::vector<Matrix<float>> ParamLayout::unflatten(const Matrix<float>&) const;
template std::vector<Matrix<double>> ParamLayout::unflatten(const Matrix<double>&) const;
template Matrix<float> ParamLayout::flatten(const std::vector<Matrix<float>>&) const;
template Matrix<double> ParamLayout::flatten(const std::vector<Matrix<double>>&) const;
template Matrix<float> ParamLayout::sample(Rng&) const;
template Matrix<double> ParamLayout::sample(Rng&) const;

}  // namespace typar

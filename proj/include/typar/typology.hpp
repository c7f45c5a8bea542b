#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace typar {

inline constexpr int kSyntaxFeatures = 103;
inline constexpr int kPhonologyFeatures = 28;
inline constexpr int kInventoryFeatures = 158;
inline constexpr int kTypologyFeatures = kSyntaxFeatures + kPhonologyFeatures + kInventoryFeatures;

struct FeatureSlice {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  bool operator==(const FeatureSlice&) const = default;
};

// syntax, phonology, inventory
std::array<FeatureSlice, 3> feature_group_slices();

// 289 typological features in [0,1]; construction enforces both.
class TypologyVector {
 public:
  TypologyVector() : values_(Eigen::RowVectorXd::Zero(kTypologyFeatures)) {}
  explicit TypologyVector(Eigen::RowVectorXd values);

  const Eigen::RowVectorXd& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

 private:
  Eigen::RowVectorXd values_;
};

class TypologyTable {
 public:
  void insert(const std::string& code, TypologyVector v);
  bool contains(const std::string& code) const { return entries_.count(code) > 0; }
  const TypologyVector& get(const std::string& code) const;
  const std::map<std::string, TypologyVector>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Optional feature names from the "#features" header line.
  const std::vector<std::string>& feature_names() const { return names_; }
  void set_feature_names(std::vector<std::string> names);

 private:
  std::map<std::string, TypologyVector> entries_;
  std::vector<std::string> names_;
};

TypologyTable parse_typology(const std::string& text);
TypologyTable load_typology(const std::string& path);
std::string write_typology(const TypologyTable& table);

inline const TypologyVector& get_vector(const TypologyTable& t, const std::string& code) {
  return t.get(code);
}

}  // namespace typar

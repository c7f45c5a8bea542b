#include "typar/typology.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "typar/error.hpp"

namespace typar {

std::array<FeatureSlice, 3> feature_group_slices() {
  return {FeatureSlice{0, kSyntaxFeatures},
          FeatureSlice{kSyntaxFeatures, kSyntaxFeatures + kPhonologyFeatures},
          FeatureSlice{kSyntaxFeatures + kPhonologyFeatures, kTypologyFeatures}};
}

TypologyVector::TypologyVector(Eigen::RowVectorXd values) : values_(std::move(values)) {
  if (values_.size() != kTypologyFeatures)
    throw DataError("typology vector: expected " + std::to_string(kTypologyFeatures) +
                    ", got " + std::to_string(values_.size()));
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0))
      throw DataError("typology value " + std::to_string(values_[i]) + " at feature " +
                      std::to_string(i) + " outside [0,1]");
  }
}

void TypologyTable::insert(const std::string& code, TypologyVector v) {
  if (!entries_.emplace(code, std::move(v)).second)
    throw DataError("duplicate typology entry for language '" + code + "'");
}

const TypologyVector& TypologyTable::get(const std::string& code) const {
  auto it = entries_.find(code);
  if (it == entries_.end())
    throw MissingLanguageError("no typology vector for language '" + code + "'");
  return it->second;
}

void TypologyTable::set_feature_names(std::vector<std::string> names) {
  if (!names.empty() && names.size() != static_cast<std::size_t>(kTypologyFeatures))
    throw DataError("typology header: expected " + std::to_string(kTypologyFeatures) +
                    " feature names, got " + std::to_string(names.size()));
  names_ = std::move(names);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

TypologyTable parse_typology(const std::string& text) {
  TypologyTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (line.rfind("#features", 0) == 0) {
      if (tab == std::string::npos) throw ParseError(line_no, "malformed #features header");
      std::vector<std::string> names;
      for (auto n : split_commas(std::string_view(line).substr(tab + 1))) names.emplace_back(n);
      table.set_feature_names(std::move(names));
      continue;
    }
    if (line.front() == '#') continue;
    if (tab == std::string::npos) throw ParseError(line_no, "expected code<TAB>values");
    std::string code = line.substr(0, tab);
    auto fields = split_commas(std::string_view(line).substr(tab + 1));
    if (fields.size() != static_cast<std::size_t>(kTypologyFeatures))
      throw ParseError(line_no, "language '" + code + "': expected " +
                                    std::to_string(kTypologyFeatures) + ", got " +
                                    std::to_string(fields.size()));
    Eigen::RowVectorXd v(kTypologyFeatures);
    for (int i = 0; i < kTypologyFeatures; ++i) {
      auto f = fields[i];
      double x = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw ParseError(line_no, "language '" + code + "': invalid value '" + std::string(f) + "'");
      v[i] = x;
    }
    try {
      table.insert(code, TypologyVector(std::move(v)));
    } catch (const DataError& e) {
      throw ParseError(line_no, "language '" + code + "': " + e.what());
    }
  }
  return table;
}

TypologyTable load_typology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_typology(ss.str());
  } catch (const ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string write_typology(const TypologyTable& table) {
  std::string out;
  if (!table.feature_names().empty()) {
    out += "#features\t";
    for (std::size_t i = 0; i < table.feature_names().size(); ++i) {
      if (i) out += ',';
      out += table.feature_names()[i];
    }
    out += '\n';
  }
  char buf[32];
  for (const auto& [code, vec] : table.entries()) {
    out += code;
    out += '\t';
    for (int i = 0; i < kTypologyFeatures; ++i) {
      if (i) out += ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, vec[i]);
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

}  // namespace typar

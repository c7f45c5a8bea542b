#include "typar/bundle.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <zlib.h>

#include "typar/error.hpp"

namespace typar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class S>
constexpr const char* dtype_name() {
  return std::is_same_v<S, float> ? "f32" : "f64";
}

template <class S>
void append_le(std::string& blob, const Matrix<S>& m) {
  const auto start = blob.size();
  blob.resize(start + m.size() * sizeof(S));
  char* out = blob.data() + start;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    S v = m.data()[i];
    char bytes[sizeof(S)];
    std::memcpy(bytes, &v, sizeof(S));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(S));
    std::memcpy(out + i * sizeof(S), bytes, sizeof(S));
  }
}

template <class S>
void read_le(const std::string& blob, std::size_t offset, Matrix<S>& m) {
  const char* in = blob.data() + offset;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    char bytes[sizeof(S)];
    std::memcpy(bytes, in + i * sizeof(S), sizeof(S));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(S));
    std::memcpy(m.data() + i, bytes, sizeof(S));
  }
}

std::uint32_t crc_of(const std::string& blob) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < blob.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(blob.size() - done, 1u << 30));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(blob.data() + done), chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + p.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write to '" + p.string() + "' failed");
}

template <class S>
Model<S> load_typed(const json& manifest, const std::string& blob) {
  const TrainConfig config = parse_config(manifest.at("config").get<std::string>());
  Vocab vocab(manifest.at("vocab").get<std::vector<std::string>>());
  auto labels = manifest.at("labels").get<std::vector<std::string>>();
  auto languages = manifest.at("languages").get<std::vector<std::string>>();
  TypologyTable typology;
  for (const auto& [code, values] : manifest.at("typology").at("vectors").items()) {
    const auto v = values.template get<std::vector<double>>();
    typology.insert(code, TypologyVector(Eigen::Map<const Eigen::RowVectorXd>(v.data(), Eigen::Index(v.size()))));
  }
  typology.set_feature_names(manifest.at("typology").at("features").get<std::vector<std::string>>());

  // Build the structure, then overwrite every array from the blob.
  Rng unused(0);
  auto model = Model<S>::create(config, std::move(vocab), std::move(labels), std::move(languages),
                                std::move(typology), unused);
  auto params = model.all_parameters();
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != params.size())
    throw DataError("bundle holds " + std::to_string(tensors.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    auto& p = *params[i];
    const auto name = t.at("name").get<std::string>();
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto offset = t.at("offset").get<std::size_t>();
    if (name != p.name || rows != p.value.rows() || cols != p.value.cols())
      throw DataError("bundle tensor '" + name + "' (" + std::to_string(rows) + "x" + std::to_string(cols) +
                      ") does not match expected '" + p.name + "' (" + std::to_string(p.value.rows()) + "x" +
                      std::to_string(p.value.cols()) + ")");
    if (offset + p.value.size() * sizeof(S) > blob.size())
      throw DataError("bundle tensor '" + name + "' lies outside the blob");
    read_le(blob, offset, p.value);
  }
  return model;
}

}  // namespace

std::string manifest_path(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "model.json").string();
  return path;
}

template <class S>
void save_model(const Model<S>& model, const std::string& path) {
  const fs::path manifest_file = manifest_path(path);
  fs::path blob_file = manifest_file;
  blob_file.replace_extension(".bin");

  std::string blob;
  json tensors = json::array();
  for (const auto* p : model.all_parameters()) {
    tensors.push_back({{"name", p->name},
                       {"rows", p->value.rows()},
                       {"cols", p->value.cols()},
                       {"offset", blob.size()},
                       {"trainable", p->trainable}});
    append_le(blob, p->value);
  }
  json vectors = json::object();
  for (const auto& [code, v] : model.typology.entries())
    vectors[code] = std::vector<double>(v.values().data(), v.values().data() + v.values().size());

  char crc[9];
  std::snprintf(crc, sizeof crc, "%08x", crc_of(blob));
  json manifest = {
      {"format", "typar-model"},
      {"format_version", kBundleFormatVersion},
      {"dtype", dtype_name<S>()},
      {"byte_order", "little"},
      {"config", write_config(model.config)},
      {"vocab", model.vocab.tokens()},
      {"labels", model.labels},
      {"languages", model.languages},
      {"typology", {{"features", model.typology.feature_names()}, {"vectors", vectors}}},
      {"tensors", tensors},
      {"blob", blob_file.filename().string()},
      {"blob_bytes", blob.size()},
      {"checksum", {{"algorithm", "crc32"}, {"value", crc}}},
  };
  if (manifest_file.has_parent_path()) fs::create_directories(manifest_file.parent_path());
  write_file(blob_file, blob);
  write_file(manifest_file, manifest.dump(1) + "\n");
}

AnyModel load_model(const std::string& path) {
  const fs::path manifest_file = manifest_path(path);
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_file));
  } catch (const json::exception& e) {
    throw DataError("model manifest '" + manifest_file.string() + "' is not valid JSON: " + e.what());
  }
  try {
    if (manifest.value("format", "") != "typar-model")
      throw DataError("'" + manifest_file.string() + "' is not a model manifest");
    const int version = manifest.at("format_version").get<int>();
    if (version != kBundleFormatVersion)
      throw FormatVersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kBundleFormatVersion) + ")");
    if (manifest.at("byte_order").get<std::string>() != "little")
      throw DataError("unsupported byte order in model manifest");

    const std::string blob = read_file(manifest_file.parent_path() / manifest.at("blob").get<std::string>());
    const auto expected_bytes = manifest.at("blob_bytes").get<std::size_t>();
    if (blob.size() != expected_bytes)
      throw ChecksumError("model blob has " + std::to_string(blob.size()) + " bytes, manifest records " +
                          std::to_string(expected_bytes) + " (truncated or altered file)");
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", crc_of(blob));
    const auto& sum = manifest.at("checksum");
    if (sum.at("algorithm").get<std::string>() != "crc32" || sum.at("value").get<std::string>() != crc)
      throw ChecksumError("model blob checksum mismatch");

    const auto dtype = manifest.at("dtype").get<std::string>();
    if (dtype == "f32") return load_typed<float>(manifest, blob);
    if (dtype == "f64") return load_typed<double>(manifest, blob);
    throw DataError("unknown dtype '" + dtype + "' in model manifest");
  } catch (const json::exception& e) {
    throw DataError("malformed model manifest: " + std::string(e.what()));
  } catch (const UsageError& e) {
    throw DataError("model manifest holds an invalid configuration: " + std::string(e.what()));
  }
}

template void save_model(const Model<float>&, const std::string&);
template void save_model(const Model<double>&, const std::string&);

}  // namespace typar

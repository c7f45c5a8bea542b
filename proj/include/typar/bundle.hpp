#pragma once

#include <string>
#include <variant>

#include "typar/model.hpp"

namespace typar {

inline constexpr int kBundleFormatVersion = 1;

// A bundle is a JSON manifest (format version, metadata, tensor shapes and
// byte offsets, blob checksum) next to a little-endian binary blob holding
// every parameter array. `path` names the manifest, or a directory in which
// "model.json" and "model.bin" are used.
template <class S>
void save_model(const Model<S>& model, const std::string& path);

using AnyModel = std::variant<Model<float>, Model<double>>;

// Throws FormatVersionError, ChecksumError (also for truncated blobs) or
// DataError for anything else malformed.
AnyModel load_model(const std::string& path);

std::string manifest_path(const std::string& path);

}  // namespace typar

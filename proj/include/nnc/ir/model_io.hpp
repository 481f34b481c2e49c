#pragma once

#include <filesystem>
#include <json.hpp>

#include "nnc/ir/graph.hpp"

namespace nnc {

inline constexpr int kModelFormatVersion = 1;

/// Parses a model document. Throws SchemaError (message starts with the JSON
/// path of the offending value, e.g. "$.nodes[2].attrs.kernel") or
/// VersionError. The result is not validated; call validate() separately.
Graph load_model(const nlohmann::json& document);

/// Serializes `graph` with every attribute spelled out. Weight arrays are
/// nested in [filter][in_channel][tap] / [unit][in_feature] order.
nlohmann::json save_model(const Graph& graph);

Graph load_model_file(const std::filesystem::path& path);
void save_model_file(const Graph& graph, const std::filesystem::path& path);

/// Reads a whole JSON file; IoError when unreadable, SchemaError on syntax errors.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& value, const std::filesystem::path& path);

}  // namespace nnc

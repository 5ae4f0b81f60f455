#pragma once

#include "daef/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace daef {

using Json = nlohmann::json;

// Matrices travel as row-major nested arrays, vectors as flat arrays.
Json matrix_to_json(const Matrix& m);
Json vector_to_json(const Vector& v);

/// Throws SchemaError on ragged rows, non-numeric or non-finite entries.
Matrix matrix_from_json(const Json& j, std::string_view field);
Vector vector_from_json(const Json& j, std::string_view field);

/// Returns j[key] or throws SchemaError naming the missing field.
const Json& require_field(const Json& j, std::string_view key);

/// 64-bit FNV-1a, lower-case hex.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace daef

#pragma once

#include "daef/json_util.hpp"
#include "daef/model.hpp"

#include <filesystem>
#include <string>

namespace daef {

inline constexpr int kModelFormatVersion = 1;

Json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const Json& j);

Json threshold_to_json(const FittedThreshold& t);
FittedThreshold threshold_from_json(const Json& j);

Json partial_to_json(const RolannPartial& p);
RolannPartial partial_from_json(const Json& j);

Json model_to_json(const DaefModel& model);

/// Throws VersionMismatch or SchemaError.
DaefModel model_from_json(const Json& doc);

/// Floats are written in shortest round-trip form, so save/load is bitwise.
std::string save_model_string(const DaefModel& model);

/// Throws CorruptPayload when the text is not valid JSON.
DaefModel load_model_string(const std::string& text);

/// Writes to a temporary sibling and renames it into place.
void save_model(const DaefModel& model, const std::filesystem::path& path);
DaefModel load_model(const std::filesystem::path& path);

/// Hash of the serialised model; equal hashes mean bitwise-equal models.
std::string model_fingerprint(const DaefModel& model);

/// Atomic text file write shared by the CLI outputs.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace daef

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fedmia/nn.hpp"

namespace fedmia {

/// Hex-float text ("%a"), exact for every finite double.
std::string encode_double(double v);
double decode_double(const std::string& s);

/// Checkpoint document: widths, activations, loss kind and row-major
/// hex-encoded parameter arrays per layer.
nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& doc);

void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);

} // namespace fedmia

#pragma once

#include "cinnrl/cinn/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace cinnrl::cinn {

inline constexpr const char* kCheckpointFormat = "cinnrl-cinn";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const CinnModel& model);
/// Throws ParseError naming the missing or malformed field.
CinnModel model_from_json(const nlohmann::json& doc);

/// Writes through a temporary file and a rename.
void save_model(const CinnModel& model, const std::filesystem::path& path);
CinnModel load_model(const std::filesystem::path& path);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& rows, Index cols = -1);
nlohmann::json mlp_to_json(const num::Mlp& net);
num::Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace cinnrl::cinn

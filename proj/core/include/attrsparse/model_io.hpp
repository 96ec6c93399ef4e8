#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "attrsparse/models.hpp"

namespace attrsparse {

using AnyModel = std::variant<LinearModel, MlpModel, OneVsAllModel>;

/// JSON with kind, shapes and parameters as shortest round-trip decimal
/// strings, so save/load is bit-exact.
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);

void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

}  // namespace attrsparse

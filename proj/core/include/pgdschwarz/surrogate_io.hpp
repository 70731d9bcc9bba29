#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

#include "pgdschwarz/subdomain_models.hpp"

namespace pgdschwarz {

// One directory per model: manifest.json, axes.bin, source.pgd, boundary_NNN.pgd.
// `extra` is stored verbatim under the manifest key "extra".
void save_model(const std::filesystem::path& dir, const SurrogateModel& model, const nlohmann::json& extra = {});
SurrogateModel load_model(const std::filesystem::path& dir, nlohmann::json* extra = nullptr);

nlohmann::json log_to_json(const SubproblemLog& log);
SubproblemLog log_from_json(const nlohmann::json& j);

}  // namespace pgdschwarz

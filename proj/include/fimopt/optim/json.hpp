#pragma once

#include <json.hpp>

#include "fimopt/matrix.hpp"
#include "fimopt/optim/optimizer.hpp"

// JSON mapping for hyperparameter blocks and optimizer states. Config readers
// accept partial objects: missing keys keep their defaults, unknown keys throw
// ConfigError.
namespace fimopt::optim {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);
void to_json(nlohmann::json& j, const RacsConfig& c);
void from_json(const nlohmann::json& j, RacsConfig& c);
void to_json(nlohmann::json& j, const AliceConfig& c);
void from_json(const nlohmann::json& j, AliceConfig& c);
void to_json(nlohmann::json& j, const AliceCConfig& c);
void from_json(const nlohmann::json& j, AliceCConfig& c);
void to_json(nlohmann::json& j, const SoapConfig& c);
void from_json(const nlohmann::json& j, SoapConfig& c);
void to_json(nlohmann::json& j, const ShampooConfig& c);
void from_json(const nlohmann::json& j, ShampooConfig& c);
void to_json(nlohmann::json& j, const GaloreConfig& c);
void from_json(const nlohmann::json& j, GaloreConfig& c);

/// Reads the block for `kind` from an object keyed by optimizer name.
void apply_hyper(const nlohmann::json& j, OptimizerKind kind, Hyper& hyper);

}  // namespace fimopt::optim
